"""Closed-class word lists for the parser-free POS tagger and clause counter.

These are versioned data: edits change structure-similarity scores, so keep
them append-mostly and note changes in the changelog.
"""

from __future__ import annotations

PRONOUNS = frozenset("""
i me my mine myself we us our ours ourselves you your yours yourself yourselves
he him his himself she her hers herself it its itself they them their theirs
themselves who whom whose which that this these those what something anything
nothing everything someone anyone everyone nobody somebody anybody one
""".split())

DETERMINERS = frozenset("""
a an the each every either neither some any no all both half several many much
few little other another such
""".split())

PREPOSITIONS = frozenset("""
of in to for with on at by from up about into over after beneath under above
below between among through during without within along across behind beyond
near toward towards upon off onto out down around past per via
""".split())

CONJUNCTIONS = frozenset("""
and or but nor yet so because although though while since when whenever where
wherever if unless until before after as whereas once than whether
""".split())

# Auxiliaries plus frequent irregular verbs; tagged verb by list membership.
VERBS = frozenset("""
be am is are was were been being have has had having do does did done doing
can could will would shall should may might must ought
say says said go goes went gone make makes made take takes took taken get gets
got gotten see sees saw seen know knows knew known come comes came think thinks
thought find finds found give gives gave given tell tells told become becomes
became show shows shown leave leaves left feel feels felt put puts bring brings
brought begin begins began keep keeps kept hold holds held write writes wrote
written stand stands stood hear hears heard let lets mean means meant set sets
meet meets met run runs ran pay pays paid sit sits sat speak speaks spoke
spoken lie lies lay read reads grow grows grew threw throw throws flew fly
flies drew draw draws rode ride rides drove drive drives broke break breaks
chose choose chooses froze freeze freezes understood understand understands
bought buy buys fought fight fights caught catch catches taught teach teaches
sold sell sells swam swim swims won win wins wore wear wears ate eat eats
slept sleep sleeps sang sing sings rang ring rings drank drink drinks
built build builds sent send sends spent spend spends lost lose loses
""".split())

#: Coordinators/subordinators that promote a comma or semicolon to a clause
#: boundary in the clause-count proxy.
CLAUSE_CONNECTORS = frozenset("""
and or but nor yet so because although though while since when where which who
that if unless after before as whereas until whenever
""".split())

#: Union used for the function-word ratio.
FUNCTION_WORDS = PRONOUNS | DETERMINERS | PREPOSITIONS | CONJUNCTIONS | frozenset("""
be am is are was were been being have has had do does did can could will would
shall should may might must not n't there here
""".split())
