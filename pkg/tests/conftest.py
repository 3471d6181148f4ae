import pytest

from probefp import PayoffMatrix, joss_ann, load_bundled_strategy, parse_probe

BUNDLED = ("tft", "allc", "alld", "pavlov", "grim")

CONST_C_PROBE = """probe CONSTC
alphabet C D
init C 0 : 1
0 C -> C 0 : 1
0 D -> C 0 : 1
"""


@pytest.fixture(scope="session")
def payoff():
    return PayoffMatrix.default_prisoners_dilemma()


@pytest.fixture(scope="session")
def players():
    return {name: load_bundled_strategy(name) for name in BUNDLED}


@pytest.fixture(scope="session")
def ja_tft(players):
    return joss_ann(players["tft"])


@pytest.fixture(scope="session")
def const_c_probe():
    return parse_probe(CONST_C_PROBE)
