import random
from fractions import Fraction

import pytest

from oracles import random_player
from probefp.automata import (
    PayoffMatrix,
    Probe,
    joss_ann,
    parse_player,
    parse_probe,
    validate_probe,
)
from probefp.errors import (
    PlayerFormatError,
    ProbeFormatError,
    ProbeValidationError,
)
from probefp.polyexpr import ParamExpr, expr_parse

TFT_TEXT = """# echoes the opponent
player TFT
alphabet C D
start 0 C
0 C -> 0 C
0 D -> 0 D
"""

PAVLOV_TEXT = """player PAVLOV
alphabet C D
start 0 C
0 C -> 0 C
0 D -> 1 D
1 C -> 1 D
1 D -> 0 C
"""


def outcomes_as_dict(outcomes):
    return {(a, s): w for a, s, w in outcomes}


# -- player parsing -----------------------------------------------------------


def test_parse_tft():
    m = parse_player(TFT_TEXT)
    assert m.name == "TFT"
    assert m.n_states == 1
    assert m.initial_action == "C"
    assert m.step == {(0, "C"): (0, "C"), (0, "D"): (0, "D")}


def test_parse_pavlov():
    m = parse_player(PAVLOV_TEXT)
    assert m.n_states == 2
    assert m.step[(0, "D")] == (1, "D")
    assert m.step[(1, "D")] == (0, "C")


def test_missing_transition_names_state_and_input():
    text = "player P\nalphabet C D\nstart 0 C\n0 C -> 0 C\n"
    with pytest.raises(PlayerFormatError) as err:
        parse_player(text)
    assert "'0'" in str(err.value) and "'D'" in str(err.value)


def test_duplicate_rule():
    text = "player P\nalphabet C D\nstart 0 C\n0 C -> 0 C\n0 C -> 0 D\n0 D -> 0 D\n"
    with pytest.raises(PlayerFormatError, match="duplicate"):
        parse_player(text)


def test_unreachable_state():
    text = (
        "player P\nalphabet C D\nstart 0 C\n0 C -> 0 C\n0 D -> 0 D\n"
        "1 C -> 1 C\n1 D -> 1 D\n"
    )
    with pytest.raises(PlayerFormatError, match="unreachable"):
        parse_player(text)


def test_action_outside_alphabet():
    text = "player P\nalphabet C D\nstart 0 X\n0 C -> 0 C\n0 D -> 0 D\n"
    with pytest.raises(PlayerFormatError):
        parse_player(text)


def test_syntax_error_carries_line_number():
    text = "player P\nalphabet C D\nstart 0 C\n0 C 0 C\n"
    with pytest.raises(PlayerFormatError) as err:
        parse_player(text)
    assert err.value.line == 4


def test_parse_determinism():
    a = parse_player(PAVLOV_TEXT)
    b = parse_player(PAVLOV_TEXT)
    assert a == b


# -- probe parsing ------------------------------------------------------------


def test_parse_constant_probe():
    p = parse_probe(
        "probe K\nalphabet C D\ninit C 0 : 1\n0 C -> C 0 : 1\n0 D -> C 0 : 1\n"
    )
    assert p.n_states == 1
    assert outcomes_as_dict(p.init) == {("C", 0): ParamExpr.one()}


def test_probe_sum_violation_reports_residual():
    text = (
        "probe BAD\nalphabet C D\ninit C 0 : x\ninit D 0 : y\n"
        "0 C -> C 0 : 1\n0 D -> C 0 : 1\n"
    )
    with pytest.raises(ProbeValidationError) as err:
        parse_probe(text)
    assert "-x - y + 1" in str(err.value)


def test_probe_negative_weight_reports_lattice_point():
    text = (
        "probe NEG\nalphabet C D\ninit C 0 : 1\n"
        "0 C -> C 0 : x - 1/2\n0 C -> D 0 : 3/2 - x\n0 D -> C 0 : 1\n"
    )
    with pytest.raises(ProbeValidationError) as err:
        parse_probe(text)
    assert "(0.0, 0.0)" in str(err.value)


def test_probe_missing_group():
    text = "probe P\nalphabet C D\ninit C 0 : 1\n0 C -> C 0 : 1\n"
    with pytest.raises(ProbeFormatError, match="'D'"):
        parse_probe(text)


def test_probe_merges_duplicate_outcomes():
    p = parse_probe(
        "probe M\nalphabet C D\ninit C 0 : 1\n"
        "0 C -> C 0 : 1/2\n0 C -> C 0 : 1/2\n0 D -> C 0 : 1\n"
    )
    assert outcomes_as_dict(p.step[(0, "C")]) == {("C", 0): ParamExpr.one()}


# -- validate_probe -----------------------------------------------------------


def test_validate_joss_ann_tft():
    report = validate_probe(joss_ann(parse_player(TFT_TEXT)))
    assert report.ok
    assert all(r.is_zero() for r in report.sum_residuals.values())
    assert report.min_weight == 0.0


def test_validate_flags_negative_affine_weight():
    probe = Probe(
        name="H",
        alphabet=("C", "D"),
        state_names=("0",),
        init=(("C", 0, ParamExpr.one()),),
        step={
            (0, "C"): (
                ("C", 0, expr_parse("2*x")),
                ("D", 0, expr_parse("1 - 2*x")),
            ),
            (0, "D"): (("C", 0, ParamExpr.one()),),
        },
    )
    report = validate_probe(probe)
    assert not report.ok
    assert all(r.is_zero() for r in report.sum_residuals.values())
    assert report.min_weight == -1.0
    assert report.min_weight_point == (1.0, 0.0)
    assert report.vertex_violations  # affine weights checked exactly at vertices


def test_validate_constant_probe_min_weight_one():
    p = parse_probe(
        "probe K\nalphabet C D\ninit C 0 : 1\n0 C -> C 0 : 1\n0 D -> C 0 : 1\n"
    )
    report = validate_probe(p)
    assert report.ok
    assert report.min_weight == 1.0


# -- joss_ann -----------------------------------------------------------------


def test_joss_ann_tft_merges_base_move():
    ja = joss_ann(parse_player(TFT_TEXT))
    assert outcomes_as_dict(ja.step[(0, "C")]) == {
        ("C", 0): expr_parse("1 - y"),
        ("D", 0): expr_parse("y"),
    }
    assert outcomes_as_dict(ja.init) == {
        ("C", 0): expr_parse("1 - y"),
        ("D", 0): expr_parse("y"),
    }


def test_joss_ann_alld():
    alld = parse_player(
        "player ALLD\nalphabet C D\nstart 0 D\n0 C -> 0 D\n0 D -> 0 D\n"
    )
    ja = joss_ann(alld)
    assert outcomes_as_dict(ja.step[(0, "C")]) == {
        ("C", 0): expr_parse("x"),
        ("D", 0): expr_parse("1 - x"),
    }


def test_joss_ann_at_origin_reduces_to_base():
    rng = random.Random(4321)
    zero = Fraction(0)
    for _ in range(10):
        base = random_player(rng, 4)
        ja = joss_ann(base)
        for (state, action), (nxt, out) in base.step.items():
            dist = {
                (a, s): w.evaluate_exact(zero, zero) for a, s, w in ja.step[(state, action)]
            }
            assert dist.get((out, nxt)) == 1
            assert sum(dist.values()) == 1


def test_joss_ann_forced_cooperate_limit():
    ja = joss_ann(parse_player(TFT_TEXT))
    one = Fraction(1)
    for outcomes in list(ja.step.values()) + [ja.init]:
        mass_on_c = sum(
            w.evaluate_exact(one, Fraction(0)) for a, s, w in outcomes if a == "C"
        )
        assert mass_on_c == 1


def test_joss_ann_requires_binary_alphabet():
    machine = parse_player(
        "player T\nalphabet A B\nstart 0 A\n0 A -> 0 A\n0 B -> 0 B\n"
    )
    with pytest.raises(ProbeValidationError):
        joss_ann(machine)


def test_probe_format_accepts_wider_alphabets():
    p = parse_probe(
        "probe TRI\nalphabet C D X\ninit C 0 : 1\n"
        "0 C -> C 0 : 1\n0 D -> C 0 : 1\n0 X -> C 0 : 1\n"
    )
    assert p.alphabet == ("C", "D", "X")
    assert validate_probe(p).ok


# -- payoff matrix ------------------------------------------------------------


def test_default_payoff():
    payoff = PayoffMatrix.default_prisoners_dilemma()
    assert payoff.value("C", "C") == 3
    assert payoff.value("D", "C") == 5
    payoff.validate_total(("C", "D"))
    assert payoff.bounds() == (Fraction(0), Fraction(5))


def test_payoff_overrides_and_scaling():
    payoff = PayoffMatrix.default_prisoners_dilemma()
    changed = payoff.with_overrides([("C", "C", Fraction(7))])
    assert changed.value("C", "C") == 7
    assert payoff.value("C", "C") == 3
    assert changed.scaled(Fraction(1, 2)).value("C", "C") == Fraction(7, 2)
