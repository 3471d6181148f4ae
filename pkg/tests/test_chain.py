import random
from fractions import Fraction

import numpy as np
import pytest

from oracles import (
    cesaro_average,
    cesaro_average_literal,
    mixing_probe,
    random_interior_point,
    random_player,
    random_probe,
    strongly_connected_player,
)
from probefp.automata import joss_ann
from probefp.chain import (
    NumericChain,
    closed_classes,
    compose,
    evaluate,
    expected_payoff,
    expected_payoff_exact,
    limit_distribution,
    solve_linear,
)
from probefp.errors import (
    AlphabetMismatchError,
    OutOfSimplexError,
    SingularSystemError,
)
from probefp.polyexpr import expr_parse


# -- compose ------------------------------------------------------------------


def test_compose_allc_vs_ja_tft(players, ja_tft, payoff):
    chain = compose(players["allc"], ja_tft, payoff)
    assert [(s.player_action, s.probe_action) for s in chain.states] == [
        ("C", "C"),
        ("C", "D"),
    ]
    expected_row = {0: expr_parse("1 - y"), 1: expr_parse("y")}
    assert chain.trans[0] == expected_row
    assert chain.trans[1] == expected_row
    assert chain.payoff == (Fraction(3), Fraction(0))


def test_compose_tft_vs_constant_c(players, const_c_probe, payoff):
    chain = compose(players["tft"], const_c_probe, payoff)
    assert chain.n_states == 1
    assert chain.states[0].player_action == "C"
    assert chain.states[0].probe_action == "C"
    assert chain.trans[0] == {0: expr_parse("1")}


def test_compose_alld_vs_ja_tft(players, ja_tft, payoff):
    chain = compose(players["alld"], ja_tft, payoff)
    assert [(s.player_action, s.probe_action) for s in chain.states] == [
        ("D", "C"),
        ("D", "D"),
    ]
    expected_row = {0: expr_parse("x"), 1: expr_parse("1 - x")}
    assert chain.trans[0] == expected_row
    assert chain.trans[1] == expected_row


def test_compose_alphabet_mismatch(players, payoff):
    other = random_player(random.Random(3), 2)
    other.alphabet = ("D", "C")  # same symbols, different declared order
    with pytest.raises(AlphabetMismatchError):
        compose(other, joss_ann(players["tft"]), payoff)


def test_compose_wider_alphabet_needs_total_payoff(payoff):
    from fractions import Fraction as F

    from probefp.automata import parse_player, parse_probe
    from probefp.errors import PayoffError

    player = parse_player(
        "player TRIP\nalphabet C D X\nstart 0 C\n"
        "0 C -> 0 C\n0 D -> 0 C\n0 X -> 0 C\n"
    )
    probe = parse_probe(
        "probe TRI\nalphabet C D X\ninit C 0 : 1\n"
        "0 C -> C 0 : 1\n0 D -> C 0 : 1\n0 X -> C 0 : 1\n"
    )
    with pytest.raises(PayoffError):
        compose(player, probe, payoff)
    total = payoff.with_overrides(
        [(a, b, F(1)) for a in "CDX" for b in "CDX" if "X" in (a, b)]
    )
    chain = compose(player, probe, total)
    assert chain.n_states == 1


def test_row_sum_identity_on_random_corpus(payoff):
    rng = random.Random(1234)
    for _ in range(15):
        player = random_player(rng, 4)
        probe = random_probe(rng, 4)
        chain = compose(player, probe, payoff)
        assert all(r.is_zero() for r in chain.row_sum_residuals())
        assert chain.init_residual().is_zero()


# -- evaluate -----------------------------------------------------------------


def test_evaluate_example(players, ja_tft, payoff):
    chain = compose(players["allc"], ja_tft, payoff)
    numeric = evaluate(chain, 0.25, 0.25)
    np.testing.assert_allclose(
        numeric.matrix, [[0.75, 0.25], [0.75, 0.25]], atol=1e-15
    )
    assert numeric.payoff.tolist() == [3.0, 0.0]


def test_evaluate_out_of_simplex(players, ja_tft, payoff):
    chain = compose(players["allc"], ja_tft, payoff)
    with pytest.raises(OutOfSimplexError):
        evaluate(chain, 0.6, 0.6)
    with pytest.raises(OutOfSimplexError):
        evaluate(chain, -0.1, 0.5)


def test_evaluate_constant_chain(players, const_c_probe, payoff):
    chain = compose(players["tft"], const_c_probe, payoff)
    numeric = evaluate(chain, 0.9, 0.05)
    assert numeric.matrix.tolist() == [[1.0]]


# -- closed classes -----------------------------------------------------------


def _numeric(matrix, init):
    n = len(matrix)
    return NumericChain(
        point=(0.0, 0.0),
        matrix=np.array(matrix, dtype=float),
        init=np.array(init, dtype=float),
        payoff=np.zeros(n),
    )


def test_closed_classes_two_absorbing():
    decomp = closed_classes(_numeric([[1, 0], [0, 1]], [0.5, 0.5]))
    assert [(c.states, c.closed) for c in decomp.classes] == [
        ((0,), True),
        ((1,), True),
    ]


def test_closed_classes_cycle():
    decomp = closed_classes(_numeric([[0, 1], [1, 0]], [1, 0]))
    assert [(c.states, c.closed) for c in decomp.classes] == [((0, 1), True)]


def test_closed_classes_transient():
    decomp = closed_classes(_numeric([[0.5, 0.5], [0, 1]], [1, 0]))
    assert [(c.states, c.closed) for c in decomp.classes] == [
        ((0,), False),
        ((1,), True),
    ]


# -- limit distributions -------------------------------------------------------


def test_limit_identical_rows():
    m = _numeric([[0.75, 0.25], [0.75, 0.25]], [0.1, 0.9])
    np.testing.assert_allclose(limit_distribution(m).pi, [0.75, 0.25], atol=1e-12)


def test_limit_periodic_cycle():
    m = _numeric([[0, 1], [1, 0]], [1, 0])
    np.testing.assert_allclose(limit_distribution(m).pi, [0.5, 0.5], atol=1e-12)


def test_limit_absorbing_preserves_init():
    m = _numeric([[1, 0], [0, 1]], [0.3, 0.7])
    np.testing.assert_allclose(limit_distribution(m).pi, [0.3, 0.7], atol=1e-12)


def test_limit_transient_absorption():
    m = _numeric([[0.5, 0.25, 0.25], [0, 1, 0], [0, 0, 1]], [1, 0, 0])
    np.testing.assert_allclose(limit_distribution(m).pi, [0, 0.5, 0.5], atol=1e-12)


# -- expected payoff -----------------------------------------------------------


def test_expected_payoff_examples():
    pi = limit_distribution(_numeric([[0.75, 0.25], [0.75, 0.25]], [1, 0]))
    assert expected_payoff(pi, [Fraction(3), Fraction(0)]) == 2.25
    pi2 = limit_distribution(_numeric([[0, 1], [1, 0]], [1, 0]))
    assert expected_payoff(pi2, [Fraction(5), Fraction(1)]) == 3.0
    pi3 = limit_distribution(_numeric([[1.0]], [1.0]))
    assert expected_payoff(pi3, [Fraction(3)]) == 3.0


def test_expected_payoff_dimension_check():
    pi = limit_distribution(_numeric([[1.0]], [1.0]))
    with pytest.raises(ValueError):
        expected_payoff(pi, [Fraction(1), Fraction(2)])


def test_payoff_linearity_is_exact(players, ja_tft, payoff):
    chain = compose(players["tft"], ja_tft, payoff)
    pi = limit_distribution(evaluate(chain, 0.3, 0.2))
    base = expected_payoff_exact(pi, chain.payoff)
    for c in (Fraction(4), Fraction(1, 2), Fraction(7, 3), Fraction(-2)):
        scaled = expected_payoff_exact(pi, [c * p for p in chain.payoff])
        assert scaled == c * base


def test_payoff_bounds_property(payoff):
    rng = random.Random(99)
    for _ in range(10):
        player = random_player(rng, 4)
        probe = random_probe(rng, 4)
        chain = compose(player, probe, payoff)
        x, y = random_interior_point(rng)
        pi = limit_distribution(evaluate(chain, x, y))
        value = expected_payoff(pi, chain.payoff)
        low, high = payoff.bounds()
        assert float(low) - 1e-12 <= value <= float(high) + 1e-12


# -- solver internals ----------------------------------------------------------


def test_solve_linear_matches_numpy():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = rng.integers(1, 8)
        a = rng.normal(size=(n, n))
        b = rng.normal(size=n)
        x = solve_linear(a, b)
        np.testing.assert_allclose(x, np.linalg.solve(a, b), atol=1e-9)


def test_solve_linear_singular_raises():
    with pytest.raises(SingularSystemError):
        solve_linear(np.array([[1.0, 2.0], [2.0, 4.0]]), np.array([1.0, 1.0]))


def test_cesaro_splitting_matches_literal_loop():
    rng = np.random.default_rng(5)
    for n in (1, 2, 3, 17, 1000, 4219):
        m = rng.random((6, 6))
        m /= m.sum(axis=1, keepdims=True)
        init = rng.random(6)
        init /= init.sum()
        np.testing.assert_allclose(
            cesaro_average(m, init, n),
            cesaro_average_literal(m, init, n),
            atol=1e-12,
        )


def test_limit_matches_power_iteration_oracle(payoff):
    # fast-mixing corpus so the N = 10^6 Cesaro oracle is converged at 1e-6
    rng = random.Random(8)
    for _ in range(8):
        player = strongly_connected_player(rng, 4)
        probe = mixing_probe(rng, 4)
        chain = compose(player, probe, payoff)
        for _ in range(4):
            x, y = random_interior_point(rng, margin=0.1)
            numeric = evaluate(chain, x, y)
            pi = limit_distribution(numeric).pi
            oracle = cesaro_average(numeric.matrix, numeric.init, 10**6)
            assert np.max(np.abs(pi - oracle)) <= 1e-6
            assert np.max(np.abs(pi @ numeric.matrix - pi)) <= 1e-9
            assert pi.min() >= 0
            assert abs(pi.sum() - 1) <= 1e-10
