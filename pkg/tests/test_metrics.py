import math
import random

import numpy as np
import pytest

from oracles import exact_l2_distance, random_polynomial
from probefp.fingerprint import fingerprint_grid, pointwise_fingerprint, symbolic_fingerprint
from probefp.metrics import (
    DistanceMatrix,
    distance_matrix,
    l2_distance,
    make_grid_evaluator,
)


def poly_evaluable(p):
    return lambda x, y: p.evaluate(x, y)


def test_distance_to_self_is_zero(players, ja_tft, payoff):
    f = symbolic_fingerprint(players["tft"], ja_tft, payoff)
    assert l2_distance(f, f, 30) == 0.0


def test_constant_distance_exact_at_any_resolution():
    c3 = lambda x, y: 3.0
    c1 = lambda x, y: 1.0
    for n in (1, 2, 7, 40):
        assert l2_distance(c3, c1, n) == pytest.approx(math.sqrt(2), abs=1e-9)


def test_allc_alld_distance_matches_analytic(players, ja_tft, payoff):
    # integral of (2 - 4x - 3y)^2 over the triangle, via the exact monomial oracle
    from probefp.polyexpr import expr_parse

    f_allc = expr_parse("3 - 3*y")
    f_alld = expr_parse("1 + 4*x")
    exact = exact_l2_distance(f_allc, f_alld)
    assert exact == pytest.approx(math.sqrt(5 / 12), abs=1e-15)

    fc = symbolic_fingerprint(players["allc"], ja_tft, payoff)
    fd = symbolic_fingerprint(players["alld"], ja_tft, payoff)
    assert l2_distance(fc, fd, 200) == pytest.approx(exact, abs=1e-3)


def test_quadrature_convergence_second_order():
    rng = random.Random(77)
    for _ in range(5):
        p = random_polynomial(rng, max_degree=3)
        q = random_polynomial(rng, max_degree=3)
        exact = exact_l2_distance(p, q)
        if exact == 0.0:
            continue
        errors = [
            abs(l2_distance(poly_evaluable(p), poly_evaluable(q), n) - exact)
            for n in (25, 50, 100)
        ]
        for coarse, fine in zip(errors, errors[1:]):
            if coarse > 1e-13:
                assert coarse / max(fine, 1e-300) >= 3.0


def test_metric_axioms_on_random_triples():
    rng = random.Random(2024)
    for _ in range(25):
        f, g, h = (poly_evaluable(random_polynomial(rng)) for _ in range(3))
        dfg = l2_distance(f, g, 40)
        dgf = l2_distance(g, f, 40)
        dfh = l2_distance(f, h, 40)
        dgh = l2_distance(g, h, 40)
        assert dfg >= 0.0
        assert dfg == dgf
        assert dfh <= dfg + dgh + 1e-9


def test_scale_property(players, ja_tft, payoff):
    base_c = pointwise_fingerprint(players["allc"], ja_tft, payoff)
    base_d = pointwise_fingerprint(players["alld"], ja_tft, payoff)
    reference = l2_distance(base_c, base_d, 30)
    for c in (4, 0.5, 3):
        scaled_payoff = payoff.scaled(c)
        sc = pointwise_fingerprint(players["allc"], ja_tft, scaled_payoff)
        sd = pointwise_fingerprint(players["alld"], ja_tft, scaled_payoff)
        scaled = l2_distance(sc, sd, 30)
        assert scaled == pytest.approx(abs(c) * reference, rel=1e-12)


def test_grid_interpolation_matches_symbolic(players, ja_tft, payoff):
    # AllC's fingerprint is affine, so interpolation is exact up to roundoff
    grid_c = fingerprint_grid(players["allc"], ja_tft, payoff, 20)
    closed_c = symbolic_fingerprint(players["allc"], ja_tft, payoff)
    assert l2_distance(make_grid_evaluator(grid_c), closed_c, 50) <= 1e-12
    # TFT's fingerprint has a directional discontinuity at the origin corner,
    # so a lattice interpolant carries O(1) local error in those corner cells
    grid_t = fingerprint_grid(players["tft"], ja_tft, payoff, 20)
    interpolated = make_grid_evaluator(grid_t)
    closed_t = symbolic_fingerprint(players["tft"], ja_tft, payoff)
    assert l2_distance(interpolated, closed_t, 50) <= 2e-2
    # interpolation reproduces lattice nodes exactly
    for (i, j), value in grid_t.values.items():
        assert interpolated(i / 20, j / 20) == pytest.approx(value, abs=1e-12)


def test_distance_matrix_single_entry():
    matrix = distance_matrix([("only", lambda x, y: 1.0)], 10)
    assert matrix.names == ("only",)
    assert matrix.d.tolist() == [[0.0]]


def test_distance_matrix_allc_alld(players, ja_tft, payoff):
    fc = symbolic_fingerprint(players["allc"], ja_tft, payoff)
    fd = symbolic_fingerprint(players["alld"], ja_tft, payoff)
    matrix = distance_matrix([("ALLC", fc), ("ALLD", fd)], 200)
    assert matrix.d[0, 0] == 0.0
    assert matrix.d[1, 1] == 0.0
    assert matrix.d[0, 1] == matrix.d[1, 0]
    assert matrix.d[0, 1] == pytest.approx(math.sqrt(5 / 12), abs=1e-3)


def test_distance_matrix_identical_copies(players, ja_tft, payoff):
    f = symbolic_fingerprint(players["allc"], ja_tft, payoff)
    matrix = distance_matrix([("A", f), ("B", f)], 60)
    assert abs(matrix.d[0, 1]) <= 1e-12


def test_distance_matrix_duplicate_names():
    f = lambda x, y: 0.0
    with pytest.raises(ValueError):
        distance_matrix([("A", f), ("A", f)], 10)


def test_distance_matrix_csv_layout():
    matrix = DistanceMatrix(names=("A", "B"), d=np.array([[0.0, 1.5], [1.5, 0.0]]))
    lines = matrix.to_csv().splitlines()
    assert lines[0] == "name,A,B"
    assert lines[1] == "A,0,1.5"
    assert lines[2] == "B,1.5,0"
