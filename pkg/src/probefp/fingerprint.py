"""Fingerprints: numeric grids over the parameter triangle and exact
rational-function closed forms.

The fingerprint of a player against a probe is the limiting expected
per-round payoff of their joint chain as a function of the probe parameters
(x, y).  Grids sample it on the lattice {(i/n, j/n) : i + j <= n}; the
closed form solves the stationary system symbolically over the polynomial
ring using fraction-free (Bareiss) elimination, yielding a rational function
of (x, y).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .automata import PayoffMatrix, PlayerMachine, Probe
from .chain import (
    ParamChain,
    closed_classes,
    compose,
    evaluate,
    expected_payoff,
    limit_distribution,
)
from .errors import ExpressionSwellError, ReducibleChainError
from .polyexpr import ParamExpr, RationalFn, exact_div, ratfn_eval

CESARO = "cesaro"
INTERIOR_OFFSET = "interior_offset"
BOUNDARY_MODES = (CESARO, INTERIOR_OFFSET)

# Distance by which interior_offset mode pulls boundary points toward the
# triangle centroid (1/3, 1/3).
OFFSET_EPS = 1e-6
BOUNDARY_TOL = 1e-12

# Abort symbolic elimination once any intermediate polynomial grows past this
# many terms.
TERM_CAP = 200_000

# Lattice used to cross-check closed forms against the numeric path.
VALIDATION_N = 20
AGREEMENT_TOL = 1e-8

GENERIC_POINT = (1.0 / 3.0, 1.0 / 3.0)


def _offset_toward_centroid(x: float, y: float) -> tuple[float, float]:
    on_boundary = x <= BOUNDARY_TOL or y <= BOUNDARY_TOL or x + y >= 1 - BOUNDARY_TOL
    if not on_boundary:
        return x, y
    dx = 1.0 / 3.0 - x
    dy = 1.0 / 3.0 - y
    norm = math.hypot(dx, dy)
    return x + OFFSET_EPS * dx / norm, y + OFFSET_EPS * dy / norm


def value_at(chain: ParamChain, x: float, y: float, boundary_mode: str = CESARO) -> float:
    """Fingerprint value of a composed chain at one parameter point."""
    if boundary_mode not in BOUNDARY_MODES:
        raise ValueError(f"unknown boundary mode {boundary_mode!r}")
    if boundary_mode == INTERIOR_OFFSET:
        x, y = _offset_toward_centroid(x, y)
    numeric = evaluate(chain, x, y)
    pi = limit_distribution(numeric)
    return expected_payoff(pi, chain.payoff)


def fingerprint_at(
    player: PlayerMachine,
    probe: Probe,
    payoff: PayoffMatrix,
    x: float,
    y: float,
    boundary_mode: str = CESARO,
) -> float:
    return value_at(compose(player, probe, payoff), x, y, boundary_mode)


def pointwise_fingerprint(
    player: PlayerMachine,
    probe: Probe,
    payoff: PayoffMatrix,
    boundary_mode: str = CESARO,
):
    """A callable (x, y) -> value over one composed chain, for metrics use."""
    chain = compose(player, probe, payoff)
    return lambda x, y: value_at(chain, x, y, boundary_mode)


@dataclass
class FingerprintGrid:
    """Fingerprint values over the triangular lattice i + j <= resolution."""

    resolution: int
    boundary_mode: str
    values: dict[tuple[int, int], float]
    meta: dict = field(default_factory=dict)

    def node_points(self):
        n = self.resolution
        for i in range(n + 1):
            for j in range(n + 1 - i):
                yield i, j

    def to_csv(self, extra_meta: dict | None = None) -> str:
        lines = []
        meta = {**self.meta, **(extra_meta or {})}
        for key in sorted(meta):
            lines.append(f"# {key}: {meta[key]}")
        lines.append("x,y,value")
        n = self.resolution
        for i, j in self.node_points():
            lines.append(f"{i / n:.17g},{j / n:.17g},{self.values[(i, j)]:.17g}")
        return "\n".join(lines) + "\n"

    def to_json(self, extra_meta: dict | None = None) -> str:
        n = self.resolution
        doc = {
            "meta": {
                **self.meta,
                **(extra_meta or {}),
                "resolution": n,
                "boundary_mode": self.boundary_mode,
            },
            "values": [
                [i / n, j / n, self.values[(i, j)]] for i, j in self.node_points()
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "FingerprintGrid":
        doc = json.loads(text)
        meta = doc["meta"]
        n = int(meta["resolution"])
        values = {}
        for px, py, value in doc["values"]:
            values[(round(px * n), round(py * n))] = float(value)
        return cls(
            resolution=n,
            boundary_mode=meta.get("boundary_mode", CESARO),
            values=values,
            meta={k: v for k, v in meta.items() if k not in ("resolution", "boundary_mode")},
        )

    @classmethod
    def from_csv(cls, text: str) -> "FingerprintGrid":
        meta = {}
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
                continue
            if line == "x,y,value":
                continue
            sx, sy, sv = line.split(",")
            rows.append((float(sx), float(sy), float(sv)))
        # lattice size (n+1)(n+2)/2 determines the resolution
        count = len(rows)
        n = round((math.isqrt(8 * count + 1) - 3) / 2)
        if (n + 1) * (n + 2) // 2 != count:
            raise ValueError(f"{count} rows do not form a triangular lattice")
        values = {(round(px * n), round(py * n)): v for px, py, v in rows}
        mode = meta.pop("boundary_mode", CESARO)
        if "resolution" in meta:
            meta.pop("resolution")
        return cls(resolution=n, boundary_mode=mode, values=values, meta=meta)


def _payoff_meta(payoff: PayoffMatrix) -> str:
    parts = [f"{a},{b}={v}" for (a, b), v in sorted(payoff.entries.items())]
    return "; ".join(parts)


def fingerprint_grid(
    player: PlayerMachine,
    probe: Probe,
    payoff: PayoffMatrix,
    n: int,
    boundary_mode: str = CESARO,
) -> FingerprintGrid:
    """Sample the fingerprint on the full triangular lattice, boundary included."""
    if n < 1:
        raise ValueError("grid resolution must be >= 1")
    chain = compose(player, probe, payoff)
    values: dict[tuple[int, int], float] = {}
    for i in range(n + 1):
        for j in range(n + 1 - i):
            values[(i, j)] = value_at(chain, i / n, j / n, boundary_mode)
    low, high = payoff.bounds()
    for key, v in values.items():
        if not (float(low) - 1e-9 <= v <= float(high) + 1e-9):
            raise AssertionError(f"grid value {v} at {key} outside payoff bounds")
    return FingerprintGrid(
        resolution=n,
        boundary_mode=boundary_mode,
        values=values,
        meta={
            "player": player.name,
            "probe": probe.name,
            "payoff": _payoff_meta(payoff),
        },
    )


# ---------------------------------------------------------------------------
# Closed-form fingerprints
# ---------------------------------------------------------------------------


@dataclass
class SymbolicFingerprint:
    """Exact rational-function fingerprint, valid on the open triangle."""

    fn: RationalFn
    meta: dict = field(default_factory=dict)
    agreement_max_error: float | None = None

    def __call__(self, x: float, y: float) -> float:
        return ratfn_eval(self.fn, x, y)


def _capped(e: ParamExpr) -> ParamExpr:
    if e.term_count() > TERM_CAP:
        raise ExpressionSwellError(e.term_count(), TERM_CAP)
    return e


def _bareiss_det(matrix: list[list[ParamExpr]]) -> ParamExpr:
    """Determinant over the polynomial ring by fraction-free (Bareiss)
    elimination; every division by the previous pivot is exact."""
    n = len(matrix)
    if n == 0:
        return ParamExpr.one()
    a = [row[:] for row in matrix]
    previous = ParamExpr.one()
    sign = 1
    for k in range(n - 1):
        pivot_row = next((r for r in range(k, n) if not a[r][k].is_zero()), None)
        if pivot_row is None:
            return ParamExpr.zero()
        if pivot_row != k:
            a[k], a[pivot_row] = a[pivot_row], a[k]
            sign = -sign
        pivot = a[k][k]
        for i in range(k + 1, n):
            factor = a[i][k]
            for j in range(k + 1, n):
                a[i][j] = _capped(
                    exact_div(pivot * a[i][j] - factor * a[k][j], previous)
                )
            a[i][k] = ParamExpr.zero()
        previous = pivot
    det = a[n - 1][n - 1]
    return det if sign == 1 else -det


def symbolic_fingerprint(
    player: PlayerMachine,
    probe: Probe,
    payoff: PayoffMatrix,
    validate: bool = True,
) -> SymbolicFingerprint:
    """Solve the stationary system symbolically and return the fingerprint as
    a rational function of (x, y).

    Requires the chain to be irreducible at the generic interior point
    (1/3, 1/3); reducible chains raise ReducibleChainError (use grid mode).
    """
    chain = compose(player, probe, payoff)
    numeric = evaluate(chain, *GENERIC_POINT)
    decomposition = closed_classes(numeric)
    classes = decomposition.classes
    if len(classes) != 1 or not classes[0].closed:
        raise ReducibleChainError(
            "chain is reducible at the generic interior point; "
            f"classes: {decomposition.describe()}; use grid mode instead",
            classes=decomposition,
        )

    n = chain.n_states
    p = chain.dense_symbolic()
    # Stationary equations pi (I - P) = 0, transposed to columns; the last
    # equation is replaced by the normalization sum(pi) = 1.  By Cramer's
    # rule and cofactor expansion along that last row, the payoff-weighted
    # sum of the solution collapses to a ratio of two determinants: the
    # system's, and the system's with the normalization row replaced by the
    # payoff vector.  Both share the same minimal denominator, so no spurious
    # factors appear.
    system: list[list[ParamExpr]] = []
    one = ParamExpr.one()
    for j in range(n - 1):
        row = []
        for i in range(n):
            entry = -p[i][j]
            if i == j:
                entry = entry + one
            row.append(entry)
        system.append(row)
    norm_row = [one for _ in range(n)]
    payoff_row = [ParamExpr.const(w) for w in chain.payoff]

    den = _bareiss_det(system + [norm_row])
    if den.is_zero():
        raise ReducibleChainError(
            "stationary system is singular over the polynomial ring; "
            "use grid mode instead"
        )
    num = _bareiss_det(system + [payoff_row])
    result = RationalFn(num, den)

    fp = SymbolicFingerprint(
        fn=result,
        meta={
            "player": player.name,
            "probe": probe.name,
            "payoff": _payoff_meta(payoff),
        },
    )
    if validate:
        fp.agreement_max_error = _check_agreement(chain, result)
    return fp


def _check_agreement(chain: ParamChain, fn: RationalFn) -> float:
    """Max |closed form - numeric| over interior nodes of the validation lattice."""
    n = VALIDATION_N
    worst = 0.0
    for i in range(1, n):
        for j in range(1, n - i):
            x, y = i / n, j / n
            symbolic = ratfn_eval(fn, x, y)
            numeric = value_at(chain, x, y, CESARO)
            worst = max(worst, abs(symbolic - numeric))
    if worst > AGREEMENT_TOL:
        raise AssertionError(
            f"closed form disagrees with numeric path by {worst} (tol {AGREEMENT_TOL})"
        )
    return worst


# ---------------------------------------------------------------------------
# Boundary-convention discrepancy reporting
# ---------------------------------------------------------------------------


@dataclass
class BoundaryDiscrepancyReport:
    per_point: dict[tuple[int, int], float]
    max_discrepancy: float
    max_point: tuple[int, int]


def boundary_discrepancy(
    player: PlayerMachine,
    probe: Probe,
    payoff: PayoffMatrix,
    n: int,
) -> BoundaryDiscrepancyReport:
    """|cesaro - interior_offset| at every boundary node of the n-lattice."""
    if n < 2:
        raise ValueError("boundary discrepancy needs resolution >= 2")
    chain = compose(player, probe, payoff)
    per_point: dict[tuple[int, int], float] = {}
    for i in range(n + 1):
        for j in range(n + 1 - i):
            if i != 0 and j != 0 and i + j != n:
                continue
            x, y = i / n, j / n
            gap = abs(
                value_at(chain, x, y, CESARO) - value_at(chain, x, y, INTERIOR_OFFSET)
            )
            per_point[(i, j)] = gap
    max_point = max(per_point, key=lambda k: (per_point[k], -k[0], -k[1]))
    return BoundaryDiscrepancyReport(
        per_point=per_point,
        max_discrepancy=per_point[max_point],
        max_point=max_point,
    )
