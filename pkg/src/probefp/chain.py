"""Joint player-probe Markov chains and their limiting distributions.

`compose` builds the parametrized chain over joint states (player state,
probe state, last player move, last probe move); `evaluate` instantiates it
at a parameter point; `limit_distribution` computes the limiting (Cesaro)
state distribution, handling reducible and periodic chains via closed-class
decomposition: absorption probabilities into each closed class times the
unique stationary distribution inside it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .automata import PayoffMatrix, PlayerMachine, Probe
from .errors import (
    AlphabetMismatchError,
    NegativeWeightError,
    OutOfSimplexError,
    ProbeValidationError,
    SingularSystemError,
)
from .polyexpr import ParamExpr

# Evaluated probabilities above this count as support edges; identically-zero
# polynomials evaluate to exact 0.0, so this separates structure from roundoff.
SUPPORT_CUTOFF = 1e-14

ROW_SUM_TOL = 1e-12
ENTRY_TOL = 1e-12
SIMPLEX_TOL = 1e-12
PIVOT_RTOL = 1e-13
RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class JointState:
    """One round of joint play: machine states plus the moves just played."""

    player_state: int
    probe_state: int
    player_action: str
    probe_action: str


@dataclass
class ParamChain:
    """Markov chain with polynomial transition weights over joint states."""

    states: tuple[JointState, ...]
    init: tuple[ParamExpr, ...]
    trans: tuple[dict[int, ParamExpr], ...]  # sparse rows
    payoff: tuple[Fraction, ...]
    player_name: str
    probe_name: str

    @property
    def n_states(self) -> int:
        return len(self.states)

    def row_sum_residuals(self) -> list[ParamExpr]:
        """1 minus each row sum; all zero polynomials for a valid chain."""
        one = ParamExpr.one()
        residuals = []
        for row in self.trans:
            total = ParamExpr.zero()
            for weight in row.values():
                total = total + weight
            residuals.append(one - total)
        return residuals

    def init_residual(self) -> ParamExpr:
        total = ParamExpr.zero()
        for weight in self.init:
            total = total + weight
        return ParamExpr.one() - total

    def dense_symbolic(self) -> list[list[ParamExpr]]:
        zero = ParamExpr.zero()
        return [
            [row.get(j, zero) for j in range(self.n_states)] for row in self.trans
        ]


@dataclass
class NumericChain:
    """A ParamChain instantiated at one parameter point."""

    point: tuple[float, float]
    matrix: np.ndarray
    init: np.ndarray
    payoff: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        self.init = np.asarray(self.init, dtype=float)
        self.payoff = np.asarray(self.payoff, dtype=float)
        rows = self.matrix.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > 1e-10):
            raise ValueError("transition rows must sum to 1")

    @property
    def n_states(self) -> int:
        return self.matrix.shape[0]


@dataclass
class ChainClass:
    """A strongly connected component of the support graph."""

    states: tuple[int, ...]
    closed: bool


@dataclass
class ClassDecomposition:
    classes: tuple[ChainClass, ...]

    def closed_classes(self) -> list[ChainClass]:
        return [c for c in self.classes if c.closed]

    def transient_states(self) -> list[int]:
        out: list[int] = []
        for c in self.classes:
            if not c.closed:
                out.extend(c.states)
        return sorted(out)

    def describe(self) -> str:
        parts = []
        for c in self.classes:
            kind = "closed" if c.closed else "transient"
            parts.append(f"{kind} {{{', '.join(map(str, c.states))}}}")
        return "; ".join(parts)


@dataclass
class LimitDistribution:
    """Limiting (Cesaro) state distribution of an evaluated chain."""

    pi: np.ndarray


def compose(player: PlayerMachine, probe: Probe, payoff: PayoffMatrix) -> ParamChain:
    """Build the joint chain of simultaneous play.

    Each round the player reads the probe's previous move and moves
    deterministically; the probe reads the player's previous move and draws
    an outcome with polynomial weight.  Only states reachable under generic
    interior parameters (nonzero weight polynomials) are retained; indexing
    is breadth-first from the initial support, outcomes in canonical
    (action, state) order.
    """
    if player.alphabet != probe.alphabet:
        raise AlphabetMismatchError(
            f"player alphabet {player.alphabet} != probe alphabet {probe.alphabet}"
        )
    payoff.validate_total(player.alphabet)

    index: dict[JointState, int] = {}
    states: list[JointState] = []
    init_weights: list[ParamExpr] = []

    def intern(js: JointState) -> int:
        if js not in index:
            index[js] = len(states)
            states.append(js)
            init_weights.append(ParamExpr.zero())
        return index[js]

    queue: deque[int] = deque()
    for action, probe_state, weight in probe.init:
        if weight.is_zero():
            continue
        js = JointState(player.initial_state, probe_state, player.initial_action, action)
        was_new = js not in index
        s = intern(js)
        init_weights[s] = init_weights[s] + weight
        if was_new:
            queue.append(s)

    rows: list[dict[int, ParamExpr]] = [dict() for _ in states]
    while queue:
        s = queue.popleft()
        js = states[s]
        next_player, next_action = player.step[(js.player_state, js.probe_action)]
        for probe_action, next_probe, weight in probe.step[
            (js.probe_state, js.player_action)
        ]:
            if weight.is_zero():
                continue
            succ = JointState(next_player, next_probe, next_action, probe_action)
            was_new = succ not in index
            t = intern(succ)
            if was_new:
                rows.append(dict())
                queue.append(t)
            row = rows[s]
            row[t] = row.get(t, ParamExpr.zero()) + weight

    chain = ParamChain(
        states=tuple(states),
        init=tuple(init_weights),
        trans=tuple(rows),
        payoff=tuple(payoff.value(js.player_action, js.probe_action) for js in states),
        player_name=player.name,
        probe_name=probe.name,
    )

    # Row sums and the init sum must be the constant polynomial 1 exactly;
    # anything else means the probe's distributions were invalid.
    for s, residual in enumerate(chain.row_sum_residuals()):
        if not residual.is_zero():
            raise ProbeValidationError(
                f"joint chain row {s} sums to 1 - ({residual.render()})"
            )
    if not chain.init_residual().is_zero():
        raise ProbeValidationError(
            f"joint chain init sums to 1 - ({chain.init_residual().render()})"
        )
    return chain


def evaluate(chain: ParamChain, x: float, y: float) -> NumericChain:
    """Instantiate the chain at a parameter point inside the closed triangle."""
    if x < -SIMPLEX_TOL or y < -SIMPLEX_TOL or x + y > 1 + SIMPLEX_TOL:
        raise OutOfSimplexError(x, y)
    n = chain.n_states
    matrix = np.zeros((n, n))
    for s, row in enumerate(chain.trans):
        for t, weight in row.items():
            matrix[s, t] = weight.evaluate(x, y)
    init = np.array([w.evaluate(x, y) for w in chain.init])

    for label, arr in (("transition", matrix), ("initial", init)):
        low = arr.min()
        if low < -ENTRY_TOL:
            raise NegativeWeightError(
                f"{label} probability {low} below tolerance", (x, y)
            )
    np.clip(matrix, 0.0, None, out=matrix)
    np.clip(init, 0.0, None, out=init)

    row_sums = matrix.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > ROW_SUM_TOL):
        worst = int(np.argmax(np.abs(row_sums - 1.0)))
        raise NegativeWeightError(
            f"transition row {worst} sums to {row_sums[worst]!r}", (x, y)
        )
    matrix /= row_sums[:, None]
    init_sum = init.sum()
    if abs(init_sum - 1.0) > ROW_SUM_TOL:
        raise NegativeWeightError(f"initial distribution sums to {init_sum!r}", (x, y))
    init /= init_sum
    np.clip(matrix, 0.0, 1.0, out=matrix)
    np.clip(init, 0.0, 1.0, out=init)

    return NumericChain(
        point=(x, y),
        matrix=matrix,
        init=init,
        payoff=np.array([float(p) for p in chain.payoff]),
    )


# ---------------------------------------------------------------------------
# Closed-class decomposition (iterative Tarjan on the support graph)
# ---------------------------------------------------------------------------


def _strongly_connected_components(adjacency: list[list[int]]) -> list[list[int]]:
    n = len(adjacency)
    indices = [-1] * n
    lowlinks = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    components: list[list[int]] = []
    counter = 0

    for root in range(n):
        if indices[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, edge_pos = work.pop()
            if edge_pos == 0:
                indices[v] = lowlinks[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for pos in range(edge_pos, len(adjacency[v])):
                w = adjacency[v][pos]
                if indices[w] == -1:
                    work.append((v, pos + 1))
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    lowlinks[v] = min(lowlinks[v], indices[w])
            if advanced:
                continue
            if lowlinks[v] == indices[v]:
                component = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    component.append(w)
                    if w == v:
                        break
                components.append(component)
            if work:
                parent = work[-1][0]
                lowlinks[parent] = min(lowlinks[parent], lowlinks[v])
    return components


def closed_classes(m: NumericChain) -> ClassDecomposition:
    """Strongly connected components of the support graph, each flagged
    closed (no edges leave it) or transient, ordered by smallest state."""
    n = m.n_states
    support = m.matrix > SUPPORT_CUTOFF
    adjacency = [list(np.flatnonzero(support[s])) for s in range(n)]
    components = _strongly_connected_components(adjacency)

    member: dict[int, int] = {}
    for k, comp in enumerate(components):
        for s in comp:
            member[s] = k
    result = []
    for comp in components:
        closed = all(member[t] == member[comp[0]] for s in comp for t in adjacency[s])
        result.append(ChainClass(states=tuple(sorted(comp)), closed=closed))
    result.sort(key=lambda c: c.states[0])
    return ClassDecomposition(classes=tuple(result))


# ---------------------------------------------------------------------------
# Dense linear solve with partial pivoting
# ---------------------------------------------------------------------------


def solve_linear(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gaussian elimination with partial pivoting; pivots below
    PIVOT_RTOL * (pivot row max-norm) raise SingularSystemError."""
    a = np.array(a, dtype=float)
    rhs = np.array(b, dtype=float)
    single = rhs.ndim == 1
    if single:
        rhs = rhs[:, None]
    n = a.shape[0]
    tiny = np.finfo(float).tiny
    for k in range(n):
        r = k + int(np.argmax(np.abs(a[k:, k])))
        pivot = a[r, k]
        row_norm = np.max(np.abs(a[r, k:]))
        if abs(pivot) <= PIVOT_RTOL * max(row_norm, tiny):
            raise SingularSystemError(f"pivot {pivot!r} below tolerance at column {k}")
        if r != k:
            a[[k, r]] = a[[r, k]]
            rhs[[k, r]] = rhs[[r, k]]
        factors = a[k + 1 :, k] / a[k, k]
        a[k + 1 :, k:] -= np.outer(factors, a[k, k:])
        rhs[k + 1 :] -= np.outer(factors, rhs[k])
    x = np.zeros_like(rhs)
    for i in range(n - 1, -1, -1):
        x[i] = (rhs[i] - a[i, i + 1 :] @ x[i + 1 :]) / a[i, i]
    return x[:, 0] if single else x


def _stationary_of_class(
    m: NumericChain, states: Sequence[int]
) -> np.ndarray:
    """Unique stationary distribution of one closed class (equals its Cesaro
    limit also when the class is periodic)."""
    idx = np.asarray(states, dtype=int)
    sub = m.matrix[np.ix_(idx, idx)]
    k = len(idx)
    if k == 1:
        return np.array([1.0])
    system = sub.T - np.eye(k)
    system[-1, :] = 1.0  # normalization replaces one redundant equation
    rhs = np.zeros(k)
    rhs[-1] = 1.0
    try:
        pi = solve_linear(system, rhs)
    except SingularSystemError as exc:
        raise SingularSystemError(
            f"stationary solve failed for class {list(states)} at point {m.point}: {exc}"
        ) from exc
    if pi.min() < -RESIDUAL_TOL:
        raise SingularSystemError(
            f"stationary solve produced negative mass {pi.min()!r} "
            f"for class {list(states)} at point {m.point}"
        )
    np.clip(pi, 0.0, None, out=pi)
    return pi / pi.sum()


def limit_distribution(m: NumericChain) -> LimitDistribution:
    """Limiting state distribution: absorption probability of each closed
    class from the initial distribution, times the stationary distribution
    within the class."""
    decomposition = closed_classes(m)
    closed = decomposition.closed_classes()
    transient = decomposition.transient_states()

    absorption = np.zeros(len(closed))
    for j, cls in enumerate(closed):
        absorption[j] = m.init[list(cls.states)].sum()

    if transient:
        t_idx = np.asarray(transient, dtype=int)
        into_classes = np.zeros((len(transient), len(closed)))
        for j, cls in enumerate(closed):
            into_classes[:, j] = m.matrix[np.ix_(t_idx, np.asarray(cls.states))].sum(
                axis=1
            )
        system = np.eye(len(transient)) - m.matrix[np.ix_(t_idx, t_idx)]
        try:
            hit = solve_linear(system, into_classes)
        except SingularSystemError as exc:
            raise SingularSystemError(
                f"absorption solve failed at point {m.point}: {exc}"
            ) from exc
        hit = hit.reshape(len(transient), len(closed))
        absorption += m.init[t_idx] @ hit

    total = absorption.sum()
    if abs(total - 1.0) > 1e-10:
        raise SingularSystemError(
            f"absorption probabilities sum to {total!r} at point {m.point}"
        )
    absorption /= total

    pi = np.zeros(m.n_states)
    for j, cls in enumerate(closed):
        if absorption[j] == 0.0:
            continue
        pi[list(cls.states)] = absorption[j] * _stationary_of_class(m, cls.states)

    residual = np.max(np.abs(pi @ m.matrix - pi))
    if residual > RESIDUAL_TOL:
        raise SingularSystemError(
            f"limit distribution residual {residual!r} exceeds tolerance at {m.point}"
        )
    total = pi.sum()
    if abs(total - 1.0) > 1e-10:
        raise SingularSystemError(f"limit distribution sums to {total!r} at {m.point}")
    return LimitDistribution(pi=pi / total)


def expected_payoff_exact(
    pi: LimitDistribution, payoff: Sequence[Fraction]
) -> Fraction:
    """Exact dot product of the limit distribution with the payoff vector.

    Float probabilities convert to Fractions losslessly, so scaling the
    payoff vector by a rational scales the result by exactly that rational.
    """
    vec = pi.pi
    if len(vec) != len(payoff):
        raise ValueError("payoff vector length does not match chain")
    total = Fraction(0)
    for p, value in zip(vec, payoff):
        total += Fraction(float(p)) * Fraction(value)
    return total


def expected_payoff(pi: LimitDistribution, payoff: Sequence[Fraction]) -> float:
    return float(expected_payoff_exact(pi, payoff))
