"""Player strategies, parametrized probes, and the Joss-Ann construction.

Players are deterministic Mealy machines: each round they read the
opponent's previous move and emit a move while changing state.  Probes are
the probabilistic counterpart: each (state, input) pair maps to a
distribution over (output move, next state) outcomes whose weights are
polynomials in the probe parameters (x, y).  All randomness of the joint
game lives on the probe side.

File formats are line-oriented with ``#`` comments:

    player NAME                      probe NAME
    alphabet C D                     alphabet C D
    start STATE ACTION               init ACTION STATE : EXPR
    STATE IN -> NEXT OUT             STATE IN -> OUT NEXT : EXPR

Probe init/transition groups may span several lines; the weights of each
group must sum to the constant polynomial 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    PayoffError,
    PlayerFormatError,
    ProbeFormatError,
    ProbeValidationError,
)
from .polyexpr import ExprSyntaxError, ParamExpr, expr_parse

DEFAULT_ALPHABET = ("C", "D")

# Nonnegativity of probe weights is sampled on this lattice over the
# parameter triangle; affine weights are additionally checked exactly at the
# three vertices.
VALIDATION_LATTICE_N = 20
WEIGHT_TOL = 1e-12

# A probe outcome: (output action, next state, polynomial weight).
Outcome = tuple[str, int, ParamExpr]


@dataclass
class PayoffMatrix:
    """Per-round payoff to the player, indexed by (player move, opponent move)."""

    entries: dict[tuple[str, str], Fraction]

    @classmethod
    def default_prisoners_dilemma(cls) -> "PayoffMatrix":
        return cls(
            {
                ("C", "C"): Fraction(3),
                ("C", "D"): Fraction(0),
                ("D", "C"): Fraction(5),
                ("D", "D"): Fraction(1),
            }
        )

    def value(self, player_action: str, opponent_action: str) -> Fraction:
        try:
            return self.entries[(player_action, opponent_action)]
        except KeyError:
            raise PayoffError(
                f"payoff undefined for ({player_action}, {opponent_action})"
            ) from None

    def validate_total(self, alphabet: tuple[str, ...]) -> None:
        for a in alphabet:
            for b in alphabet:
                if (a, b) not in self.entries:
                    raise PayoffError(f"payoff undefined for ({a}, {b})")

    def with_overrides(
        self, overrides: list[tuple[str, str, Fraction]]
    ) -> "PayoffMatrix":
        entries = dict(self.entries)
        for a, b, v in overrides:
            entries[(a, b)] = Fraction(v)
        return PayoffMatrix(entries)

    def scaled(self, factor) -> "PayoffMatrix":
        factor = Fraction(factor)
        return PayoffMatrix({k: v * factor for k, v in self.entries.items()})

    def bounds(self) -> tuple[Fraction, Fraction]:
        values = list(self.entries.values())
        return min(values), max(values)


@dataclass
class PlayerMachine:
    """Deterministic finite-state transducer playing the row side of the game."""

    name: str
    alphabet: tuple[str, ...]
    state_names: tuple[str, ...]
    initial_state: int
    initial_action: str
    step: dict[tuple[int, str], tuple[int, str]]

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    def validate(self) -> None:
        if len(self.alphabet) < 2 or len(set(self.alphabet)) != len(self.alphabet):
            raise PlayerFormatError("alphabet must contain at least 2 distinct symbols")
        if self.initial_action not in self.alphabet:
            raise PlayerFormatError(
                f"start action {self.initial_action!r} not in alphabet"
            )
        for state in range(self.n_states):
            for action in self.alphabet:
                if (state, action) not in self.step:
                    raise PlayerFormatError(
                        f"missing transition for state {self.state_names[state]!r}"
                        f" on input {action!r}"
                    )
        for (state, action), (nxt, out) in self.step.items():
            if out not in self.alphabet:
                raise PlayerFormatError(
                    f"output {out!r} of state {self.state_names[state]!r} not in alphabet"
                )
            if not (0 <= nxt < self.n_states):
                raise PlayerFormatError(f"transition to unknown state index {nxt}")
        unreachable = self._unreachable_states()
        if unreachable:
            names = ", ".join(self.state_names[s] for s in sorted(unreachable))
            raise PlayerFormatError(f"unreachable state(s): {names}")

    def _unreachable_states(self) -> set[int]:
        seen = {self.initial_state}
        frontier = [self.initial_state]
        while frontier:
            state = frontier.pop()
            for action in self.alphabet:
                nxt = self.step[(state, action)][0]
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return set(range(self.n_states)) - seen


@dataclass
class Probe:
    """Finite-state transducer whose outcome weights are polynomials in (x, y)."""

    name: str
    alphabet: tuple[str, ...]
    state_names: tuple[str, ...]
    init: tuple[Outcome, ...]
    step: dict[tuple[int, str], tuple[Outcome, ...]]

    @property
    def n_states(self) -> int:
        return len(self.state_names)


@dataclass
class ProbeValidationReport:
    """Outcome of the symbolic and sampled checks on a probe.

    `sum_residuals` maps each distribution (the key "init" or a
    (state, input) pair) to 1 minus the sum of its weights; all residuals are
    the zero polynomial for a valid probe.  `min_weight` is the smallest
    weight value seen anywhere on the validation lattice.
    """

    sum_residuals: dict = field(default_factory=dict)
    min_weight: float = float("inf")
    min_weight_point: tuple[float, float] = (0.0, 0.0)
    negativity_violations: list = field(default_factory=list)
    vertex_violations: list = field(default_factory=list)
    unreachable_states: list = field(default_factory=list)
    missing_groups: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            all(r.is_zero() for r in self.sum_residuals.values())
            and not self.negativity_violations
            and not self.vertex_violations
            and not self.unreachable_states
            and not self.missing_groups
        )


def _lattice_points(n: int):
    for i in range(n + 1):
        for j in range(n + 1 - i):
            yield i, j


def validate_probe(probe: Probe) -> ProbeValidationReport:
    """Run all probe checks; failures are reported, never raised."""
    report = ProbeValidationReport()
    one = ParamExpr.one()

    groups: list[tuple[object, tuple[Outcome, ...]]] = [("init", probe.init)]
    for state in range(probe.n_states):
        for action in probe.alphabet:
            key = (state, action)
            if key not in probe.step:
                report.missing_groups.append(key)
            else:
                groups.append((key, probe.step[key]))

    for key, outcomes in groups:
        total = ParamExpr.zero()
        for _, _, weight in outcomes:
            total = total + weight
        report.sum_residuals[key] = one - total

    n = VALIDATION_LATTICE_N
    for key, outcomes in groups:
        for _, _, weight in outcomes:
            for i, j in _lattice_points(n):
                px, py = i / n, j / n
                value = weight.evaluate(px, py)
                if value < report.min_weight:
                    report.min_weight = value
                    report.min_weight_point = (px, py)
                if not (-WEIGHT_TOL <= value <= 1 + WEIGHT_TOL):
                    report.negativity_violations.append((key, (px, py), value))
            if weight.is_affine():
                for vx, vy in ((Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))):
                    exact = weight.evaluate_exact(vx, vy)
                    if exact < 0:
                        report.vertex_violations.append((key, (vx, vy), exact))

    # Reachability under generic interior parameters: any outcome with a
    # nonzero weight polynomial counts as a support edge.
    reached = {state for _, state, w in probe.init if not w.is_zero()}
    frontier = list(reached)
    while frontier:
        state = frontier.pop()
        for action in probe.alphabet:
            for _, nxt, weight in probe.step.get((state, action), ()):
                if not weight.is_zero() and nxt not in reached:
                    reached.add(nxt)
                    frontier.append(nxt)
    report.unreachable_states = sorted(set(range(probe.n_states)) - reached)
    return report


def _raise_on_invalid(probe: Probe, report: ProbeValidationReport) -> None:
    for key in report.missing_groups:
        state, action = key
        raise ProbeFormatError(
            f"no outcomes for state {probe.state_names[state]!r} on input {action!r}"
        )
    for key, residual in report.sum_residuals.items():
        if not residual.is_zero():
            where = "init" if key == "init" else (
                f"state {probe.state_names[key[0]]!r} input {key[1]!r}"
            )
            raise ProbeValidationError(
                f"weights for {where} do not sum to 1; residual: {residual.render()}"
            )
    if report.negativity_violations:
        key, point, value = report.negativity_violations[0]
        where = "init" if key == "init" else (
            f"state {probe.state_names[key[0]]!r} input {key[1]!r}"
        )
        raise ProbeValidationError(
            f"weight for {where} evaluates to {value} at lattice point {point}"
        )
    if report.vertex_violations:
        key, point, value = report.vertex_violations[0]
        where = "init" if key == "init" else (
            f"state {probe.state_names[key[0]]!r} input {key[1]!r}"
        )
        raise ProbeValidationError(
            f"affine weight for {where} is {value} at vertex "
            f"({float(point[0])}, {float(point[1])})"
        )
    if report.unreachable_states:
        names = ", ".join(probe.state_names[s] for s in report.unreachable_states)
        raise ProbeFormatError(f"unreachable state(s): {names}")


# ---------------------------------------------------------------------------
# File parsing
# ---------------------------------------------------------------------------


def _significant_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _parse_alphabet(tokens: list[str], lineno: int, err) -> tuple[str, ...]:
    if len(tokens) < 3:
        raise err("alphabet needs at least 2 symbols", lineno)
    symbols = tuple(tokens[1:])
    if len(set(symbols)) != len(symbols):
        raise err("alphabet symbols must be distinct", lineno)
    return symbols


class _StateIndexer:
    """Assigns state indices by first appearance in the file."""

    def __init__(self):
        self.names: list[str] = []
        self.index: dict[str, int] = {}

    def get(self, name: str) -> int:
        if name not in self.index:
            self.index[name] = len(self.names)
            self.names.append(name)
        return self.index[name]


def parse_player(text: str) -> PlayerMachine:
    """Parse and validate a player file."""
    lines = list(_significant_lines(text))
    if not lines:
        raise PlayerFormatError("empty player file")
    pos = 0

    lineno, header = lines[pos]
    tokens = header.split()
    if len(tokens) != 2 or tokens[0] != "player":
        raise PlayerFormatError("expected 'player NAME' header", lineno)
    name = tokens[1]
    pos += 1

    if pos >= len(lines):
        raise PlayerFormatError("missing alphabet line", lineno)
    lineno, line = lines[pos]
    tokens = line.split()
    if tokens[0] != "alphabet":
        raise PlayerFormatError("expected 'alphabet ...' line", lineno)
    alphabet = _parse_alphabet(tokens, lineno, PlayerFormatError)
    pos += 1

    if pos >= len(lines):
        raise PlayerFormatError("missing start line", lineno)
    lineno, line = lines[pos]
    tokens = line.split()
    if len(tokens) != 3 or tokens[0] != "start":
        raise PlayerFormatError("expected 'start STATE ACTION' line", lineno)
    indexer = _StateIndexer()
    initial_state = indexer.get(tokens[1])
    initial_action = tokens[2]
    if initial_action not in alphabet:
        raise PlayerFormatError(f"start action {initial_action!r} not in alphabet", lineno)
    pos += 1

    step: dict[tuple[int, str], tuple[int, str]] = {}
    for lineno, line in lines[pos:]:
        tokens = line.split()
        if len(tokens) != 5 or tokens[2] != "->":
            raise PlayerFormatError("expected 'STATE IN -> NEXT OUT' transition", lineno)
        state_tok, in_action, _, next_tok, out_action = tokens
        if in_action not in alphabet:
            raise PlayerFormatError(f"input {in_action!r} not in alphabet", lineno)
        if out_action not in alphabet:
            raise PlayerFormatError(f"output {out_action!r} not in alphabet", lineno)
        state = indexer.get(state_tok)
        nxt = indexer.get(next_tok)
        key = (state, in_action)
        if key in step:
            raise PlayerFormatError(
                f"duplicate rule for state {state_tok!r} input {in_action!r}", lineno
            )
        step[key] = (nxt, out_action)

    machine = PlayerMachine(
        name=name,
        alphabet=alphabet,
        state_names=tuple(indexer.names),
        initial_state=initial_state,
        initial_action=initial_action,
        step=step,
    )
    machine.validate()
    return machine


def _canonical_outcomes(
    outcomes: list[Outcome], alphabet: tuple[str, ...]
) -> tuple[Outcome, ...]:
    """Merge duplicate (action, state) outcomes and sort them canonically."""
    merged: dict[tuple[str, int], ParamExpr] = {}
    for action, state, weight in outcomes:
        key = (action, state)
        merged[key] = merged.get(key, ParamExpr.zero()) + weight
    order = {a: k for k, a in enumerate(alphabet)}
    canon = sorted(merged.items(), key=lambda kv: (order[kv[0][0]], kv[0][1]))
    return tuple(
        (action, state, weight) for (action, state), weight in canon if not weight.is_zero()
    )


def parse_probe(text: str) -> Probe:
    """Parse a probe file and run the full validation suite, raising on failure."""
    lines = list(_significant_lines(text))
    if not lines:
        raise ProbeFormatError("empty probe file")
    pos = 0

    lineno, header = lines[pos]
    tokens = header.split()
    if len(tokens) != 2 or tokens[0] != "probe":
        raise ProbeFormatError("expected 'probe NAME' header", lineno)
    name = tokens[1]
    pos += 1

    if pos >= len(lines):
        raise ProbeFormatError("missing alphabet line", lineno)
    lineno, line = lines[pos]
    tokens = line.split()
    if tokens[0] != "alphabet":
        raise ProbeFormatError("expected 'alphabet ...' line", lineno)
    alphabet = _parse_alphabet(tokens, lineno, ProbeFormatError)
    pos += 1

    indexer = _StateIndexer()
    init_raw: list[Outcome] = []
    step_raw: dict[tuple[int, str], list[Outcome]] = {}

    def parse_weight(expr_text: str, lineno: int) -> ParamExpr:
        try:
            return expr_parse(expr_text)
        except ExprSyntaxError as exc:
            raise ProbeFormatError(f"bad weight expression: {exc}", lineno) from exc

    for lineno, line in lines[pos:]:
        head, sep, expr_text = line.partition(":")
        if not sep:
            raise ProbeFormatError("expected ': EXPR' weight suffix", lineno)
        tokens = head.split()
        if tokens and tokens[0] == "init":
            if len(tokens) != 3:
                raise ProbeFormatError("expected 'init ACTION STATE : EXPR'", lineno)
            action, state_tok = tokens[1], tokens[2]
            if action not in alphabet:
                raise ProbeFormatError(f"action {action!r} not in alphabet", lineno)
            init_raw.append((action, indexer.get(state_tok), parse_weight(expr_text, lineno)))
        else:
            if len(tokens) != 5 or tokens[2] != "->":
                raise ProbeFormatError(
                    "expected 'STATE IN -> OUT NEXT : EXPR' transition", lineno
                )
            state_tok, in_action, _, out_action, next_tok = tokens
            if in_action not in alphabet:
                raise ProbeFormatError(f"input {in_action!r} not in alphabet", lineno)
            if out_action not in alphabet:
                raise ProbeFormatError(f"output {out_action!r} not in alphabet", lineno)
            key = (indexer.get(state_tok), in_action)
            step_raw.setdefault(key, []).append(
                (out_action, indexer.get(next_tok), parse_weight(expr_text, lineno))
            )

    if not init_raw:
        raise ProbeFormatError("probe has no init lines")

    probe = Probe(
        name=name,
        alphabet=alphabet,
        state_names=tuple(indexer.names),
        init=_canonical_outcomes(init_raw, alphabet),
        step={k: _canonical_outcomes(v, alphabet) for k, v in step_raw.items()},
    )
    report = validate_probe(probe)
    if not report.ok:
        _raise_on_invalid(probe, report)
    return probe


# ---------------------------------------------------------------------------
# Joss-Ann construction
# ---------------------------------------------------------------------------


def joss_ann(base: PlayerMachine) -> Probe:
    """Two-parameter probe built on a base strategy: with probability x play
    C, with probability y play D, otherwise play the base strategy's move.

    The probe keeps the base machine's state set; states follow the base
    strategy's deterministic updates regardless of which move was forced.
    """
    if set(base.alphabet) != {"C", "D"}:
        raise ProbeValidationError(
            f"joss_ann requires the binary alphabet C/D, got {base.alphabet}"
        )
    x = ParamExpr.var_x()
    y = ParamExpr.var_y()
    rest = ParamExpr.one() - x - y

    def spread(action: str, state: int) -> list[Outcome]:
        return [("C", state, x), ("D", state, y), (action, state, rest)]

    step = {
        key: _canonical_outcomes(spread(out, nxt), base.alphabet)
        for key, (nxt, out) in base.step.items()
    }
    init = _canonical_outcomes(
        spread(base.initial_action, base.initial_state), base.alphabet
    )
    return Probe(
        name=f"joss_ann({base.name})",
        alphabet=base.alphabet,
        state_names=base.state_names,
        init=init,
        step=step,
    )
