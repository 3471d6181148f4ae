"""Command-line front end.

Commands: validate, fingerprint, symbolic, distance, simulate.  Outputs are
byte-reproducible: no timestamps, fixed float formatting, and every written
file embeds the SHA-256 digests of its inputs.

Exit codes: 0 success, 2 invalid input, 3 numeric failure, 4 reducible chain
(symbolic mode), 5 expression swell, 64 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from .automata import PayoffMatrix, joss_ann, parse_player, parse_probe
from .errors import (
    ExpressionSwellError,
    InputError,
    NumericError,
    ProbeFpError,
    ReducibleChainError,
)
from .fingerprint import (
    CESARO,
    INTERIOR_OFFSET,
    FingerprintGrid,
    fingerprint_at,
    fingerprint_grid,
    pointwise_fingerprint,
    symbolic_fingerprint,
)
from .metrics import distance_matrix, make_grid_evaluator
from .simulate import RNG_ID, default_burn_in, estimate

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_REDUCIBLE = 4
EXIT_SWELL = 5
EXIT_USAGE = 64

_BOUNDARY_FLAGS = {"cesaro": CESARO, "offset": INTERIOR_OFFSET}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with the usage exit code from our table instead of 2."""

    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    payoff_overrides: list[tuple[str, str, Fraction]]
    grid_n: int = 20
    boundary_mode: str = CESARO
    quad_n: int = 200
    fmt: str = "csv"
    out: str | None = None
    seed: int = 0
    rounds: int = 100_000
    burn_in: int | None = None
    replicates: int = 16
    verbosity: int = 0

    def __post_init__(self):
        if self.grid_n < 1 or self.quad_n < 1:
            raise UsageError("resolutions must be >= 1")
        if self.rounds < 1 or self.replicates < 2:
            raise UsageError("need rounds >= 1 and replicates >= 2")


_CONFIG_KEYS = {
    "n": int,
    "boundary": str,
    "quad-n": int,
    "format": str,
    "seed": int,
    "rounds": int,
    "burn-in": int,
    "replicates": int,
}


def _read_config_file(path: str) -> dict:
    values: dict = {"payoff": []}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config file: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        key = tokens[0]
        if key == "payoff":
            if len(tokens) != 4:
                raise InputError(f"config line {lineno}: payoff needs 'payoff A B VALUE'")
            values["payoff"].append((tokens[1], tokens[2], Fraction(tokens[3])))
        elif key in _CONFIG_KEYS:
            if len(tokens) != 2:
                raise InputError(f"config line {lineno}: expected '{key} VALUE'")
            values[key] = _CONFIG_KEYS[key](tokens[1])
        else:
            raise InputError(f"config line {lineno}: unknown key {key!r}")
    return values


def _resolve_config(args) -> RunConfig:
    """Precedence: command-line flag > config file > default."""
    file_values = _read_config_file(args.config) if getattr(args, "config", None) else {}

    def pick(flag_value, key, default):
        if flag_value is not None:
            return flag_value
        if key in file_values:
            return file_values[key]
        return default

    overrides = list(file_values.get("payoff", []))
    for a, b, v in getattr(args, "payoff", None) or []:
        overrides.append((a, b, Fraction(v)))

    boundary = pick(getattr(args, "boundary", None), "boundary", "cesaro")
    if boundary not in _BOUNDARY_FLAGS:
        raise UsageError(f"unknown boundary mode {boundary!r}")
    fmt = pick(getattr(args, "format", None), "format", "csv")
    if fmt not in ("csv", "json"):
        raise UsageError(f"unknown format {fmt!r}")

    return RunConfig(
        payoff_overrides=overrides,
        grid_n=pick(getattr(args, "n", None), "n", 20),
        boundary_mode=_BOUNDARY_FLAGS[boundary],
        quad_n=pick(getattr(args, "quad_n", None), "quad-n", 200),
        fmt=fmt,
        out=getattr(args, "output", None),
        seed=pick(getattr(args, "seed", None), "seed", 0),
        rounds=pick(getattr(args, "rounds", None), "rounds", 100_000),
        burn_in=pick(getattr(args, "burn_in", None), "burn-in", None),
        replicates=pick(getattr(args, "replicates", None), "replicates", 16),
        verbosity=getattr(args, "verbose", 0) or 0,
    )


def _payoff_matrix(config: RunConfig) -> PayoffMatrix:
    return PayoffMatrix.default_prisoners_dilemma().with_overrides(
        config.payoff_overrides
    )


def _read_file(path: str) -> tuple[str, str]:
    """File text plus its SHA-256 digest."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return data.decode("utf-8"), hashlib.sha256(data).hexdigest()


def _load_player(path: str):
    text, digest = _read_file(path)
    return parse_player(text), digest


def _load_probe_spec(probe_path: str | None, joss_ann_path: str | None):
    """Probe from an explicit file or constructed from a base player file."""
    if (probe_path is None) == (joss_ann_path is None):
        raise UsageError("specify exactly one of PROBE or --joss-ann BASE")
    meta: dict = {}
    if probe_path is not None:
        text, digest = _read_file(probe_path)
        probe = parse_probe(text)
        meta["probe_sha256"] = digest
    else:
        base, digest = _load_player(joss_ann_path)
        probe = joss_ann(base)
        meta["probe_constructed"] = "joss_ann"
        meta["probe_base_sha256"] = digest
    meta["probe"] = probe.name
    return probe, meta


def _write_output(text: str, out: str | None, verbosity: int = 0) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="\n") as handle:
            handle.write(text)
        if verbosity:
            print(f"wrote {out}", file=sys.stderr)


def _base_meta(config: RunConfig, payoff: PayoffMatrix) -> dict:
    return {
        "tool": "probefp",
        "version": __version__,
        "payoff": "; ".join(
            f"{a},{b}={v}" for (a, b), v in sorted(payoff.entries.items())
        ),
    }


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _cmd_validate(args) -> int:
    failures = 0
    for path in args.files:
        try:
            text, _ = _read_file(path)
            header = next(
                (
                    line.split("#", 1)[0].strip()
                    for line in text.splitlines()
                    if line.split("#", 1)[0].strip()
                ),
                "",
            )
            kind = header.split()[0] if header else ""
            if kind == "player":
                machine = parse_player(text)
                print(f"{path}: OK player {machine.name} ({machine.n_states} states)")
            elif kind == "probe":
                probe = parse_probe(text)
                print(f"{path}: OK probe {probe.name} ({probe.n_states} states)")
            else:
                raise InputError("first line must start with 'player' or 'probe'")
        except (ProbeFpError, OSError) as exc:
            print(f"{path}: INVALID: {exc}")
            failures += 1
    return EXIT_OK if failures == 0 else EXIT_INPUT


def _cmd_fingerprint(args) -> int:
    config = _resolve_config(args)
    payoff = _payoff_matrix(config)
    player, player_digest = _load_player(args.player)
    probe, probe_meta = _load_probe_spec(args.probe, args.joss_ann)

    grid = fingerprint_grid(player, probe, payoff, config.grid_n, config.boundary_mode)
    meta = {
        **_base_meta(config, payoff),
        "player": player.name,
        "player_sha256": player_digest,
        **probe_meta,
        "n": config.grid_n,
        "boundary_mode": config.boundary_mode,
    }
    if config.fmt == "json":
        _write_output(grid.to_json(meta), config.out, config.verbosity)
    else:
        _write_output(grid.to_csv(meta), config.out, config.verbosity)
    return EXIT_OK


def _cmd_symbolic(args) -> int:
    config = _resolve_config(args)
    payoff = _payoff_matrix(config)
    player, player_digest = _load_player(args.player)
    probe, probe_meta = _load_probe_spec(args.probe, args.joss_ann)

    result = symbolic_fingerprint(player, probe, payoff)
    meta = {
        **_base_meta(config, payoff),
        "player": player.name,
        "player_sha256": player_digest,
        **probe_meta,
    }
    lines = [f"# {key}: {meta[key]}" for key in sorted(meta)]
    lines += [
        f"num: {result.fn.num.render()}",
        f"den: {result.fn.den.render()}",
        "agreement: max |closed form - numeric| = "
        f"{result.agreement_max_error:.3e} over interior lattice nodes",
    ]
    _write_output("\n".join(lines) + "\n", config.out, config.verbosity)
    return EXIT_OK


def _fingerprint_source(spec: str, payoff, boundary_mode):
    """A distance source: a grid file, or 'PLAYER:PROBE' / 'PLAYER:ja[:BASE]'
    pairs evaluated pointwise on the fly."""
    path = Path(spec)
    if path.suffix in (".json", ".csv") or (path.exists() and ":" not in spec):
        text, _ = _read_file(spec)
        grid = (
            FingerprintGrid.from_json(text)
            if text.lstrip().startswith("{")
            else FingerprintGrid.from_csv(text)
        )
        name = grid.meta.get("player", path.stem)
        return name, make_grid_evaluator(grid)
    player_path, sep, probe_spec = spec.partition(":")
    if not sep:
        raise UsageError(
            f"source {spec!r} is neither a grid file nor a PLAYER:PROBE pair"
        )
    player, _ = _load_player(player_path)
    if probe_spec == "ja":
        probe = joss_ann(player)
    elif probe_spec.startswith("ja:"):
        base, _ = _load_player(probe_spec[3:])
        probe = joss_ann(base)
    else:
        text, _ = _read_file(probe_spec)
        probe = parse_probe(text)
    return player.name, pointwise_fingerprint(player, probe, payoff, boundary_mode)


def _cmd_distance(args) -> int:
    config = _resolve_config(args)
    payoff = _payoff_matrix(config)
    if len(args.sources) < 2:
        raise UsageError("distance needs at least two sources")
    corpus = []
    digests = []
    for spec in args.sources:
        name, evaluable = _fingerprint_source(spec, payoff, config.boundary_mode)
        corpus.append((name, evaluable))
        for part in spec.split(":"):
            if part != "ja" and Path(part).exists():
                digests.append(hashlib.sha256(Path(part).read_bytes()).hexdigest())
    names = [name for name, _ in corpus]
    if len(set(names)) != len(names):
        raise UsageError(f"duplicate fingerprint names: {sorted(names)}")

    matrix = distance_matrix(corpus, config.quad_n)
    meta = {
        **_base_meta(config, payoff),
        "quadrature_n": config.quad_n,
        "input_sha256": ";".join(digests),
    }
    if config.fmt == "json":
        doc = {
            "meta": {**matrix.meta, **meta},
            "names": list(matrix.names),
            "distances": [[float(v) for v in row] for row in matrix.d],
        }
        _write_output(json.dumps(doc, indent=2, sort_keys=True) + "\n", config.out, config.verbosity)
    else:
        _write_output(matrix.to_csv(meta), config.out, config.verbosity)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    config = _resolve_config(args)
    payoff = _payoff_matrix(config)
    player, player_digest = _load_player(args.player)
    probe, probe_meta = _load_probe_spec(args.probe, args.joss_ann)

    x, y = args.x, args.y
    if x < 0 or y < 0 or x + y > 1:
        raise UsageError(f"point ({x}, {y}) is outside the parameter triangle")

    burn_in = config.burn_in if config.burn_in is not None else default_burn_in(config.rounds)
    result = estimate(
        player,
        probe,
        payoff,
        x,
        y,
        rounds=config.rounds,
        burn_in=burn_in,
        replicates=config.replicates,
        seed=config.seed,
    )
    exact = fingerprint_at(player, probe, payoff, x, y, config.boundary_mode)
    if result.stderr > 0:
        z = (result.mean - exact) / result.stderr
    else:
        z = 0.0 if result.mean == exact else float("inf")
    doc = {
        "meta": {
            **_base_meta(config, payoff),
            "player": player.name,
            "player_sha256": player_digest,
            **probe_meta,
            "rng": RNG_ID,
        },
        "point": {"x": x, "y": y},
        "estimate": {
            "mean": result.mean,
            "stderr": result.stderr,
            "rounds": result.rounds,
            "burn_in": result.burn_in,
            "replicates": result.replicates,
            "seed": result.seed,
        },
        "exact_fingerprint": exact,
        "z_score": z,
    }
    _write_output(json.dumps(doc, indent=2, sort_keys=True) + "\n", config.out, config.verbosity)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--payoff",
        nargs=3,
        metavar=("A", "B", "VALUE"),
        action="append",
        help="override one payoff entry (repeatable)",
    )
    parser.add_argument("--config", help="config file (flags take precedence)")
    parser.add_argument("-n", type=int, default=None, help="grid resolution")
    parser.add_argument(
        "--boundary", choices=("cesaro", "offset"), default=None,
        help="boundary convention",
    )
    parser.add_argument("--quad-n", type=int, default=None, help="quadrature resolution")
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    parser.add_argument("-o", "--output", default=None, help="output path (default stdout)")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> _Parser:
    parser = _Parser(prog="probefp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"probefp {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    p = subparsers.add_parser("validate", help="check player/probe files")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=_cmd_validate)

    p = subparsers.add_parser("fingerprint", help="sample a fingerprint grid")
    p.add_argument("player")
    p.add_argument("probe", nargs="?", default=None)
    p.add_argument("--joss-ann", metavar="BASE", help="build the probe from a base player")
    _add_common(p)
    p.set_defaults(func=_cmd_fingerprint)

    p = subparsers.add_parser("symbolic", help="closed-form fingerprint")
    p.add_argument("player")
    p.add_argument("probe", nargs="?", default=None)
    p.add_argument("--joss-ann", metavar="BASE")
    _add_common(p)
    p.set_defaults(func=_cmd_symbolic)

    p = subparsers.add_parser("distance", help="pairwise fingerprint distances")
    p.add_argument(
        "sources",
        nargs="*",
        help="grid files or PLAYER:PROBE / PLAYER:ja / PLAYER:ja:BASE pairs",
    )
    _add_common(p)
    p.set_defaults(func=_cmd_distance)

    p = subparsers.add_parser("simulate", help="Monte Carlo estimate at a point")
    p.add_argument("player")
    p.add_argument("x", type=float)
    p.add_argument("y", type=float)
    p.add_argument("probe", nargs="?", default=None)
    p.add_argument("--joss-ann", metavar="BASE")
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--replicates", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ExpressionSwellError as exc:
        print(f"expression swell: {exc}", file=sys.stderr)
        return EXIT_SWELL
    except ReducibleChainError as exc:
        print(f"reducible chain: {exc}", file=sys.stderr)
        return EXIT_REDUCIBLE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
