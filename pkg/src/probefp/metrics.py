"""L2 distances between fingerprints over the parameter triangle.

The distance is the square root of the integral of the squared pointwise
difference over the triangle {x, y >= 0, x + y <= 1}, approximated by the
centroid rule on the n-subdivision into n^2 congruent subtriangles (both
orientations), each of area 1/(2 n^2).  The rule is second-order accurate
and exact for affine integrands.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .fingerprint import FingerprintGrid

Evaluable = Callable[[float, float], float]

DEFAULT_QUADRATURE_N = 200


def make_grid_evaluator(grid: FingerprintGrid) -> Evaluable:
    """Extend a lattice fingerprint to arbitrary triangle points by
    barycentric interpolation on its own subtriangles."""
    n = grid.resolution
    values = grid.values

    def interpolate(x: float, y: float) -> float:
        u = x * n
        v = y * n
        i = min(int(u), n - 1)
        j = min(int(v), n - 1)
        if i + j > n - 1:
            # point sits on (or within roundoff of) the hypotenuse; use the
            # boundary cell that contains it
            j = n - 1 - i
        fu = u - i
        fv = v - j
        if fu + fv <= 1.0 or i + j == n - 1:
            return (
                (1.0 - fu - fv) * values[(i, j)]
                + fu * values[(i + 1, j)]
                + fv * values[(i, j + 1)]
            )
        return (
            (1.0 - fv) * values[(i + 1, j)]
            + (1.0 - fu) * values[(i, j + 1)]
            + (fu + fv - 1.0) * values[(i + 1, j + 1)]
        )

    return interpolate


def _centroids(n: int):
    """Centroids of the n-subdivision, upward then downward per cell."""
    for i in range(n):
        for j in range(n - i):
            yield (3 * i + 1) / (3 * n), (3 * j + 1) / (3 * n)
            if i + j < n - 1:
                yield (3 * i + 2) / (3 * n), (3 * j + 2) / (3 * n)


def l2_distance(f: Evaluable, g: Evaluable, n: int = DEFAULT_QUADRATURE_N) -> float:
    """Quadrature approximation of the L2 distance between two fingerprints."""
    if n < 1:
        raise ValueError("quadrature resolution must be >= 1")
    cell_area = 1.0 / (2.0 * n * n)
    total = 0.0
    for cx, cy in _centroids(n):
        diff = f(cx, cy) - g(cx, cy)
        total += diff * diff
    return float(np.sqrt(total * cell_area))


@dataclass
class DistanceMatrix:
    """Symmetric matrix of pairwise fingerprint distances."""

    names: tuple[str, ...]
    d: np.ndarray
    meta: dict = field(default_factory=dict)

    def to_csv(self, extra_meta: dict | None = None) -> str:
        lines = []
        meta = {**self.meta, **(extra_meta or {})}
        for key in sorted(meta):
            lines.append(f"# {key}: {meta[key]}")
        lines.append("name," + ",".join(self.names))
        for i, name in enumerate(self.names):
            cells = ",".join(f"{self.d[i, j]:.17g}" for j in range(len(self.names)))
            lines.append(f"{name},{cells}")
        return "\n".join(lines) + "\n"


def distance_matrix(
    corpus: Sequence[tuple[str, Evaluable]], n: int = DEFAULT_QUADRATURE_N
) -> DistanceMatrix:
    """Pairwise distances; the upper triangle is computed once and mirrored."""
    names = tuple(name for name, _ in corpus)
    if len(set(names)) != len(names):
        raise ValueError("fingerprint names must be unique")
    size = len(corpus)
    d = np.zeros((size, size))
    for i in range(size):
        for j in range(i + 1, size):
            try:
                value = l2_distance(corpus[i][1], corpus[j][1], n)
            except Exception as exc:
                # annotate with the offending pair, keeping the exception type
                exc.args = (f"distance({names[i]}, {names[j]}): {exc}",)
                raise
            d[i, j] = value
            d[j, i] = value
    return DistanceMatrix(names=names, d=d, meta={"quadrature_n": n})
