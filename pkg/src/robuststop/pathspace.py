"""Discrete canonical path space: uniform grids, zero-anchored paths,
concatenation, truncation, shifted functionals, and the one-sided
time-path distance used by continuity checks.

All paths live on uniform grids and start at zero.  Concatenation glues a
suffix onto a prefix by adding the prefix's final value; truncation
subtracts the value at the cut so the result is anchored at zero again.
Path equality is exact: no comparison in this module carries a tolerance.

Usage::

    g = TimeGrid(0.0, 2.0, 2)
    w = Path(g, [0.0, 1.0, 3.0])
    truncate(w, 1.0)             # Path on [1,2] with values [0,2]
    concat(prefix(w, 1), truncate(w, 1.0)) == w   # True, bitwise
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridError, PathError

__all__ = [
    "TimeGrid",
    "Path",
    "ModulusSpec",
    "concat",
    "truncate",
    "prefix",
    "shift_functional",
    "ShiftedFunctional",
    "dist_dinfty",
    "sup_norm_segment",
]

# Relative slack for matching user-supplied times to grid nodes.  Node
# times themselves are always computed from the index, never accumulated.
_TIME_MATCH_RTOL = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [t_start, t_end] with n_steps intervals.

    Node times are computed as t_i = t_start + (i/n)(t_end - t_start) so
    that t_0 and t_n are exact and no rounding accumulates.  A grid with
    zero steps is the degenerate single-point grid (t_start == t_end).
    """

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if self.t_start < 0:
            raise GridError(f"t_start must be >= 0, got {self.t_start}")
        if self.n_steps < 0:
            raise GridError(f"n_steps must be >= 0, got {self.n_steps}")
        if self.n_steps == 0:
            if self.t_end != self.t_start:
                raise GridError("zero-step grid needs t_end == t_start")
        elif self.t_end <= self.t_start:
            raise GridError(
                f"t_end must exceed t_start, got [{self.t_start}, {self.t_end}]"
            )

    @property
    def dt(self) -> float:
        if self.n_steps == 0:
            return 0.0
        return (self.t_end - self.t_start) / self.n_steps

    def time(self, i: int) -> float:
        """Node time t_i, computed directly from the index."""
        if not 0 <= i <= self.n_steps:
            raise GridError(f"node index {i} outside [0, {self.n_steps}]")
        if i == self.n_steps:
            return self.t_end
        return self.t_start + (i / self.n_steps) * (self.t_end - self.t_start)

    def times(self) -> np.ndarray:
        return np.array([self.time(i) for i in range(self.n_steps + 1)])

    def index_of(self, t: float) -> int:
        """Index of the grid node at time t; rejects off-node times."""
        span = max(abs(self.t_end), abs(self.t_start), 1.0)
        for i in range(self.n_steps + 1):
            ti = self.time(i)
            if t == ti or abs(t - ti) <= _TIME_MATCH_RTOL * span:
                return i
        raise GridError(f"time {t} is not a node of {self}")

    def floor_index(self, t: float) -> int:
        """Index of the greatest node with time <= t (clamping for the
        stopped-path operation)."""
        if t < self.t_start or t > self.t_end:
            raise GridError(f"time {t} outside [{self.t_start}, {self.t_end}]")
        span = max(abs(self.t_end), abs(self.t_start), 1.0)
        best = 0
        for i in range(self.n_steps + 1):
            ti = self.time(i)
            if ti <= t or abs(t - ti) <= _TIME_MATCH_RTOL * span:
                best = i
        return best

    def subgrid(self, i: int, j: int) -> "TimeGrid":
        """Grid covering nodes i..j of this grid."""
        if not 0 <= i <= j <= self.n_steps:
            raise GridError(f"bad subgrid range [{i}, {j}]")
        return TimeGrid(self.time(i), self.time(j), j - i)

    def compatible_spacing(self, other: "TimeGrid") -> bool:
        if self.n_steps == 0 or other.n_steps == 0:
            return True
        a, b = self.dt, other.dt
        return a == b or abs(a - b) <= _TIME_MATCH_RTOL * max(a, b)


@dataclass(frozen=True, eq=False)
class Path:
    """Zero-anchored path: one d-dimensional value per grid node.

    values has shape (n_steps + 1, d); a flat sequence is accepted for
    d = 1.  The first value must be exactly zero in every component.
    The stored array is frozen after construction.
    """

    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise PathError(f"values must be 1- or 2-dimensional, got shape {v.shape}")
        if v.shape[0] != self.grid.n_steps + 1:
            raise PathError(
                f"expected {self.grid.n_steps + 1} node values, got {v.shape[0]}"
            )
        if not np.all(v[0] == 0.0):
            raise PathError(f"paths start at zero, got initial value {v[0]}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.values.shape[0]

    def value_at(self, i: int) -> np.ndarray:
        return self.values[i]

    def __eq__(self, other) -> bool:
        # exact, bitwise: used by the round-trip laws
        if not isinstance(other, Path):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)

    def __repr__(self):
        return (
            f"Path([{self.grid.t_start}, {self.grid.t_end}], "
            f"n={self.grid.n_steps}, d={self.dim})"
        )


def concat(prefix_path: Path, suffix: Path) -> Path:
    """Glue suffix onto prefix_path: values follow the prefix up to the
    junction, then prefix-end plus suffix values."""
    gp, gs = prefix_path.grid, suffix.grid
    if gp.t_end != gs.t_start:
        raise GridError(
            f"junction mismatch: prefix ends at {gp.t_end}, suffix starts at {gs.t_start}"
        )
    if not gp.compatible_spacing(gs):
        raise GridError(f"spacing mismatch: {gp.dt} vs {gs.dt}")
    if prefix_path.dim != suffix.dim:
        raise PathError(f"dim mismatch: {prefix_path.dim} vs {suffix.dim}")
    out_grid = TimeGrid(gp.t_start, gs.t_end, gp.n_steps + gs.n_steps)
    # suffix.values[0] == 0, so the junction node keeps the prefix value bit-for-bit
    tail = prefix_path.values[-1] + suffix.values[1:]
    vals = np.concatenate([prefix_path.values, tail], axis=0)
    return Path(out_grid, vals)


def truncate(path: Path, s: float) -> Path:
    """Path on [s, t_end] anchored at zero: node values ω(r) − ω(s)."""
    i = path.grid.index_of(s)
    return truncate_at(path, i)


def truncate_at(path: Path, i: int) -> Path:
    if i == 0:
        return path
    sub = path.grid.subgrid(i, path.grid.n_steps)
    vals = path.values[i:] - path.values[i]
    return Path(sub, vals)


def prefix(path: Path, i: int) -> Path:
    """Restriction of path to its first i steps (exact slice)."""
    sub = path.grid.subgrid(0, i)
    return Path(sub, path.values[: i + 1])


class ShiftedFunctional:
    """Functional on suffix paths obtained by pinning a prefix.

    Calling it on a suffix evaluates the original functional on the
    concatenated path, so composition of shifts is associative by
    construction.
    """

    def __init__(self, xi, prefix_path: Path):
        self.xi = xi
        self.prefix_path = prefix_path

    def __call__(self, suffix: Path):
        return self.xi(concat(self.prefix_path, suffix))

    def __repr__(self):
        return f"ShiftedFunctional({self.xi!r} after {self.prefix_path!r})"


def shift_functional(xi, s: float, prefix_path: Path) -> ShiftedFunctional:
    """Shift the path-functional xi by the history prefix_path up to s."""
    if prefix_path.grid.t_end != s:
        # allow last-ulp slack in the caller's time argument
        if prefix_path.grid.index_of(s) != prefix_path.grid.n_steps:
            raise GridError(f"prefix must end at the shift time {s}")
    return ShiftedFunctional(xi, prefix_path)


def _stopped_values(path: Path, t: float) -> np.ndarray:
    """Node values of the stopped path ω(· ∧ t), clamped at the greatest
    grid node at or below t."""
    i = path.grid.floor_index(t)
    out = path.values.copy()
    out[i + 1 :] = path.values[i]
    return out


def dist_dinfty(t1: float, om1: Path, t2: float, om2: Path) -> float:
    """One-sided distance (t2 − t1) + sup-norm of the stopped-path gap.

    Defined for t1 <= t2 only; both paths must share grid and dimension.
    """
    if t1 > t2:
        raise GridError(f"one-sided distance needs t1 <= t2, got {t1} > {t2}")
    if om1.grid != om2.grid or om1.dim != om2.dim:
        raise GridError("paths must share grid and dim")
    gap = _stopped_values(om1, t1) - _stopped_values(om2, t2)
    sup = float(np.max(np.linalg.norm(gap, axis=1)))
    return (t2 - t1) + sup


def sup_norm_segment(path: Path, s: float, r: float) -> float:
    """Largest Euclidean node norm of the path over grid times [s, r]."""
    i = path.grid.index_of(s)
    j = path.grid.index_of(r)
    if i > j:
        raise GridError(f"segment start {s} exceeds end {r}")
    seg = path.values[i : j + 1]
    return float(np.max(np.linalg.norm(seg, axis=1)))


@dataclass(frozen=True)
class ModulusSpec:
    """Modulus-of-continuity template.

    kind:
        "linear"       rho(x) = kappa * x
        "power"        rho(x) = kappa * x**exponent
        "affine-power" rho(x) = kappa * (1 + x**exponent), the growth
                       envelope form (does not vanish at zero).
    """

    kind: str
    kappa: float
    exponent: float = 1.0

    _KINDS = ("linear", "power", "affine-power")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown modulus kind {self.kind!r}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.exponent < 1.0:
            raise ValueError(f"exponent must be >= 1, got {self.exponent}")

    def __call__(self, delta):
        d = np.asarray(delta, dtype=np.float64)
        if np.any(d < 0):
            raise ValueError("modulus argument must be >= 0")
        if self.kind == "linear":
            out = self.kappa * d
        elif self.kind == "power":
            out = self.kappa * d**self.exponent
        else:
            out = self.kappa * (1.0 + d**self.exponent)
        return float(out) if np.isscalar(delta) else out
