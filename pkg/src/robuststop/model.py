"""Controlled dynamics on scenario trees.

The state process follows the Euler step

    X_{k+1} = X_k + b(t_k, X_{0..k}, u_k) * dt + u_k * sqrt(dt) * xi_k

where b is a path-dependent drift with Lipschitz/growth constant kappa and
u_k ranges over a finite set of symmetric positive-definite volatility
matrices.  Two carriers are provided:

* exhaustive scenario trees with two-point (d = 1) or 2d-point (d > 1)
  increment kernels whose first two moments match b*dt and u*u^T*dt, and
* Gaussian Monte Carlo samples for checking the moment estimates.

Trees are non-recombining and store the full state prefix at each node:
both the drift and the rewards downstream may look at the whole history,
so merging nodes would be unsound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SizeError
from .pathspace import Path, TimeGrid

__all__ = [
    "DriftSpec",
    "ControlSet",
    "StepKernel",
    "ScenarioTree",
    "PathSample",
    "drift_eval",
    "step_kernel",
    "expand_tree",
    "simulate_paths",
    "prefix_key",
    "DEFAULT_NODE_CAP",
]

DEFAULT_NODE_CAP = 5_000_000

_DRIFT_KINDS = ("zero", "mean-reversion", "running-max", "custom-table")


@dataclass(frozen=True)
class DriftSpec:
    """Path-dependent drift b(t_k, prefix, u).

    kind "zero":           b = 0.
    kind "mean-reversion":  b = rate * (level - x_k), componentwise.
    kind "running-max":     b = -min(kappa, running max of the prefix),
                            componentwise (pulls large excursions down).
    kind "custom-table":    table is either a sequence indexed by k (a
                            time table of drift vectors) or a callable
                            (k, prefix, u) -> d-vector.

    kappa is the Lipschitz/growth constant the drift is declared to obey;
    verify.check_drift samples the two bounds.
    """

    kind: str
    kappa: float = 1.0
    rate: float = 0.0
    level: float = 0.0
    table: object = None

    def __post_init__(self):
        if self.kind not in _DRIFT_KINDS:
            raise ValueError(f"unknown drift kind {self.kind!r}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if self.kind == "custom-table" and self.table is None:
            raise ValueError("custom-table drift needs a table")


def drift_eval(spec: DriftSpec, k: int, prefix: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Drift vector at time index k given the state prefix (length k+1)."""
    prefix = np.atleast_2d(np.asarray(prefix, dtype=np.float64).T).T
    if prefix.shape[0] != k + 1:
        raise ValueError(f"prefix must hold k+1 = {k + 1} values, got {prefix.shape[0]}")
    d = prefix.shape[1]
    if spec.kind == "zero":
        return np.zeros(d)
    if spec.kind == "mean-reversion":
        return spec.rate * (spec.level - prefix[-1])
    if spec.kind == "running-max":
        m = np.max(prefix, axis=0)
        return -np.minimum(spec.kappa, m)
    # custom-table
    if callable(spec.table):
        out = np.asarray(spec.table(k, prefix, u), dtype=np.float64).reshape(d)
    else:
        out = np.asarray(spec.table[k], dtype=np.float64).reshape(d)
    if not np.all(np.isfinite(out)):
        raise ValueError(f"custom drift returned non-finite value at k={k}")
    return out


class ControlSet:
    """Finite volatility menu: SPD d x d matrices with operator norm <= cap.

    Scalars are accepted for d = 1.  The menu is deduplicated and sorted
    lexicographically on the matrix entries, so control indices are a
    stable total order.
    """

    def __init__(self, controls, cap: float):
        mats = []
        for u in controls:
            m = np.asarray(u, dtype=np.float64)
            if m.ndim == 0:
                m = m.reshape(1, 1)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"control must be a square matrix, got shape {m.shape}")
            if not np.array_equal(m, m.T):
                raise ValueError("control matrix must be symmetric")
            eig = np.linalg.eigvalsh(m)
            if eig[0] <= 0:
                raise ValueError(f"control must be positive definite, eigenvalues {eig}")
            if eig[-1] > cap * (1 + 1e-12):
                raise ValueError(f"control norm {eig[-1]} exceeds cap {cap}")
            m.setflags(write=False)
            mats.append(m)
        if not mats:
            raise ValueError("control set must be nonempty")
        dims = {m.shape[0] for m in mats}
        if len(dims) != 1:
            raise ValueError(f"controls have mixed dimensions {sorted(dims)}")
        # dedupe on exact entries, then sort lexicographically
        uniq = {tuple(m.flat): m for m in mats}
        self.controls = [uniq[key] for key in sorted(uniq)]
        self.cap = float(cap)
        self.dim = self.controls[0].shape[0]

    def __len__(self):
        return len(self.controls)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.controls[i]

    def __iter__(self):
        return iter(self.controls)

    def scalars(self) -> list[float]:
        """Scalar view for d = 1 menus."""
        if self.dim != 1:
            raise ValueError("scalar view only for d = 1")
        return [float(m[0, 0]) for m in self.controls]

    def __repr__(self):
        if self.dim == 1:
            return f"ControlSet({self.scalars()}, cap={self.cap})"
        return f"ControlSet({len(self)} matrices, d={self.dim}, cap={self.cap})"


@dataclass(frozen=True)
class StepKernel:
    """One-step increment distribution: finitely many (increment, weight)."""

    increments: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        inc = np.atleast_2d(np.asarray(self.increments, dtype=np.float64).T).T
        w = np.asarray(self.weights, dtype=np.float64)
        if inc.shape[0] != w.shape[0]:
            raise ValueError("support and weights length mismatch")
        if np.any(w <= 0):
            raise ValueError("kernel weights must be positive")
        if abs(float(np.sum(w)) - 1.0) > 1e-15 * inc.shape[0]:
            raise ValueError(f"kernel weights sum to {np.sum(w)}, not 1")
        inc.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "increments", inc)
        object.__setattr__(self, "weights", w)

    @property
    def branching(self) -> int:
        return self.increments.shape[0]

    def mean(self) -> np.ndarray:
        return self.weights @ self.increments

    def covariance(self) -> np.ndarray:
        centered = self.increments - self.mean()
        return (centered.T * self.weights) @ centered


def step_kernel(
    spec: DriftSpec,
    k: int,
    prefix: np.ndarray,
    u: np.ndarray,
    dt: float,
    branching=2,
) -> StepKernel:
    """Two-point (d=1) or 2d-point (d>1) kernel matching mean b*dt and
    covariance u*u^T*dt.

    branching may be a callable(spec, k, prefix, u, dt) -> StepKernel for
    custom constructions; otherwise it must equal 2 for d = 1 and 2d for
    d > 1.
    """
    if callable(branching):
        kern = branching(spec, k, prefix, u, dt)
        if not isinstance(kern, StepKernel):
            raise TypeError("custom kernel builder must return a StepKernel")
        return kern
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 0:
        u = u.reshape(1, 1)
    d = u.shape[0]
    eig = np.linalg.eigvalsh(u)
    if eig[0] <= 0:
        raise ValueError(f"control must be positive definite, eigenvalues {eig}")
    b = drift_eval(spec, k, prefix, u)
    shift = b * dt
    if d == 1:
        if branching != 2:
            raise ValueError(f"d=1 kernels use branching 2, got {branching}")
        c = float(u[0, 0]) * math.sqrt(dt)
        inc = np.array([[shift[0] + c], [shift[0] - c]])
        w = np.array([0.5, 0.5])
        return StepKernel(inc, w)
    if branching not in (2 * d, None):
        raise ValueError(f"d={d} kernels use branching {2 * d}, got {branching}")
    scale = math.sqrt(d * dt)
    rows = []
    for j in range(d):
        col = u[:, j] * scale
        rows.append(shift + col)
        rows.append(shift - col)
    w = np.full(2 * d, 1.0 / (2 * d))
    return StepKernel(np.array(rows), w)


def prefix_key(k: int, values: np.ndarray) -> tuple:
    """Hashable identity of an observed state prefix.

    Float equality semantics (0.0 == -0.0), so two nodes whose prefixes
    agree as real vectors share a key.  This is the stopper's information:
    rules are keyed on these, never on tree node ids.
    """
    return (k, tuple(np.asarray(values, dtype=np.float64).flat))


class ScenarioTree:
    """Control-expanded non-recombining tree.

    Arena layout: node i has time index k[i], parent[i] (-1 at the root),
    state prefix prefixes[i] of shape (k[i]+1, d), and for interior nodes
    children[i][ci][oi] = child node id for control index ci and outcome
    index oi.  Edge weights mirror the children layout.
    """

    def __init__(self, grid, controls, branching, drift):
        self.grid = grid
        self.controls = controls
        self.branching = branching
        self.drift = drift
        self.k = []
        self.parent = []
        self.prefixes = []
        self.children = []  # per node: None (leaf) or list over controls of lists of ids
        self.edge_weights = []

    @property
    def n_nodes(self) -> int:
        return len(self.k)

    @property
    def root(self) -> int:
        return 0

    def is_leaf(self, i: int) -> bool:
        return self.k[i] == self.grid.n_steps

    def nodes_at(self, depth: int) -> list[int]:
        return [i for i in range(self.n_nodes) if self.k[i] == depth]

    def leaves(self) -> list[int]:
        return self.nodes_at(self.grid.n_steps)

    def interior(self) -> list[int]:
        return [i for i in range(self.n_nodes) if not self.is_leaf(i)]

    def state(self, i: int) -> np.ndarray:
        """Current value at node i (last entry of its prefix)."""
        return self.prefixes[i][-1]

    def node_key(self, i: int) -> tuple:
        return prefix_key(self.k[i], self.prefixes[i])

    def subtree_nodes(self, i: int) -> list[int]:
        """Node ids below and including i, in construction (BFS-ish) order."""
        out = [i]
        stack = [i]
        while stack:
            j = stack.pop()
            if self.children[j] is None:
                continue
            for per_control in self.children[j]:
                for c in per_control:
                    out.append(c)
                    stack.append(c)
        return sorted(out)

    def _add_node(self, k, prefix, parent):
        self.k.append(k)
        self.prefixes.append(prefix)
        self.parent.append(parent)
        self.children.append(None)
        self.edge_weights.append(None)
        return len(self.k) - 1


def _projected_node_count(n_levels: int, fanout: int) -> int:
    total = 0
    level = 1
    for _ in range(n_levels + 1):
        total += level
        level *= fanout
    return total


def expand_tree(
    grid: TimeGrid,
    x0,
    drift: DriftSpec,
    controls: ControlSet,
    branching=2,
    node_cap: int = DEFAULT_NODE_CAP,
    init_prefix=None,
    kernel_builder=None,
) -> ScenarioTree:
    """Expand the complete scenario tree on grid.

    The root holds prefix [x0] at time index 0, or init_prefix (an array
    of shape (k0+1, d) covering grid nodes 0..k0) when resuming from a
    later time.  Every interior node gets |controls| * branching children,
    one per (control, outcome) pair.

    kernel_builder, when given, overrides the default two-point kernel;
    it is passed through to step_kernel as the custom branching callable.
    """
    d = controls.dim
    if init_prefix is not None:
        root_prefix = np.atleast_2d(np.asarray(init_prefix, dtype=np.float64).T).T
        if root_prefix.shape[1] != d:
            raise ValueError(f"init_prefix dim {root_prefix.shape[1]} != controls dim {d}")
        k0 = root_prefix.shape[0] - 1
        if k0 > grid.n_steps:
            raise ValueError("init_prefix longer than the grid")
    else:
        root_prefix = np.broadcast_to(
            np.asarray(x0, dtype=np.float64).reshape(-1), (1, d)
        ).astype(np.float64)
        k0 = 0

    if d == 1 and not callable(kernel_builder):
        if branching != 2:
            raise ValueError(f"d=1 trees use branching 2, got {branching}")
        fanout_per_control = 2
    elif callable(kernel_builder):
        fanout_per_control = branching
    else:
        fanout_per_control = 2 * d
        branching = fanout_per_control

    fanout = len(controls) * fanout_per_control
    projected = _projected_node_count(grid.n_steps - k0, fanout)
    if projected > node_cap:
        raise SizeError(
            f"tree would hold {projected} nodes, exceeding the cap {node_cap}"
        )

    tree = ScenarioTree(grid, controls, fanout_per_control, drift)
    root_prefix = root_prefix.copy()
    root_prefix.setflags(write=False)
    tree._add_node(k0, root_prefix, -1)
    dt = grid.dt
    builder = kernel_builder if callable(kernel_builder) else 2 if d == 1 else 2 * d

    frontier = [0]
    for depth in range(k0, grid.n_steps):
        next_frontier = []
        for node in frontier:
            prefix = tree.prefixes[node]
            kids = []
            wts = []
            for u in controls:
                kern = step_kernel(drift, depth, prefix, u, dt, builder)
                if kern.branching != fanout_per_control:
                    raise ValueError(
                        f"kernel branching {kern.branching} != tree branching "
                        f"{fanout_per_control}"
                    )
                ids = []
                for inc in kern.increments:
                    child_prefix = np.concatenate(
                        [prefix, (prefix[-1] + inc)[None, :]], axis=0
                    )
                    child_prefix.setflags(write=False)
                    cid = tree._add_node(depth + 1, child_prefix, node)
                    ids.append(cid)
                    next_frontier.append(cid)
                kids.append(ids)
                wts.append(kern.weights)
            tree.children[node] = kids
            tree.edge_weights[node] = wts
        frontier = next_frontier
    return tree


@dataclass
class PathSample:
    """Monte Carlo sample of Euler paths, absolute values from x0."""

    grid: TimeGrid
    x0: np.ndarray
    values: np.ndarray  # (n_paths, n_steps + 1, d)
    seed: int

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    def sup_distance_from_start(self) -> np.ndarray:
        """Per path: max_k | X_k - x0 | (Euclidean)."""
        dev = self.values - self.values[:, :1, :]
        return np.max(np.linalg.norm(dev, axis=2), axis=1)

    def as_paths(self):
        """Iterate the sample as zero-anchored Path objects."""
        for row in self.values:
            yield Path(self.grid, row - row[0])


def _drift_block(spec: DriftSpec, k: int, values: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorized drift over a block: values has shape (n, k+1, d)."""
    n, _, d = values.shape
    if spec.kind == "zero":
        return np.zeros((n, d))
    if spec.kind == "mean-reversion":
        return spec.rate * (spec.level - values[:, -1, :])
    if spec.kind == "running-max":
        m = np.max(values, axis=1)
        return -np.minimum(spec.kappa, m)
    if not callable(spec.table):
        return np.broadcast_to(
            np.asarray(spec.table[k], dtype=np.float64).reshape(d), (n, d)
        )
    return np.stack([drift_eval(spec, k, row, u) for row in values])


_BLOCK = 4096


def simulate_paths(
    grid: TimeGrid,
    x0,
    drift: DriftSpec,
    strategy,
    n_paths: int,
    seed: int,
) -> PathSample:
    """Gaussian Euler simulation, deterministic given seed.

    strategy is a constant control (scalar or SPD matrix) or a callable
    (k, values_so_far) -> control matrix, applied uniformly across the
    block.  Paths are generated in fixed-size blocks with per-block
    derived seeds, so the output does not depend on scheduling.
    """
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    if callable(strategy):
        control_at = strategy
        d = np.asarray(x0, dtype=np.float64).reshape(-1).size
    else:
        const = np.asarray(strategy, dtype=np.float64)
        if const.ndim == 0:
            const = const.reshape(1, 1)
        control_at = lambda k, values: const
        d = const.shape[0]
    x0v = np.broadcast_to(np.asarray(x0, dtype=np.float64).reshape(-1), (d,))
    n = grid.n_steps
    dt = grid.dt
    sqdt = math.sqrt(dt) if n > 0 else 0.0

    out = np.empty((n_paths, n + 1, d))
    seeds = np.random.SeedSequence(seed).spawn(-(-n_paths // _BLOCK))
    start = 0
    for ss in seeds:
        stop = min(start + _BLOCK, n_paths)
        m = stop - start
        rng = np.random.Generator(np.random.PCG64(ss))
        noise = rng.standard_normal((m, n, d))
        block = np.empty((m, n + 1, d))
        block[:, 0, :] = x0v
        for k in range(n):
            u = np.asarray(control_at(k, block[:, : k + 1, :]), dtype=np.float64)
            if u.ndim == 0:
                u = u.reshape(1, 1)
            b = _drift_block(drift, k, block[:, : k + 1, :], u)
            block[:, k + 1, :] = (
                block[:, k, :] + b * dt + (noise[:, k, :] @ u.T) * sqdt
            )
        out[start:stop] = block
        start = stop
    return PathSample(grid, x0v, out, seed)
