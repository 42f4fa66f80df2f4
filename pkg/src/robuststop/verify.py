"""Runnable checks behind the property-test suite.

Every claim the solver leans on has one callable check here: reward and
drift regularity, envelope structure, the supermartingale and martingale
laws of the worst-case envelope, both dynamic-programming identities, the
hitting-time ladder, continuity in the stored pre-history, and the Monte
Carlo moment scaling.  Each check returns a CheckReport carrying the
worst violation it saw, so a failure localizes itself.

Checks are deterministic given their seeds, and each one can genuinely
fail: corrupt_envelope and corrupt_tau build broken inputs for the
negative tests, and the cli's --mutate flag runs the same demonstrations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .envelope import EnvelopeSolution, _stop_predicate, robust_envelope, tau_delta
from .errors import SizeError
from .model import DriftSpec, drift_eval, expand_tree, simulate_paths
from .pathspace import Path, TimeGrid, dist_dinfty
from .reward import RewardFunctional, eval_reward

__all__ = [
    "CheckReport",
    "pair_sampler",
    "prefix_sampler",
    "check_y1",
    "check_drift",
    "check_envelope_basic",
    "check_supermartingale",
    "check_martingale_to_tau",
    "check_dpp",
    "check_dpp_random_horizon",
    "check_tau_monotone",
    "check_continuity_in_prehistory",
    "check_sde_moments",
    "corrupt_envelope",
    "corrupt_tau",
]

STOP_TABLE_CAP = 500_000
STRATEGY_TABLE_CAP = 1_000_000


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one check.

    worst is the largest violation encountered (signed: anything at or
    below tolerance passes); n_checked counts the individual comparisons
    the worst was taken over.  details holds check-specific diagnostics,
    all JSON-friendly scalars and lists.
    """

    name: str
    passed: bool
    worst: float
    tolerance: float
    n_checked: int
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "worst": float(self.worst),
            "tolerance": float(self.tolerance),
            "n_checked": int(self.n_checked),
            "details": _jsonable(self.details),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# sampled regularity checks


def pair_sampler(grid, dim: int = 1, spread: float = 1.0):
    """Default sampler of ordered time-path pairs for check_y1.

    Draws two zero-anchored paths on grid with uniform increments of
    magnitude at most spread * sqrt(dt); half the time the second path is
    a small perturbation of the first so tiny distances are exercised.
    With the default spread the paths stay well inside the catalog's
    declared sampling range.
    """
    n = grid.n_steps
    step = spread * math.sqrt(grid.dt) if n > 0 else 0.0

    def walk(rng, scale):
        inc = rng.uniform(-step * scale, step * scale, size=(n, dim))
        vals = np.concatenate([np.zeros((1, dim)), np.cumsum(inc, axis=0)])
        return Path(grid, vals)

    def draw(rng):
        om1 = walk(rng, 1.0)
        if rng.random() < 0.5:
            om2 = walk(rng, 1.0)
        else:
            bump = walk(rng, 0.05)
            om2 = Path(grid, om1.values + bump.values)
        k1 = int(rng.integers(0, n + 1))
        k2 = int(rng.integers(k1, n + 1))
        return k1, om1, k2, om2

    return draw


def check_y1(
    Y: RewardFunctional,
    sampler,
    n: int,
    tolerance: float = 1e-12,
    seed: int = 2026,
) -> CheckReport:
    """One-sided continuity of the reward in the time-path pair.

    On n sampled ordered pairs (k1, om1) <= (k2, om2), the earlier value
    may exceed the later one by at most the declared modulus of the
    one-sided distance.  sampler(rng) -> (k1, om1, k2, om2) with both
    paths on one grid and k1 <= k2.
    """
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(n):
        k1, om1, k2, om2 = sampler(rng)
        grid = om1.grid
        lhs = eval_reward(Y, k1, om1.values[: k1 + 1]) - eval_reward(
            Y, k2, om2.values[: k2 + 1]
        )
        rhs = Y.modulus(dist_dinfty(grid.time(k1), om1, grid.time(k2), om2))
        worst = max(worst, lhs - rhs)
    return CheckReport(
        name="y1",
        passed=worst <= tolerance,
        worst=float(worst),
        tolerance=tolerance,
        n_checked=n,
        details={"modulus_kind": Y.modulus.kind, "kappa": Y.modulus.kappa},
    )


def prefix_sampler(grid, controls, dim: int = 1, spread: float = 1.0):
    """Default sampler of (k, prefix, prefix', u) triples for check_drift.

    Prefixes are independent bounded random walks; the control is drawn
    uniformly from the menu.
    """
    step = spread * math.sqrt(grid.dt) if grid.n_steps > 0 else spread

    def walk(rng, m):
        inc = rng.uniform(-step, step, size=(m, dim))
        return np.cumsum(inc, axis=0) - inc[0] + rng.uniform(-spread, spread, dim)

    def draw(rng):
        k = int(rng.integers(0, max(grid.n_steps, 1)))
        p1 = walk(rng, k + 1)
        p2 = walk(rng, k + 1)
        u = controls[int(rng.integers(0, len(controls)))]
        return k, p1, p2, u

    return draw


def check_drift(
    spec: DriftSpec,
    sampler,
    n: int,
    tolerance: float = 1e-12,
    seed: int = 2026,
) -> CheckReport:
    """Growth and Lipschitz bounds of the drift, sampled.

    At the zero prefix the drift norm must stay below kappa * (1 + |u|);
    between two prefixes it must move by at most kappa times their
    componentwise sup gap.  sampler(rng) -> (k, prefix, prefix', u).
    """
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(n):
        k, p1, p2, u = sampler(rng)
        a1 = np.atleast_2d(np.asarray(p1, dtype=np.float64).T).T
        a2 = np.atleast_2d(np.asarray(p2, dtype=np.float64).T).T
        um = np.atleast_2d(np.asarray(u, dtype=np.float64))
        unorm = float(np.linalg.norm(um, 2))
        b0 = drift_eval(spec, k, np.zeros_like(a1), u)
        growth = float(np.linalg.norm(b0)) - spec.kappa * (1.0 + unorm)
        b1 = drift_eval(spec, k, a1, u)
        b2 = drift_eval(spec, k, a2, u)
        sup = float(np.max(np.linalg.norm(a1 - a2, axis=1)))
        lip = float(np.linalg.norm(b1 - b2)) - spec.kappa * sup
        worst = max(worst, growth, lip)
    return CheckReport(
        name="drift-bounds",
        passed=worst <= tolerance,
        worst=float(worst),
        tolerance=tolerance,
        n_checked=2 * n,
        details={"kind": spec.kind, "kappa": spec.kappa},
    )


# ---------------------------------------------------------------------------
# structural envelope checks


def check_envelope_basic(sol: EnvelopeSolution) -> CheckReport:
    """Envelope dominates the reward everywhere and meets it at leaves,
    with no tolerance at all: both facts are assignments in the sweep."""
    tree = sol.tree
    worst = float(np.max(sol.y - sol.z))
    leaves = tree.leaves()
    leaf_gap = float(np.max(np.abs(sol.z[leaves] - sol.y[leaves])))
    worst = max(worst, leaf_gap)
    return CheckReport(
        name="envelope-basic",
        passed=worst <= 0.0,
        worst=worst,
        tolerance=0.0,
        n_checked=tree.n_nodes + len(leaves),
        details={"leaf_gap": leaf_gap},
    )


def _frozen_stop_tables(tree, vals, froze, on_table, cap: int) -> int:
    """Worst-case means of vals frozen at every stopping set, per node.

    table(node)[r] is the backward min over controls of the expectation
    of vals frozen at stopping set r of the subtree; entry 0 is the
    immediate stop.  froze(node) prunes the subtree to immediate stop.
    on_table(node, table) fires once per node, bottom-up.  Stopping sets
    assign a choice to every child subtree across all controls, which is
    a superset of the path-adapted rules, so checks over these tables are
    conservative.  Returns the root table size.
    """

    def count(node) -> int:
        if tree.is_leaf(node) or froze(node):
            return 1
        prod = 1
        for kids in tree.children[node]:
            for c in kids:
                prod *= count(c)
        return 1 + prod

    total = count(tree.root)
    if total > cap:
        raise SizeError(f"{total} stopping sets exceed the cap {cap}")

    def table(node) -> np.ndarray:
        if tree.is_leaf(node) or froze(node):
            t = np.array([vals[node]])
            on_table(node, t)
            return t
        all_kids = [c for kids in tree.children[node] for c in kids]
        tables = [table(c) for c in all_kids]
        sizes = [t.shape[0] for t in tables]
        axis = {c: i for i, c in enumerate(all_kids)}
        cont = None
        for kids, w in zip(tree.children[node], tree.edge_weights[node]):
            acc = None
            for j, c in enumerate(kids):
                shape = [1] * len(sizes)
                shape[axis[c]] = sizes[axis[c]]
                term = w[j] * tables[axis[c]].reshape(shape)
                acc = term if acc is None else acc + term
            cont = acc if cont is None else np.minimum(cont, acc)
        cont = np.broadcast_to(cont, sizes).reshape(-1)
        t = np.concatenate([[vals[node]], cont])
        on_table(node, t)
        return t

    table(tree.root)
    return total


def check_supermartingale(
    tree, sol: EnvelopeSolution, tolerance: float = 1e-9, cap: int = STOP_TABLE_CAP
) -> CheckReport:
    """Worst-case means of the stopped envelope never exceed the envelope.

    At every node, every stopping set of the subtree is enumerated and
    the frozen-envelope worst-case mean compared against the node value.
    Immediate stop realizes equality, so the worst violation is >= 0 up
    to rounding.
    """
    state = {"worst": -np.inf, "n": 0}

    def on_table(node, t):
        state["worst"] = max(state["worst"], float(np.max(t) - sol.z[node]))
        state["n"] += t.shape[0]

    root_size = _frozen_stop_tables(tree, sol.z, lambda i: False, on_table, cap)
    return CheckReport(
        name="supermartingale",
        passed=state["worst"] <= tolerance,
        worst=state["worst"],
        tolerance=tolerance,
        n_checked=state["n"],
        details={"root_stopping_sets": root_size},
    )


def check_martingale_to_tau(
    tree, sol: EnvelopeSolution, tolerance: float = 1e-9, cap: int = STOP_TABLE_CAP
) -> CheckReport:
    """The envelope is flat, in the worst-case mean, up to the meeting time.

    Stopping sets are restricted to act at or before the stop region, so
    every enumerated worst-case mean must reproduce the node value
    exactly (within the enumeration tolerance), not just stay below it.
    """
    flags = sol.stop
    state = {"worst": -np.inf, "n": 0}

    def on_table(node, t):
        state["worst"] = max(state["worst"], float(np.max(np.abs(t - sol.z[node]))))
        state["n"] += t.shape[0]

    root_size = _frozen_stop_tables(
        tree, sol.z, lambda i: bool(flags[i]), on_table, cap
    )
    return CheckReport(
        name="martingale-to-tau",
        passed=state["worst"] <= tolerance,
        worst=state["worst"],
        tolerance=tolerance,
        n_checked=state["n"],
        details={"root_stopping_sets": root_size},
    )


# ---------------------------------------------------------------------------
# dynamic programming identities


def _snell_strategy_tables(tree, y, z, cutoff, cap: int):
    """One optimally-stopped value per truncated strategy.

    Below the cutoff, table(node) holds the classic envelope value at
    node for every control assignment on the truncated subtree; at the
    cutoff (or a leaf) the horizon ends with the solver's value z[node].
    Returns (root table, its size).
    """

    def count(node) -> int:
        if tree.is_leaf(node) or cutoff(node):
            return 1
        total = 0
        for kids in tree.children[node]:
            prod = 1
            for c in kids:
                prod *= count(c)
            total += prod
        return total

    total = count(tree.root)
    if total > cap:
        raise SizeError(f"{total} truncated strategies exceed the cap {cap}")

    def table(node) -> np.ndarray:
        if tree.is_leaf(node) or cutoff(node):
            return np.array([z[node]])
        parts = []
        for kids, w in zip(tree.children[node], tree.edge_weights[node]):
            tabs = [table(c) for c in kids]
            sizes = [t.shape[0] for t in tabs]
            acc = None
            for j, t in enumerate(tabs):
                shape = [1] * len(sizes)
                shape[j] = sizes[j]
                term = w[j] * t.reshape(shape)
                acc = term if acc is None else acc + term
            parts.append(np.maximum(y[node], acc).reshape(-1))
        return np.concatenate(parts)

    return table(tree.root), total


def check_dpp(
    tree,
    sol: EnvelopeSolution,
    s,
    tolerance: float = 1e-9,
    cap: int = STRATEGY_TABLE_CAP,
) -> CheckReport:
    """One-step-at-a-time identity against the truncated game.

    The root value must equal the min over control assignments on the
    horizon before s of the optimally-stopped value whose terminal slice
    is the solver's own slice-s values.  s is a grid index or node time.
    """
    s_idx = int(s) if isinstance(s, (int, np.integer)) else tree.grid.index_of(s)
    if not tree.k[tree.root] <= s_idx <= tree.grid.n_steps:
        raise ValueError(f"cut {s_idx} outside the tree's horizon")
    table, size = _snell_strategy_tables(
        tree, sol.y, sol.z, lambda i: tree.k[i] >= s_idx, cap
    )
    recomputed = float(np.min(table))
    worst = abs(recomputed - sol.root_value())
    return CheckReport(
        name="dpp-deterministic",
        passed=worst <= tolerance,
        worst=worst,
        tolerance=tolerance,
        n_checked=size,
        details={"s": s_idx, "recomputed_root": recomputed},
    )


def check_dpp_random_horizon(
    tree,
    sol: EnvelopeSolution,
    nu,
    tolerance: float = 1e-9,
    cap: int = STRATEGY_TABLE_CAP,
) -> CheckReport:
    """Same identity with the horizon cut at a hitting time.

    nu is a grid index, a callable (k, prefix) -> bool whose first hit
    ends the horizon, or a mapping from prefix keys to booleans; leaves
    end it regardless.
    """
    hit = _stop_predicate(nu, tree)
    table, size = _snell_strategy_tables(tree, sol.y, sol.z, hit, cap)
    recomputed = float(np.min(table))
    worst = abs(recomputed - sol.root_value())
    return CheckReport(
        name="dpp-random-horizon",
        passed=worst <= tolerance,
        worst=worst,
        tolerance=tolerance,
        n_checked=size,
        details={"recomputed_root": recomputed},
    )


# ---------------------------------------------------------------------------
# hitting-time ladder


def check_tau_monotone(sol: EnvelopeSolution, max_halvings: int = 60) -> CheckReport:
    """The delta-relaxed hitting times decrease to tau_star as delta grows,
    i.e. tighten monotonically as delta shrinks, and reach it.

    Runs tau_delta down a halving ladder until delta is below half the
    smallest positive envelope-reward gap, where the hitting time must
    coincide with tau_star (and with the stored scenario map when the
    solution was built at delta = 0).  Exact: integer time indices.
    """
    tau_star = tau_delta(sol, 0.0)
    gaps = (sol.z - sol.y)[~sol.stop_flags(0.0)]
    limit = float(np.min(gaps)) / 2.0 if gaps.size else 1.0
    deltas = [1.0]
    while deltas[-1] >= limit and len(deltas) < max_halvings:
        deltas.append(deltas[-1] / 2.0)
    ladder = [tau_delta(sol, d) for d in deltas]

    worst = 0.0
    n_checked = 0
    for prev, nxt in zip(ladder, ladder[1:]):
        # scenarios refine as delta shrinks: each later key extends a
        # unique earlier one, and its stop index must not come earlier
        for key, t_next in nxt.items():
            t_prev = None
            for cut in range(len(key), -1, -1):
                if key[:cut] in prev:
                    t_prev = prev[key[:cut]]
                    break
            n_checked += 1
            if t_prev is None:
                worst = max(worst, 1.0)
            else:
                worst = max(worst, float(t_prev - t_next))
    final_equal = ladder[-1] == tau_star
    stored_equal = sol.delta != 0.0 or sol.tau == tau_star
    if not final_equal or not stored_equal:
        worst = max(worst, 1.0)
    return CheckReport(
        name="tau-monotone",
        passed=worst <= 0.0,
        worst=worst,
        tolerance=0.0,
        n_checked=n_checked + 2,
        details={
            "n_deltas": len(deltas),
            "final_delta": deltas[-1],
            "final_equal": bool(final_equal),
            "stored_equal": bool(stored_equal),
        },
    )


# ---------------------------------------------------------------------------
# continuity in the stored pre-history


def check_continuity_in_prehistory(
    grid,
    drift: DriftSpec,
    controls,
    Y: RewardFunctional,
    split,
    x0=0.0,
    n_pairs: int = 20,
    spread: float = 0.5,
    rho1=None,
    seed: int = 2026,
    tolerance: float = 1e-12,
) -> CheckReport:
    """Root value moves by at most a modulus of the pre-history gap.

    Expands the tree twice from perturbed history prefixes covering grid
    nodes 0..split and compares root values.  With rho1 given, the bound
    is asserted; without it, the first pair is identical (zero gap must
    give zero difference, exactly) and the best linear constant over the
    rest is fitted and reported.
    """
    rng = np.random.default_rng(seed)
    s_idx = int(split) if isinstance(split, (int, np.integer)) else grid.index_of(split)
    if not 0 <= s_idx <= grid.n_steps:
        raise ValueError(f"split {s_idx} outside the grid")
    d = controls.dim
    x0v = np.broadcast_to(np.asarray(x0, dtype=np.float64).reshape(-1), (d,))
    step = spread * math.sqrt(grid.dt) if grid.n_steps else 0.0

    def history(scale, base=None):
        inc = rng.uniform(-step * scale, step * scale, size=(s_idx, d))
        bumps = np.concatenate([np.zeros((1, d)), np.cumsum(inc, axis=0)])
        return (x0v if base is None else base) + bumps

    def root_value(pre):
        tree = expand_tree(grid, x0, drift, controls, init_prefix=pre)
        return robust_envelope(tree, Y).root_value()

    worst = -np.inf
    worst_zero = 0.0
    kappa_fit = 0.0
    n_zero = 0
    for i in range(n_pairs):
        pre1 = history(1.0)
        if i == 0:
            pre2 = pre1
        else:
            pre2 = history(float(2.0 ** -rng.integers(0, 6)), base=pre1)
        dist = float(np.max(np.linalg.norm(pre1 - pre2, axis=1)))
        dz = abs(root_value(pre1) - root_value(pre2))
        if rho1 is not None:
            worst = max(worst, dz - float(rho1(dist)))
        elif dist == 0.0:
            n_zero += 1
            worst_zero = max(worst_zero, dz)
        else:
            kappa_fit = max(kappa_fit, dz / dist)
    if rho1 is None:
        worst = worst_zero
    passed = worst <= tolerance
    return CheckReport(
        name="prehistory-continuity",
        passed=passed,
        worst=float(worst),
        tolerance=tolerance,
        n_checked=n_pairs,
        details={
            "split": s_idx,
            "kappa_fit": float(kappa_fit),
            "n_zero_gap_pairs": n_zero,
            "bound_given": rho1 is not None,
        },
    )


# ---------------------------------------------------------------------------
# Monte Carlo moment scaling


def check_sde_moments(
    u=1.0,
    n_steps: int = 16,
    deltas=(2.0**-4, 2.0**-5, 2.0**-6, 2.0**-7, 2.0**-8),
    n_paths: int = 100_000,
    seed: int = 20260815,
    slope_window=(0.4, 0.6),
    doob_slack: float = 0.05,
    drift: DriftSpec | None = None,
    drift_bound: float | None = None,
    tolerance: float = 0.0,
) -> CheckReport:
    """Scaling of the running supremum of driftless Euler paths.

    For each step size, n_steps Gaussian steps are simulated and the mean
    of sup_k |X_k| (and its square) estimated.  The fitted log-log slope
    against the horizon must land in slope_window for the first moment
    and in twice the window for the second; the second moment must also
    respect four times the terminal variance (with doob_slack of room for
    sampling noise).  When a drift and its sup bound are supplied, paths
    re-simulated with the same seed must obey the pathwise transfer
    mean sup |X| <= mean sup |M| + bound * horizon.
    """
    um = np.atleast_2d(np.asarray(u, dtype=np.float64))
    horizons = []
    m1 = []
    m2 = []
    m1_drift = []
    zero = DriftSpec("zero")
    for i, dlt in enumerate(deltas):
        grid_i = TimeGrid(0.0, n_steps * dlt, n_steps)
        sample = simulate_paths(grid_i, 0.0, zero, um, n_paths, seed + i)
        sup = sample.sup_distance_from_start()
        horizons.append(n_steps * dlt)
        m1.append(float(np.mean(sup)))
        m2.append(float(np.mean(sup**2)))
        if drift is not None:
            drifted = simulate_paths(grid_i, 0.0, drift, um, n_paths, seed + i)
            m1_drift.append(float(np.mean(drifted.sup_distance_from_start())))

    excesses = []
    details: dict = {"horizons": horizons, "m1": m1, "m2": m2}
    if all(v == 0.0 for v in m1):
        details["degenerate"] = True
    elif any(v <= 0.0 for v in m1):
        excesses.append(np.inf)
    else:
        logt = np.log(horizons)
        slope1 = float(np.polyfit(logt, np.log(m1), 1)[0])
        slope2 = float(np.polyfit(logt, np.log(m2), 1)[0])
        details["slope_p1"] = slope1
        details["slope_p2"] = slope2
        lo, hi = slope_window
        excesses += [lo - slope1, slope1 - hi, 2 * lo - slope2, slope2 - 2 * hi]
        var_rate = float(np.trace(um @ um.T))
        doob = max(
            m2_i - 4.0 * var_rate * t_i * (1.0 + doob_slack)
            for m2_i, t_i in zip(m2, horizons)
        )
        details["doob_excess"] = doob
        excesses.append(doob)
    if drift is not None:
        if drift_bound is None:
            raise ValueError("transfer check needs the drift's sup bound")
        transfer = max(
            md - (m0 + drift_bound * t)
            for md, m0, t in zip(m1_drift, m1, horizons)
        )
        details["transfer_excess"] = transfer
        details["m1_drift"] = m1_drift
        excesses.append(transfer)

    worst = float(max(excesses)) if excesses else 0.0
    return CheckReport(
        name="moment-scaling",
        passed=worst <= tolerance,
        worst=worst,
        tolerance=tolerance,
        n_checked=len(deltas) * n_paths,
        details=details,
    )


# ---------------------------------------------------------------------------
# deliberate breakage for the negative tests


def corrupt_envelope(sol: EnvelopeSolution, node=None, amount: float = -0.1):
    """Copy of a solution with one envelope value shifted.

    Default target is the first interior node still strictly above its
    reward (the root, failing that), where a downward shift contradicts
    both martingale laws.  Stop flags and the scenario map are kept, so
    the corruption is visible to every consistency check.
    """
    if node is None:
        node = sol.tree.root
        for i in sol.tree.interior():
            if not sol.stop[i]:
                node = i
                break
    z = sol.z.copy()
    z[node] += amount
    return EnvelopeSolution(
        sol.tree,
        sol.delta,
        sol.y,
        z,
        sol.continuation.copy(),
        sol.argmin_control.copy(),
        sol.stop.copy(),
        dict(sol.tau),
    )


def corrupt_tau(sol: EnvelopeSolution):
    """Copy of a solution whose stored scenario map lies about one stop."""
    tau = dict(sol.tau)
    key = next(iter(sorted(tau)))
    tau[key] = 0 if tau[key] > 0 else sol.tree.grid.n_steps
    return EnvelopeSolution(
        sol.tree,
        sol.delta,
        sol.y,
        sol.z.copy(),
        sol.continuation.copy(),
        sol.argmin_control.copy(),
        sol.stop.copy(),
        tau,
    )
