"""Configuration-driven command line front end.

Four subcommands: solve (backward sweep with slice summaries and the
stop-region boundary), oracle (exhaustive game enumeration against the
sweep), verify (named checks from the verify module, with --mutate to
demonstrate that each one can reject), and demo (American put under a
volatility interval, with CSV tables).

One JSON document configures a run.  Validation is fail-closed: an
unknown section or key is an error, never a silently ignored typo.
Reports are JSON with sorted keys and no timestamps; tables are CSV with
17 significant digits.  Identical config, seed, and thread count always
produce byte-identical files.

Exit codes: 0 all requested checks passed, 1 a check failed (or, under
--mutate, a mutation slipped through), 2 usage or configuration error,
3 a size cap or model error rejected the run.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import logging
import os
import sys

import numpy as np

from .envelope import classic_snell, robust_envelope
from .errors import ConfigError
from .game import game_values
from .model import ControlSet, DriftSpec, expand_tree, DEFAULT_NODE_CAP
from .pathspace import ModulusSpec, TimeGrid
from .reward import (
    RewardFunctional,
    american_put,
    constant_reward,
    custom_reward,
    lookback_max,
    running_sum,
    terminal_abs,
)
from . import verify as vf

__all__ = ["main"]

log = logging.getLogger("robuststop")

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

_SUITES = (
    "y1",
    "drift",
    "envelope",
    "supermartingale",
    "martingale",
    "dpp",
    "dpp-random",
    "tau",
    "prehistory",
    "moments",
)


# ---------------------------------------------------------------------------
# config loading, fail-closed

_SECTIONS = {
    "grid": {"t_start", "t_end", "n_steps"},
    "dynamics": {"x0", "drift"},
    "controls": {"values", "cap"},
    "reward": {"kind", "strike", "base", "scale", "value", "sample_range"},
    "solver": {
        "delta",
        "tolerance",
        "node_cap",
        "strategy_cap",
        "stop_time_cap",
        "rule_prefix_cap",
    },
    "verify": {
        "n_samples",
        "spread",
        "split",
        "prehistory_pairs",
        "dpp_s",
        "barrier",
        "moments_steps",
        "moments_paths",
    },
    "demo": {
        "base",
        "strikes",
        "sigma_lo",
        "sigma_hi",
        "t_end",
        "n_steps",
        "widenings",
    },
}

_DRIFT_KEYS = {"kind", "kappa", "rate", "level", "table"}


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(cfg) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
    for name, allowed in _SECTIONS.items():
        if name not in cfg:
            continue
        if not isinstance(cfg[name], dict):
            raise ConfigError(f"section {name!r} must be an object")
        bad = set(cfg[name]) - allowed
        if bad:
            raise ConfigError(f"unknown key(s) in section {name!r}: {sorted(bad)}")
    return cfg


def _section(cfg: dict, name: str, required=()) -> dict:
    sec = cfg.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"config needs a {name!r} section")
        return {}
    missing = [k for k in required if k not in sec]
    if missing:
        raise ConfigError(f"section {name!r} is missing {missing}")
    return sec


def _num(sec: dict, section: str, key: str, default=None, integer=False):
    if key not in sec:
        return default
    v = sec[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {v!r}")
    if integer:
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(f"{section}.{key} must be an integer, got {v!r}")
        return int(v)
    return float(v)


def build_grid(cfg: dict) -> TimeGrid:
    sec = _section(cfg, "grid", required=("t_end", "n_steps"))
    n = _num(sec, "grid", "n_steps", integer=True)
    if n < 1:
        raise ConfigError(f"grid.n_steps must be >= 1, got {n}")
    return TimeGrid(_num(sec, "grid", "t_start", 0.0), _num(sec, "grid", "t_end"), n)


def build_dynamics(cfg: dict):
    sec = _section(cfg, "dynamics")
    x0 = sec.get("x0", 0.0)
    if isinstance(x0, list):
        x0 = np.asarray(x0, dtype=np.float64)
    elif isinstance(x0, bool) or not isinstance(x0, (int, float)):
        raise ConfigError(f"dynamics.x0 must be a number or list, got {x0!r}")
    draw = sec.get("drift", {"kind": "zero"})
    if not isinstance(draw, dict):
        raise ConfigError("dynamics.drift must be an object")
    bad = set(draw) - _DRIFT_KEYS
    if bad:
        raise ConfigError(f"unknown key(s) in dynamics.drift: {sorted(bad)}")
    kind = draw.get("kind", "zero")
    if kind == "custom-table" and not isinstance(draw.get("table"), list):
        raise ConfigError("custom-table drift needs a JSON list table")
    try:
        drift = DriftSpec(
            kind=kind,
            kappa=_num(draw, "drift", "kappa", 1.0),
            rate=_num(draw, "drift", "rate", 0.0),
            level=_num(draw, "drift", "level", 0.0),
            table=draw.get("table"),
        )
    except ValueError as exc:
        raise ConfigError(f"bad drift: {exc}")
    return x0, drift


def build_controls(cfg: dict) -> ControlSet:
    sec = _section(cfg, "controls", required=("values",))
    values = sec["values"]
    if not isinstance(values, list) or not values:
        raise ConfigError("controls.values must be a nonempty list")
    mats = [np.asarray(v, dtype=np.float64) for v in values]
    cap = _num(sec, "controls", "cap")
    if cap is None:
        cap = max(
            float(np.max(np.abs(np.linalg.eigvalsh(np.atleast_2d(m))))) for m in mats
        )
    try:
        return ControlSet(mats, cap=cap)
    except ValueError as exc:
        raise ConfigError(f"bad controls: {exc}")


def build_reward(cfg: dict, grid: TimeGrid) -> RewardFunctional:
    sec = _section(cfg, "reward", required=("kind",))
    kind = sec["kind"]
    base = _num(sec, "reward", "base", 0.0)
    scale = _num(sec, "reward", "scale", 1.0)
    try:
        if kind == "american-put":
            return american_put(_num(sec, "reward", "strike", 1.0), base, scale)
        if kind == "lookback-max":
            return lookback_max(base, scale)
        if kind == "terminal-abs":
            return terminal_abs(base, scale)
        if kind == "running-sum":
            rng = _num(sec, "reward", "sample_range", 8.0)
            return running_sum(base, scale, grid.n_steps, rng, grid.dt)
        if kind == "constant":
            return constant_reward(_num(sec, "reward", "value", 0.0))
    except ValueError as exc:
        raise ConfigError(f"bad reward: {exc}")
    raise ConfigError(f"unknown reward kind {kind!r}")


def build_solver(cfg: dict) -> dict:
    sec = _section(cfg, "solver")
    out = {
        "delta": _num(sec, "solver", "delta", 0.0),
        "tolerance": _num(sec, "solver", "tolerance", 1e-9),
        "node_cap": _num(sec, "solver", "node_cap", DEFAULT_NODE_CAP, integer=True),
        "strategy_cap": _num(sec, "solver", "strategy_cap", 1_000_000, integer=True),
        "stop_time_cap": _num(sec, "solver", "stop_time_cap", 500_000, integer=True),
        "rule_prefix_cap": _num(sec, "solver", "rule_prefix_cap", 22, integer=True),
    }
    if out["delta"] < 0:
        raise ConfigError(f"solver.delta must be >= 0, got {out['delta']}")
    return out


# ---------------------------------------------------------------------------
# output plumbing


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _write_csv(out_dir: str, name: str, header: list, rows: list) -> str:
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(c) for c in row) + "\n")
    return path


def _emit(report: dict, out_dir: str | None, csvs: dict | None = None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    sys.stdout.write(text)
    if out_dir is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(text)
    for name, (header, rows) in (csvs or {}).items():
        _write_csv(out_dir, name, header, rows)


def _instance(cfg: dict):
    grid = build_grid(cfg)
    x0, drift = build_dynamics(cfg)
    controls = build_controls(cfg)
    Y = build_reward(cfg, grid)
    solver = build_solver(cfg)
    tree = expand_tree(grid, x0, drift, controls, node_cap=solver["node_cap"])
    log.info("expanded tree with %d nodes", tree.n_nodes)
    return grid, x0, drift, controls, Y, solver, tree


# ---------------------------------------------------------------------------
# solve


def cmd_solve(cfg: dict, out_dir: str | None, seed: int) -> int:
    grid, _, _, controls, Y, solver, tree = _instance(cfg)
    sol = robust_envelope(tree, Y, delta=solver["delta"])

    slices = []
    boundary_rows = []
    for k in range(tree.k[tree.root], grid.n_steps + 1):
        nodes = tree.nodes_at(k)
        z = sol.z[nodes]
        y = sol.y[nodes]
        stopped = [i for i in nodes if sol.stop[i]]
        slices.append(
            {
                "k": k,
                "time": grid.time(k),
                "n_nodes": len(nodes),
                "n_stopped": len(stopped),
                "z_min": float(np.min(z)),
                "z_mean": float(np.mean(z)),
                "z_max": float(np.max(z)),
                "y_min": float(np.min(y)),
                "y_max": float(np.max(y)),
            }
        )
        min_abs = (
            min(float(np.linalg.norm(tree.state(i))) for i in stopped)
            if stopped
            else None
        )
        boundary_rows.append(
            [k, grid.time(k), len(stopped), "" if min_abs is None else min_abs]
        )

    interior = tree.interior()
    counts = np.bincount(sol.argmin_control[interior], minlength=len(controls))
    freqs = (counts / max(len(interior), 1)).tolist()

    report = {
        "command": "solve",
        "seed": seed,
        "root_value": sol.root_value(),
        "delta": solver["delta"],
        "n_nodes": tree.n_nodes,
        "n_controls": len(controls),
        "argmin_control_frequencies": freqs,
        "slices": slices,
        "stop_boundary": [
            {"k": r[0], "time": r[1], "n_stopped": r[2], "min_abs_state": r[3]}
            for r in boundary_rows
        ],
        "tau_star": {
            "n_scenarios": len(sol.tau),
            "earliest": min(sol.tau.values()),
            "latest": max(sol.tau.values()),
        },
    }
    csvs = {
        "slices.csv": (
            [
                "k",
                "time",
                "n_nodes",
                "n_stopped",
                "z_min",
                "z_mean",
                "z_max",
                "y_min",
                "y_max",
            ],
            [
                [
                    s["k"],
                    s["time"],
                    s["n_nodes"],
                    s["n_stopped"],
                    s["z_min"],
                    s["z_mean"],
                    s["z_max"],
                    s["y_min"],
                    s["y_max"],
                ]
                for s in slices
            ],
        ),
        "boundary.csv": (
            ["k", "time", "n_stopped", "min_abs_state_stopped"],
            boundary_rows,
        ),
    }
    _emit(report, out_dir, csvs)
    return 0


# ---------------------------------------------------------------------------
# oracle


def cmd_oracle(cfg: dict, out_dir: str | None, seed: int) -> int:
    _, _, _, _, Y, solver, tree = _instance(cfg)
    rep = game_values(
        tree,
        Y,
        tolerance=solver["tolerance"],
        strategy_cap=solver["strategy_cap"],
        stop_time_cap=solver["stop_time_cap"],
        rule_prefix_cap=solver["rule_prefix_cap"],
    )
    report = {
        "command": "oracle",
        "seed": seed,
        "lower": rep.lower,
        "upper": rep.upper,
        "envelope_root": rep.envelope_root,
        "value_at_tau_star": rep.value_at_tau_star,
        "saddle_value": rep.saddle_value,
        "max_gap": rep.max_gap,
        "agree": rep.agree,
        "saddle": rep.saddle,
        "tolerance": rep.tolerance,
        "n_strategies": rep.n_strategies,
        "n_stopping_times": rep.n_stopping_times,
        "n_rule_maps": rep.n_rule_maps,
        "optimal_rule_stops": sum(1 for v in rep.optimal_rule.decisions.values() if v),
        "optimal_strategy_nodes": len(rep.optimal_strategy.assignments),
    }
    _emit(report, out_dir)
    return 0 if (rep.agree and rep.saddle) else 1


# ---------------------------------------------------------------------------
# verify


def _parse_suite(spec: str) -> list:
    if spec is None or spec.strip() == "":
        raise ConfigError(
            f"empty check selector; pick from {', '.join(_SUITES)} or 'all'"
        )
    if spec.strip() == "all":
        return list(_SUITES)
    names = [s.strip() for s in spec.split(",") if s.strip()]
    bad = [s for s in names if s not in _SUITES]
    if bad:
        raise ConfigError(f"unknown check name(s): {bad}; pick from {', '.join(_SUITES)}")
    if not names:
        raise ConfigError("empty check selector")
    return names


def _run_check(name, cfg, inst, seed: int, mutate: bool):
    grid, x0, drift, controls, Y, solver, tree, sol = inst
    vcfg = _section(cfg, "verify")
    n_samples = _num(vcfg, "verify", "n_samples", 10_000, integer=True)
    spread = _num(vcfg, "verify", "spread", 1.0)

    if name == "y1":
        target = Y
        if mutate:
            # payoff that decays with time but claims a zero modulus, so
            # the early value exceeds the later one on every ordered pair
            target = custom_reward(
                lambda k, track: float(-k), ModulusSpec("linear", 0.0), -float(grid.n_steps)
            )
        return vf.check_y1(
            target, vf.pair_sampler(grid, controls.dim, spread), n_samples, seed=seed
        )
    if name == "drift":
        spec = drift
        if mutate:
            spec = DriftSpec("mean-reversion", kappa=0.5, rate=1.5, level=0.0)
        return vf.check_drift(
            spec, vf.prefix_sampler(grid, controls, controls.dim, spread),
            n_samples, seed=seed,
        )
    if name == "envelope":
        target = vf.corrupt_envelope(sol, node=tree.leaves()[0]) if mutate else sol
        return vf.check_envelope_basic(target)
    if name == "supermartingale":
        target = vf.corrupt_envelope(sol) if mutate else sol
        return vf.check_supermartingale(tree, target, cap=solver["stop_time_cap"])
    if name == "martingale":
        target = vf.corrupt_envelope(sol) if mutate else sol
        return vf.check_martingale_to_tau(tree, target, cap=solver["stop_time_cap"])
    if name == "dpp":
        s = _num(vcfg, "verify", "dpp_s", grid.n_steps, integer=True)
        if not 0 <= s <= grid.n_steps:
            raise ConfigError(f"verify.dpp_s must lie in [0, {grid.n_steps}]")
        target = sol
        if mutate:
            target = vf.corrupt_envelope(sol, node=tree.root)
            s = max(s, 1)
        return vf.check_dpp(tree, target, s, cap=solver["strategy_cap"])
    if name == "dpp-random":
        barrier = _num(vcfg, "verify", "barrier")
        if mutate or barrier is None:
            nu = grid.n_steps
        else:
            nu = lambda k, prefix: bool(np.linalg.norm(prefix[-1]) >= barrier)
        target = vf.corrupt_envelope(sol, node=tree.root) if mutate else sol
        return vf.check_dpp_random_horizon(tree, target, nu, cap=solver["strategy_cap"])
    if name == "tau":
        target = vf.corrupt_tau(sol) if mutate else sol
        return vf.check_tau_monotone(target)
    if name == "prehistory":
        split = _num(vcfg, "verify", "split", min(1, grid.n_steps), integer=True)
        pairs = _num(vcfg, "verify", "prehistory_pairs", 12, integer=True)
        # with a path-independent drift the reward's own modulus transfers
        # to the root value; otherwise fit and report
        rho1 = Y.modulus if drift.kind in ("zero", "custom-table") else None
        if mutate:
            rho1 = ModulusSpec("linear", 0.0)
        return vf.check_continuity_in_prehistory(
            grid, drift, controls, Y, split,
            x0=x0, n_pairs=pairs, spread=spread, rho1=rho1, seed=seed,
        )
    if name == "moments":
        steps = _num(vcfg, "verify", "moments_steps", 16, integer=True)
        paths = _num(vcfg, "verify", "moments_paths", 100_000, integer=True)
        kwargs = {"u": controls[0], "n_steps": steps, "n_paths": paths, "seed": seed}
        if mutate:
            # constant unit push with an understated declared bound
            kwargs["drift"] = DriftSpec(
                "custom-table", table=[[1.0] * controls.dim] * steps
            )
            kwargs["drift_bound"] = 1e-6
        return vf.check_sde_moments(**kwargs)
    raise ConfigError(f"unknown check name {name!r}")


def cmd_verify(cfg: dict, suite_spec: str, out_dir: str | None, seed: int,
               threads: int, mutate: bool) -> int:
    names = _parse_suite(suite_spec)
    grid, x0, drift, controls, Y, solver, tree = _instance(cfg)
    sol = robust_envelope(tree, Y, delta=solver["delta"])
    inst = (grid, x0, drift, controls, Y, solver, tree, sol)

    # checks are independent and individually seeded, so pool scheduling
    # cannot change any result
    reports = []
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        futures = [
            pool.submit(_run_check, name, cfg, inst, seed + 101 * i, mutate)
            for i, name in enumerate(names)
        ]
        for name, fut in zip(names, futures):
            rep = fut.result()
            log.info("check %s: %s", name, "pass" if rep.passed else "FAIL")
            reports.append((name, rep))

    if mutate:
        ok = all(not rep.passed for _, rep in reports)
    else:
        ok = all(rep.passed for _, rep in reports)
    report = {
        "command": "verify",
        "seed": seed,
        "mutate": mutate,
        "suite": names,
        "checks": {name: rep.as_dict() for name, rep in reports},
        "all_passed": all(rep.passed for _, rep in reports),
        "ok": ok,
    }
    _emit(report, out_dir)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# demo


def cmd_demo(cfg: dict, out_dir: str | None, seed: int) -> int:
    sec = _section(cfg, "demo", required=("strikes", "sigma_lo", "sigma_hi"))
    base = _num(sec, "demo", "base", 1.0)
    strikes = sec["strikes"]
    if not isinstance(strikes, list) or not strikes:
        raise ConfigError("demo.strikes must be a nonempty list")
    lo = _num(sec, "demo", "sigma_lo")
    hi = _num(sec, "demo", "sigma_hi")
    if not 0 < lo <= hi:
        raise ConfigError(f"need 0 < sigma_lo <= sigma_hi, got [{lo}, {hi}]")
    t_end = _num(sec, "demo", "t_end", 1.0)
    n_steps = _num(sec, "demo", "n_steps", 3, integer=True)
    widenings = _num(sec, "demo", "widenings", 4, integer=True)
    if n_steps < 1 or widenings < 1:
        raise ConfigError("demo.n_steps and demo.widenings must be >= 1")

    grid = TimeGrid(0.0, t_end, n_steps)
    drift = DriftSpec("zero")
    mid = (lo + hi) / 2.0

    value_rows = []
    boundary_rows = []
    widening_rows = []
    monotone = True
    classic_gap = 0.0
    for K in strikes:
        if isinstance(K, bool) or not isinstance(K, (int, float)):
            raise ConfigError(f"demo.strikes entries must be numbers, got {K!r}")
        Y = american_put(strike=float(K), base=base)
        menu = ControlSet([lo] if lo == hi else [lo, hi], cap=hi)
        tree = expand_tree(grid, 0.0, drift, menu)
        sol = robust_envelope(tree, Y)
        robust = sol.root_value()

        classics = {}
        for sig in sorted({lo, hi}):
            single = expand_tree(grid, 0.0, drift, ControlSet([sig], cap=sig))
            classics[sig] = classic_snell(single, 0, Y).root_value
        if lo == hi:
            classic_gap = max(classic_gap, abs(robust - classics[lo]))
        value_rows.append([float(K), lo, hi, robust, classics[lo], classics[hi]])

        for k in range(grid.n_steps + 1):
            stopped = [i for i in tree.nodes_at(k) if sol.stop[i]]
            level = (
                max(base + float(tree.state(i)[0]) for i in stopped)
                if stopped
                else ""
            )
            boundary_rows.append([float(K), k, grid.time(k), len(stopped), level])

        # nested menus: each widening keeps every earlier volatility, so
        # the inf runs over a superset and the value cannot increase
        menu_vols = [mid]
        prev = None
        for j in range(widenings + 1):
            frac = j / widenings
            menu_vols += [mid + (lo - mid) * frac, mid + (hi - mid) * frac]
            vols = sorted(set(menu_vols))
            vtree = expand_tree(grid, 0.0, drift, ControlSet(vols, cap=hi))
            val = robust_envelope(vtree, Y).root_value()
            if prev is not None and val > prev:
                monotone = False
            prev = val
            widening_rows.append(
                [float(K), j, mid + (lo - mid) * frac, mid + (hi - mid) * frac,
                 len(vols), val]
            )

    passed = monotone and (lo != hi or classic_gap <= 1e-12)
    report = {
        "command": "demo",
        "seed": seed,
        "sigma_lo": lo,
        "sigma_hi": hi,
        "base": base,
        "n_steps": n_steps,
        "values": [
            {
                "strike": r[0],
                "robust_value": r[3],
                "classic_value_lo": r[4],
                "classic_value_hi": r[5],
            }
            for r in value_rows
        ],
        "widening_monotone": monotone,
        "classic_gap": classic_gap if lo == hi else None,
        "passed": passed,
    }
    csvs = {
        "values.csv": (
            ["strike", "sigma_lo", "sigma_hi", "robust_value",
             "classic_value_lo", "classic_value_hi"],
            value_rows,
        ),
        "boundary.csv": (
            ["strike", "k", "time", "n_stopped", "max_level_stopped"],
            boundary_rows,
        ),
        "widening.csv": (
            ["strike", "step", "sigma_lo", "sigma_hi", "menu_size", "value"],
            widening_rows,
        ),
    }
    _emit(report, out_dir, csvs)
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robuststop",
        description="worst-case optimal stopping on scenario trees",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "backward envelope sweep with slice summaries"),
        ("oracle", "exhaustive game enumeration against the sweep"),
        ("verify", "run structural checks from a config"),
        ("demo", "American put under a volatility interval"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None, help="directory for report and CSVs")
        p.add_argument("--seed", type=int, default=2026, help="base seed (u64)")
        p.add_argument(
            "--threads",
            type=int,
            default=os.cpu_count() or 1,
            help="worker threads (results never depend on this)",
        )
        if name == "verify":
            p.add_argument(
                "--suite",
                default="all",
                help=f"comma-separated checks: {', '.join(_SUITES)} or 'all'",
            )
            p.add_argument(
                "--mutate",
                action="store_true",
                help="run each check on a broken input and demand rejection",
            )
    return parser


def _setup_logging() -> None:
    raw = os.environ.get("ROBUSTSTOP_LOG", "warn")
    if raw not in _LOG_LEVELS:
        raise ConfigError(
            f"ROBUSTSTOP_LOG must be one of {sorted(_LOG_LEVELS)}, got {raw!r}"
        )
    logging.basicConfig(level=_LOG_LEVELS[raw], format="%(name)s %(levelname)s %(message)s")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        _setup_logging()
        if args.seed < 0 or args.seed >= 2**64:
            raise ConfigError(f"--seed must be a u64, got {args.seed}")
        cfg = load_config(args.config)
        if args.command == "solve":
            return cmd_solve(cfg, args.out, args.seed)
        if args.command == "oracle":
            return cmd_oracle(cfg, args.out, args.seed)
        if args.command == "verify":
            return cmd_verify(
                cfg, args.suite, args.out, args.seed, args.threads, args.mutate
            )
        return cmd_demo(cfg, args.out, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # SizeError and the other model rejections land here
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
