"""One test pair per runnable check: the claim holds on healthy input and
the check rejects a deliberately corrupted one."""

import numpy as np
import pytest

from robuststop import (
    ControlSet,
    DriftSpec,
    ModulusSpec,
    TimeGrid,
    american_put,
    constant_reward,
    custom_reward,
    expand_tree,
    robust_envelope,
)
from robuststop.verify import (
    check_continuity_in_prehistory,
    check_dpp,
    check_dpp_random_horizon,
    check_drift,
    check_envelope_basic,
    check_martingale_to_tau,
    check_sde_moments,
    check_supermartingale,
    check_tau_monotone,
    check_y1,
    corrupt_envelope,
    corrupt_tau,
    pair_sampler,
    prefix_sampler,
)


@pytest.fixture
def put_sol(put_n2):
    tree, Y = put_n2
    return tree, Y, robust_envelope(tree, Y)


def test_y1_catalog_put_passes():
    grid = TimeGrid(0.0, 1.0, 4)
    Y = american_put()
    report = check_y1(Y, pair_sampler(grid), 10_000)
    assert report.passed
    assert report.n_checked == 10_000
    assert report.worst <= report.tolerance


def test_y1_constant_passes_with_zero_margin():
    grid = TimeGrid(0.0, 1.0, 3)
    report = check_y1(constant_reward(2.0), pair_sampler(grid), 500)
    assert report.passed
    assert report.worst <= 0.0


def test_y1_rejects_time_decaying_reward():
    # the bound is one-sided: only a drop from the earlier to the later
    # value can violate it, so the negative control decays with time
    grid = TimeGrid(0.0, 1.0, 3)
    Y = custom_reward(
        lambda k, track: float(-k), ModulusSpec("linear", 0.0), lower_bound=-3.0
    )
    report = check_y1(Y, pair_sampler(grid), 500)
    assert not report.passed
    assert report.worst > 0.0
    # and a growing payoff with the same zero modulus stays acceptable
    up = custom_reward(
        lambda k, track: float(k), ModulusSpec("linear", 0.0), lower_bound=0.0
    )
    assert check_y1(up, pair_sampler(grid), 500).passed


def test_drift_zero_and_bounded_rate_pass():
    grid = TimeGrid(0.0, 1.0, 3)
    controls = ControlSet([0.5, 1.0], cap=1.0)
    sampler = prefix_sampler(grid, controls)
    assert check_drift(DriftSpec("zero"), sampler, 400).passed
    mr = DriftSpec("mean-reversion", kappa=1.0, rate=0.8, level=0.1)
    report = check_drift(mr, sampler, 400)
    assert report.passed


def test_drift_rejects_rate_above_kappa():
    grid = TimeGrid(0.0, 1.0, 3)
    controls = ControlSet([0.5, 1.0], cap=1.0)
    fast = DriftSpec("mean-reversion", kappa=1.0, rate=1.5, level=0.0)
    report = check_drift(fast, prefix_sampler(grid, controls), 400)
    assert not report.passed
    assert report.worst > 0.0


def test_envelope_basic_exact(put_sol):
    tree, _, sol = put_sol
    report = check_envelope_basic(sol)
    assert report.passed
    assert report.worst == 0.0
    assert report.tolerance == 0.0
    # every node is checked for domination and every leaf for equality
    assert report.n_checked == tree.n_nodes + len(list(tree.leaves()))


def test_envelope_basic_rejects_corrupt_leaf(put_sol):
    tree, _, sol = put_sol
    leaf = next(iter(tree.leaves()))
    bad = corrupt_envelope(sol, node=leaf)
    report = check_envelope_basic(bad)
    assert not report.passed
    # the original solution is untouched
    assert check_envelope_basic(sol).passed


def test_supermartingale_holds(inst_a, put_sol):
    tree_a, Y_a = inst_a
    sol_a = robust_envelope(tree_a, Y_a)
    assert check_supermartingale(tree_a, sol_a).passed
    tree, _, sol = put_sol
    report = check_supermartingale(tree, sol)
    assert report.passed
    assert report.worst <= report.tolerance


def test_supermartingale_rejects_sunk_node(put_sol):
    tree, _, sol = put_sol
    report = check_supermartingale(tree, corrupt_envelope(sol))
    assert not report.passed
    assert report.worst > 0.09


def test_martingale_to_tau_exact_for_constant(inst_a):
    tree, _ = inst_a
    sol = robust_envelope(tree, constant_reward(0.4))
    report = check_martingale_to_tau(tree, sol)
    assert report.passed
    assert report.worst == 0.0


def test_martingale_to_tau_on_fixtures(inst_a, put_sol):
    tree_a, Y_a = inst_a
    assert check_martingale_to_tau(tree_a, robust_envelope(tree_a, Y_a)).passed
    tree, _, sol = put_sol
    assert check_martingale_to_tau(tree, sol).passed


def test_martingale_to_tau_rejects_corruption(put_sol):
    tree, _, sol = put_sol
    assert not check_martingale_to_tau(tree, corrupt_envelope(sol)).passed


def test_dpp_terminal_slice_is_definition(put_sol):
    tree, _, sol = put_sol
    report = check_dpp(tree, sol, tree.grid.t_end)
    assert report.passed
    assert report.worst == 0.0


def test_dpp_interior_slices(put_n3):
    tree, Y = put_n3
    sol = robust_envelope(tree, Y)
    for s in (1, 2, tree.grid.time(1)):
        report = check_dpp(tree, sol, s)
        assert report.passed
        assert report.worst <= report.tolerance


def test_dpp_random_instances(rand_instance):
    rng = np.random.default_rng(31)
    for _ in range(10):
        tree, Y = rand_instance(rng)
        sol = robust_envelope(tree, Y)
        assert check_dpp(tree, sol, max(tree.grid.n_steps - 1, 1)).passed


def test_dpp_rejects_corrupt_root(put_sol):
    tree, _, sol = put_sol
    assert not check_dpp(tree, corrupt_envelope(sol, node=0), 1).passed


def test_dpp_random_horizon_variants(put_n3):
    tree, Y = put_n3
    sol = robust_envelope(tree, Y)
    terminal = check_dpp_random_horizon(tree, sol, tree.grid.n_steps)
    assert terminal.passed and terminal.worst == 0.0
    barrier = check_dpp_random_horizon(
        tree, sol, lambda k, pref: abs(float(pref[-1, 0])) >= 1.2
    )
    assert barrier.passed
    delta_time = check_dpp_random_horizon(tree, sol, sol.stop_rule_map(0.05))
    assert delta_time.passed


def test_dpp_random_horizon_rejects_corrupt_root(put_n3):
    tree, Y = put_n3
    sol = robust_envelope(tree, Y)
    bad = corrupt_envelope(sol, node=0)
    assert not check_dpp_random_horizon(tree, bad, tree.grid.n_steps).passed


def test_tau_monotone_constant_and_fixture(inst_a, put_n3):
    tree_a, _ = inst_a
    sol_c = robust_envelope(tree_a, constant_reward(0.2))
    report = check_tau_monotone(sol_c)
    assert report.passed
    tree, Y = put_n3
    report = check_tau_monotone(robust_envelope(tree, Y))
    assert report.passed
    assert report.details["final_equal"] == 1
    assert report.details["stored_equal"] == 1


def test_tau_monotone_rejects_shifted_tau(put_sol):
    _, _, sol = put_sol
    assert not check_tau_monotone(corrupt_tau(sol)).passed


def test_continuity_zero_drift_put():
    grid = TimeGrid(0.0, 1.0, 3)
    controls = ControlSet([0.5, 1.0], cap=1.0)
    Y = american_put(strike=1.0, base=0.0)
    report = check_continuity_in_prehistory(
        grid, DriftSpec("zero"), controls, Y, split=1, rho1=Y.modulus, n_pairs=8
    )
    assert report.passed
    assert report.worst <= report.tolerance
    assert report.details["bound_given"]


def test_continuity_identical_histories_are_exact():
    grid = TimeGrid(0.0, 1.0, 2)
    controls = ControlSet([1.0], cap=1.0)
    Y = american_put(strike=1.0, base=0.0)
    report = check_continuity_in_prehistory(
        grid, DriftSpec("zero"), controls, Y, split=1, rho1=Y.modulus, n_pairs=1
    )
    assert report.passed
    assert report.worst == 0.0


def test_continuity_fits_constant_for_history_driven_drift():
    grid = TimeGrid(0.0, 1.0, 3)
    controls = ControlSet([0.5, 1.0], cap=1.0)
    Y = american_put(strike=1.0, base=0.0)
    drift = DriftSpec("running-max", kappa=0.4)
    report = check_continuity_in_prehistory(
        grid, drift, controls, Y, split=1, n_pairs=6
    )
    assert report.passed
    assert report.details["kappa_fit"] > 0.0
    assert report.details["n_zero_gap_pairs"] == 1


def test_continuity_rejects_zero_modulus():
    grid = TimeGrid(0.0, 1.0, 3)
    controls = ControlSet([0.5, 1.0], cap=1.0)
    Y = american_put(strike=1.0, base=0.0)
    report = check_continuity_in_prehistory(
        grid,
        DriftSpec("zero"),
        controls,
        Y,
        split=1,
        rho1=ModulusSpec("linear", 0.0),
        n_pairs=8,
    )
    assert not report.passed


def test_sde_moments_scaling():
    report = check_sde_moments(n_paths=30_000)
    assert report.passed
    assert 0.4 <= report.details["slope_p1"] <= 0.6
    assert 0.8 <= report.details["slope_p2"] <= 1.2
    assert report.details["doob_excess"] <= 0.0


def test_sde_moments_degenerate_control():
    report = check_sde_moments(u=0.0, n_paths=2_000)
    assert report.passed


def test_sde_moments_drift_transfer():
    table = DriftSpec("custom-table", table=[[1.0]] * 16)
    honest = check_sde_moments(n_paths=10_000, drift=table, drift_bound=1.0)
    assert honest.passed
    lying = check_sde_moments(n_paths=10_000, drift=table, drift_bound=1e-6)
    assert not lying.passed


def test_corrupt_helpers_leave_original_alone(put_sol):
    _, _, sol = put_sol
    z_before = sol.z.copy()
    tau_before = dict(sol.tau)
    bad_z = corrupt_envelope(sol)
    bad_tau = corrupt_tau(sol)
    assert np.array_equal(sol.z, z_before)
    assert sol.tau == tau_before
    assert not np.array_equal(bad_z.z, z_before)
    assert bad_tau.tau != tau_before
