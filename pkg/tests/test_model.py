"""Controlled dynamics: drift evaluation, control menus, two-point step
kernels, scenario-tree expansion, and the path simulator."""

import numpy as np
import pytest

from robuststop import (
    ControlSet,
    DriftSpec,
    SizeError,
    TimeGrid,
    drift_eval,
    expand_tree,
    prefix_key,
    simulate_paths,
    step_kernel,
)


def test_drift_kinds_hand_values():
    p = np.array([[0.4], [0.9]])
    u = np.array([[1.0]])
    assert drift_eval(DriftSpec("zero"), 1, p, u).tolist() == [0.0]
    mr = DriftSpec("mean-reversion", kappa=1.0, rate=0.8, level=0.2)
    assert drift_eval(mr, 1, p, u) == pytest.approx([0.8 * (0.2 - 0.9)], abs=1e-15)
    rm = DriftSpec("running-max", kappa=1.0)
    assert drift_eval(rm, 1, p, u) == pytest.approx([-0.9], abs=1e-15)
    tab = DriftSpec("custom-table", table=[[0.3], [0.7]])
    assert drift_eval(tab, 0, p[:1], u).tolist() == [0.3]
    assert drift_eval(tab, 1, p, u).tolist() == [0.7]


def test_drift_validation():
    with pytest.raises(ValueError):
        DriftSpec("brownian-bridge")
    with pytest.raises(ValueError):
        DriftSpec("custom-table")
    with pytest.raises(ValueError):
        DriftSpec("zero", kappa=-1.0)


def test_control_set_scalars_sorted_and_deduped():
    cs = ControlSet([1.0, 0.5, 0.5], cap=1.0)
    assert cs.scalars() == [0.5, 1.0]
    assert cs.dim == 1
    assert len(cs.controls) == 2


def test_control_set_validation():
    with pytest.raises(ValueError):
        ControlSet([0.5, -0.2], cap=1.0)
    with pytest.raises(ValueError):
        ControlSet([0.0], cap=1.0)
    with pytest.raises(ValueError):
        ControlSet([0.5, 2.0], cap=1.0)
    with pytest.raises(ValueError):
        ControlSet([], cap=1.0)


def test_control_set_matrix_controls():
    m = np.array([[1.0, 0.2], [0.2, 0.5]])
    cs = ControlSet([m], cap=2.0)
    assert cs.dim == 2
    with pytest.raises(ValueError):
        ControlSet([np.array([[1.0, 0.8], [-0.8, 1.0]])], cap=2.0)


def test_step_kernel_moments():
    u = np.array([[0.7]])
    dt = 0.25
    spec = DriftSpec("mean-reversion", kappa=1.0, rate=0.6, level=0.0)
    p = np.array([[0.5]])
    kern = step_kernel(spec, 0, p, u, dt)
    assert kern.weights.tolist() == [0.5, 0.5]
    b = 0.6 * (0.0 - 0.5)
    assert np.allclose(kern.mean(), [b * dt], atol=1e-15)
    assert np.allclose(kern.covariance(), [[0.49 * dt]], atol=1e-12)


def test_step_kernel_matrix_covariance():
    u = np.array([[1.0, 0.3], [0.3, 0.8]])
    kern = step_kernel(DriftSpec("zero"), 0, np.zeros((1, 2)), u, 0.5, branching=4)
    assert np.allclose(kern.covariance(), u @ u.T * 0.5, atol=1e-12)
    with pytest.raises(ValueError):
        step_kernel(DriftSpec("zero"), 0, np.zeros((1, 2)), u, 0.5, branching=2)


def test_prefix_key_distinguishes_paths():
    a = prefix_key(1, np.array([[0.0], [1.0]]))
    b = prefix_key(1, np.array([[0.0], [1.0]]))
    c = prefix_key(1, np.array([[0.0], [1.5]]))
    assert a == b
    assert a != c
    assert a != prefix_key(0, np.array([[0.0]]))


def test_inst_a_tree_shape(inst_a):
    tree, _ = inst_a
    assert tree.n_nodes == 5
    assert tree.root == 0
    assert not tree.is_leaf(0)
    assert sorted(tree.nodes_at(0)) == [0]
    assert sorted(tree.nodes_at(1)) == [1, 2, 3, 4]
    assert sorted(tree.leaves()) == [1, 2, 3, 4]
    assert list(tree.interior()) == [0]
    # two controls, two outcomes each, half weight per edge
    states = sorted(float(tree.state(i)[0]) for i in tree.leaves())
    assert states == [-1.0, -0.5, 0.5, 1.0]
    for kids, w in zip(tree.children[0], tree.edge_weights[0]):
        assert len(kids) == 2
        assert np.all(np.asarray(w) == 0.5)


def test_tree_node_counts_scale_with_depth():
    controls = ControlSet([0.5, 1.0], cap=1.0)
    t2 = expand_tree(TimeGrid(0.0, 1.0, 2), 1.0, DriftSpec("zero"), controls)
    t3 = expand_tree(TimeGrid(0.0, 1.0, 3), 1.0, DriftSpec("zero"), controls)
    assert t2.n_nodes == 1 + 4 + 16
    assert t3.n_nodes == 1 + 4 + 16 + 64


def test_tree_prefix_consistency(put_n2):
    tree, _ = put_n2
    for i in range(tree.n_nodes):
        pref = tree.prefixes[i]
        assert pref.shape[0] == tree.k[i] + 1
        assert np.array_equal(tree.state(i), pref[-1])
        parent = tree.parent[i]
        if parent >= 0:
            assert np.array_equal(tree.prefixes[parent], pref[:-1])
        key = tree.node_key(i)
        assert key[0] == tree.k[i]


def test_tree_drift_moves_children():
    drift = DriftSpec("custom-table", table=[[0.5]])
    tree = expand_tree(TimeGrid(0.0, 1.0, 1), 0.0, drift, ControlSet([1.0], cap=1.0))
    kids = sorted(float(tree.state(i)[0]) for i in tree.leaves())
    assert kids == pytest.approx([0.5 - 1.0, 0.5 + 1.0], abs=1e-15)


def test_tree_resume_from_pinned_prefix():
    g = TimeGrid(0.0, 1.0, 3)
    cs = ControlSet([0.5, 1.0], cap=1.0)
    tree = expand_tree(g, 0.0, DriftSpec("zero"), cs, init_prefix=[0.0, 0.4])
    assert tree.k[0] == 1
    assert tree.prefixes[0].ravel().tolist() == [0.0, 0.4]
    assert tree.n_nodes == 1 + 4 + 16
    for leaf in tree.leaves():
        assert tree.k[leaf] == 3
        assert tree.prefixes[leaf][1, 0] == 0.4
    with pytest.raises(ValueError):
        expand_tree(g, 0.0, DriftSpec("zero"), cs, init_prefix=np.zeros((5, 1)))


def test_tree_node_cap_is_enforced():
    g = TimeGrid(0.0, 1.0, 12)
    cs = ControlSet([0.5, 1.0], cap=1.0)
    with pytest.raises(SizeError) as exc:
        expand_tree(g, 0.0, DriftSpec("zero"), cs, node_cap=1000)
    assert "1000" in str(exc.value)


def test_subtree_nodes_partition(put_n2):
    tree, _ = put_n2
    below = tree.subtree_nodes(1)
    assert 1 in below
    assert all(tree.k[j] >= tree.k[1] for j in below)
    # root subtree is everything
    assert sorted(tree.subtree_nodes(0)) == list(range(tree.n_nodes))


def test_simulate_paths_deterministic():
    g = TimeGrid(0.0, 1.0, 4)
    u = np.array([[1.0]])
    a = simulate_paths(g, 0.0, DriftSpec("zero"), u, 7, seed=5)
    b = simulate_paths(g, 0.0, DriftSpec("zero"), u, 7, seed=5)
    c = simulate_paths(g, 0.0, DriftSpec("zero"), u, 7, seed=6)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert a.values.shape == (7, 5, 1)
    assert np.all(a.values[:, 0, 0] == 0.0)


def test_simulate_paths_block_boundary_stable():
    # n_paths above one RNG block must still be reproducible
    g = TimeGrid(0.0, 1.0, 2)
    u = np.array([[0.5]])
    a = simulate_paths(g, 1.0, DriftSpec("zero"), u, 5000, seed=11)
    b = simulate_paths(g, 1.0, DriftSpec("zero"), u, 5000, seed=11)
    assert np.array_equal(a.values, b.values)
    assert np.all(a.values[:, 0, 0] == 1.0)


def test_simulate_paths_sample_views():
    g = TimeGrid(0.0, 1.0, 3)
    sample = simulate_paths(g, 2.0, DriftSpec("zero"), np.array([[1.0]]), 4, seed=3)
    sup = sample.sup_distance_from_start()
    assert sup.shape == (4,)
    assert np.all(sup >= 0.0)
    first = next(iter(sample.as_paths()))
    assert first.values[0, 0] == 0.0
    assert first.grid == g
    # zero-anchored view plus the start level reproduces the raw block
    assert np.array_equal(first.values[:, 0] + 2.0, sample.values[0, :, 0])
