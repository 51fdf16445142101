import itertools

import numpy as np
import pytest
import scipy.spatial
from hypothesis import given, settings
from hypothesis import strategies as st

from ddtruss.dataset import MaterialDataset, compute_c, generate_synthetic
from ddtruss.errors import NoFreeMember
from ddtruss.heuristic import solve_heuristic
from ddtruss.miqp import (BnBNode, PartialAssignment, Relaxation, branch, convex_hull_indices,
                          free_bound, lower_bound, project_simplex_rows, select_branching,
                          solve_exact)
from ddtruss.oracle import batch_objectives, brute_force
from ddtruss.state import linear_elastic_state, solve_fixed_assignment
from ddtruss.truss import build_model, builtin_ten_bar, load_vector

from instances import random_instance

ONE_BAR = build_model([(0, 0), (1, 0)], [(0, 1, 1.0)], [(0, 0), (0, 1), (1, 1)])
THREE_POINTS = MaterialDataset.from_points([(0, 0), (0.001, 2), (0.002, 4)])


def best_completion(model, data, c, p, fixed):
    """Brute-force minimum over all completions of a partial assignment."""
    free = np.flatnonzero(fixed < 0)
    combos = np.array(list(itertools.product(range(data.d), repeat=free.size)), dtype=int)
    full = np.tile(fixed, (len(combos), 1))
    if free.size:
        full[:, free] = combos
    return float(batch_objectives(model, data, c, p, full).min())


def random_partial(rng, m, d):
    fixed = np.where(rng.random(m) < 0.5, rng.integers(0, d, size=m), -1)
    return PartialAssignment(fixed)


# -- helpers --------------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 40))
def test_convex_hull_matches_qhull(seed, k):
    pts = np.random.default_rng(seed).normal(size=(k, 2))
    got = set(convex_hull_indices(pts).tolist())
    if k >= 3:
        want = set(scipy.spatial.ConvexHull(pts).vertices.tolist())
        assert got == want
    else:
        assert got == set(range(k))


def test_convex_hull_degenerate():
    pts = np.array([[0, 0], [1, 1], [2, 2], [1, 1]], dtype=float)
    assert sorted(convex_hull_indices(pts).tolist()) == [0, 2]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_simplex_projection(seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(4, 7)) * 3
    x = project_simplex_rows(v)
    np.testing.assert_allclose(x.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(x >= 0)
    # optimality: v - x is constant on the support and no larger off it
    for row_v, row_x in zip(v, x):
        diff = row_v - row_x
        supp = row_x > 1e-12
        np.testing.assert_allclose(diff[supp], diff[supp][0], atol=1e-12)
        assert np.all(row_v[~supp] <= diff[supp][0] + 1e-12)


# -- bounds ---------------------------------------------------------------------

@pytest.mark.parametrize("method", ["free", "hull"])
def test_root_bound_is_zero_for_single_bar(method):
    root = PartialAssignment.root(1)
    assert lower_bound(root, ONE_BAR, THREE_POINTS, 1.0, [3.0], method=method) == pytest.approx(0.0, abs=1e-12)


def test_free_bound_root_is_zero():
    model = builtin_ten_bar()
    data = generate_synthetic(d=20, seed=0)
    c = compute_c(data).c
    root = PartialAssignment.root(model.m)
    assert lower_bound(root, model, data, c, load_vector(model, 8.0), method="free") == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("method", ["free", "hull"])
@pytest.mark.parametrize("seed", range(8))
def test_leaf_bound_equals_fixed_objective(method, seed):
    model, data, c, p = random_instance(seed)
    a = np.random.default_rng(seed).integers(0, data.d, size=model.m)
    lb = lower_bound(PartialAssignment(a), model, data, c, p, method=method)
    assert lb == pytest.approx(solve_fixed_assignment(model, data, c, a, p).objective, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("method", ["free", "hull"])
def test_leaf_bound_ten_bar(method):
    model = builtin_ten_bar()
    data = generate_synthetic(d=30, seed=2)
    c = compute_c(data).c
    p = load_vector(model, 6.0)
    a = np.random.default_rng(0).integers(0, 30, size=10)
    lb = lower_bound(PartialAssignment(a), model, data, c, p, method=method)
    assert lb == pytest.approx(solve_fixed_assignment(model, data, c, a, p).objective, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_bounds_are_valid_and_ordered(seed):
    model, data, c, p = random_instance(seed)
    rng = np.random.default_rng(seed)
    partial = random_partial(rng, model.m, data.d)
    truth = best_completion(model, data, c, p, partial.fixed)
    lb_free = lower_bound(partial, model, data, c, p, method="free")
    lb_hull = lower_bound(partial, model, data, c, p, method="hull")
    tol = 1e-9 * max(1.0, truth)
    assert lb_free <= truth + tol
    assert lb_hull <= truth + tol
    assert lb_free <= lb_hull + tol


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_child_bound_not_below_parent(seed):
    model, data, c, p = random_instance(seed)
    rng = np.random.default_rng(seed)
    parent = random_partial(rng, model.m, data.d)
    free = parent.free
    if free.size == 0:
        return
    i = int(rng.choice(free))
    for method in ("free", "hull"):
        lb_parent = lower_bound(parent, model, data, c, p, method=method)
        for j in range(data.d):
            child = parent.with_fixed(i, j)
            lb_child = lower_bound(child, model, data, c, p, method=method)
            assert lb_child >= lb_parent - 1e-9 * max(1.0, lb_parent)


def test_hull_bound_with_restricted_allowed_sets():
    model, data, c, p = random_instance(11, d_range=(5, 5))
    fixed = np.full(model.m, -1)
    allowed = tuple([0, 2] if i % 2 == 0 else None for i in range(model.m))
    partial = PartialAssignment(fixed, allowed)
    relax = Relaxation(model, data, c, p)
    lb, *_ = relax.hull_bound(partial, max_iter=5000)
    choices = [partial.allowed_for(i, data.d) for i in range(model.m)]
    full = np.array(list(itertools.product(*choices)))
    assert lb <= batch_objectives(model, data, c, p, full).min() + 1e-9
    assert lb >= lower_bound(PartialAssignment(fixed), model, data, c, p, method="hull") - 1e-9


def test_free_bound_returns_equilibrated_stress():
    model = builtin_ten_bar()
    data = generate_synthetic(d=20, seed=0)
    c = compute_c(data).c
    p = load_vector(model, 8.0)
    partial = PartialAssignment(np.array([3, -1, 5, -1, -1, 7, -1, 2, -1, 0]))
    lb, u, sig = free_bound(partial, model, data, c, p)
    assert np.linalg.norm(model.B.T @ (model.volumes * sig) - p) <= 1e-8 * np.linalg.norm(p)
    assert lb >= 0


# -- branching ------------------------------------------------------------------

def test_branch_one_free_member():
    node = BnBNode(PartialAssignment.root(1), 0.0, 0)
    children = branch(node, (np.array([0.0]), np.array([3.0])), ONE_BAR, THREE_POINTS, 1.0)
    assert len(children) == 3
    assert sorted(ch.partial.fixed[0] for ch in children) == [0, 1, 2]
    # nearest first: (0.001, 2) is closest to (0, 3), then (0.002, 4), then (0, 0)
    assert [int(ch.partial.fixed[0]) for ch in children] == [1, 2, 0]
    assert all(ch.depth == 1 for ch in children)


def test_branch_partitions_completions():
    model, data, c, p = random_instance(5, d_range=(3, 3))
    rng = np.random.default_rng(0)
    partial = random_partial(rng, model.m, data.d)
    if partial.free.size == 0:
        partial = PartialAssignment.root(model.m)
    node = BnBNode(partial, 0.0, 0)
    state = (rng.normal(size=model.m), rng.normal(size=model.m))
    children = branch(node, state, model, data, c)

    def completions(pa):
        choices = [pa.allowed_for(i, data.d) for i in range(model.m)]
        return {tuple(x) for x in itertools.product(*choices)}

    parent_set = completions(partial)
    child_sets = [completions(ch.partial) for ch in children]
    assert set().union(*child_sets) == parent_set
    assert sum(len(s) for s in child_sets) == len(parent_set)


def test_branch_picks_most_ambiguous_member():
    model = build_model([(0, 0), (1, 0), (0, 1)], [(0, 1, 1.0), (0, 2, 1.0)],
                        [(1, 0), (1, 1), (2, 0), (2, 1)])
    data = MaterialDataset.from_points([(0, 0), (1, 0), (10, 0)])
    # member 0 sits at 0.5: equidistant from points 0 and 1 (ratio 1)
    # member 1 sits at 0.1: clearly nearest point 0 (ratio 81)
    member, order, nearest = select_branching(PartialAssignment.root(2),
                                              (np.array([0.5, 0.1]), np.zeros(2)), model, data, 1.0)
    assert member == 0
    assert order.tolist() == [0, 1, 2]
    assert nearest == {0: 0, 1: 0}


def test_branch_without_free_member():
    node = BnBNode(PartialAssignment(np.array([0])), 0.0, 1)
    with pytest.raises(NoFreeMember):
        branch(node, (np.zeros(1), np.zeros(1)), ONE_BAR, THREE_POINTS, 1.0)


# -- search ---------------------------------------------------------------------

@pytest.mark.parametrize("bound", ["hull", "free"])
def test_single_bar_optimum(bound):
    rep = solve_exact(ONE_BAR, THREE_POINTS, 1.0, [3.0], bound=bound)
    assert rep.objective == 0.5
    assert rep.assignment.tolist() == [1]
    assert rep.status == "Optimal"
    assert rep.gap == 0.0


def test_linear_fem_data_gives_zero():
    model = builtin_ten_bar()
    c = 1.6e9
    p = load_vector(model, 5.0)
    u, eps, sig = linear_elastic_state(model, c, p)
    rep = solve_exact(model, MaterialDataset(eps, sig), c, p)
    assert rep.objective <= 1e-9
    np.testing.assert_allclose(rep.state.u, u, rtol=1e-8)


@pytest.mark.parametrize("seed", range(25))
def test_matches_oracle(seed):
    model, data, c, p = random_instance(seed)
    ref = brute_force(model, data, c, p)
    for bound in ("hull", "free"):
        rep = solve_exact(model, data, c, p, bound=bound)
        assert rep.status == "Optimal"
        assert rep.objective == pytest.approx(ref.objective, rel=1e-9, abs=1e-15)


@pytest.mark.parametrize("seed", range(10))
def test_prune_safety(seed):
    model, data, c, p = random_instance(seed)
    pruned = solve_exact(model, data, c, p)
    full = solve_exact(model, data, c, p, prune=False)
    assert full.objective == pytest.approx(pruned.objective, rel=1e-12, abs=1e-15)
    assert full.nodes_explored >= pruned.nodes_explored


@pytest.mark.parametrize("seed", range(10))
def test_soundness_during_search(seed):
    model, data, c, p = random_instance(seed, d_range=(4, 6))
    opt = brute_force(model, data, c, p).objective
    seen = []
    solve_exact(model, data, c, p, callback=lambda inc, pool: seen.append((inc, pool)))
    for inc, pool in seen:
        assert min(inc, pool) <= opt + 1e-9
        assert opt <= inc + 1e-12


def test_deterministic():
    model = builtin_ten_bar()
    data = generate_synthetic(d=12, seed=4)
    c = compute_c(data).c
    p = load_vector(model, 9.0)
    a = solve_exact(model, data, c, p)
    b = solve_exact(model, data, c, p)
    assert a.nodes_explored == b.nodes_explored
    assert a.objective == b.objective
    np.testing.assert_array_equal(a.assignment, b.assignment)


def test_heuristic_dominance_ten_bar():
    model = builtin_ten_bar()
    data = generate_synthetic(d=15, seed=9)
    c = compute_c(data).c
    for lam in (0.0, 6.0, 11.0):
        p = load_vector(model, lam)
        assert solve_heuristic(model, data, c, p).objective >= solve_exact(model, data, c, p).objective - 1e-9


@pytest.fixture(scope="module")
def hard_case():
    model = builtin_ten_bar()
    data = generate_synthetic(d=30, seed=1)
    return model, data, compute_c(data).c, load_vector(model, 10.0)


def test_node_limit(hard_case):
    model, data, c, p = hard_case
    rep = solve_exact(model, data, c, p, node_limit=5)
    assert rep.status == "NodeLimit"
    assert rep.nodes_explored == 5
    assert rep.gap > 0
    assert rep.best_bound <= rep.objective
    st_ = solve_fixed_assignment(model, data, c, rep.assignment, p)
    assert st_.objective == rep.objective


def test_time_limit(hard_case):
    model, data, c, p = hard_case
    rep = solve_exact(model, data, c, p, time_limit=0.0)
    assert rep.status == "TimeLimit"
    assert rep.gap > 0


def test_gap_tolerance(hard_case):
    model, data, c, p = hard_case
    rep = solve_exact(model, data, c, p, gap_tol=0.5)
    assert rep.status in ("GapReached", "Optimal")
    assert rep.gap <= 0.5
    assert rep.objective - rep.best_bound <= 0.5 * max(1.0, rep.objective) + 1e-12


def test_recorded_tree_is_consistent():
    model, data, c, p = random_instance(7, d_range=(4, 4))
    rep = solve_exact(model, data, c, p, record_tree=True)
    ids = {rec[0] for rec in rep.tree}
    assert 0 in ids
    assert len(rep.tree) >= rep.nodes_explored
