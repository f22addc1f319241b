import numpy as np
import pytest

from cutgap.unique_games import (
    BudgetExceededError,
    UGEdge,
    UGInstance,
    label_extended_graph,
    labeling_set_expansion_identity,
    opt_exhaustive,
    opt_search,
    plant_instance,
    ug_from_text,
    ug_to_text,
    value,
)


def single_edge_instance(n_labels=2, perm=None):
    perm = np.arange(n_labels) if perm is None else np.asarray(perm)
    return UGInstance(2, n_labels, [UGEdge(0, 1, perm, 1.0)])


def test_value_identity_edge():
    u = single_edge_instance()
    assert value(u, [1, 1]) == 1.0
    assert value(u, [0, 1]) == 0.0


def test_value_respects_direction():
    # lam[v] = perm[lam[w]] with perm = (1 0): satisfied by lam = (1, 0).
    u = single_edge_instance(perm=[1, 0])
    assert value(u, [1, 0]) == 1.0
    assert value(u, [0, 0]) == 0.0


def test_weights_must_sum_to_one():
    with pytest.raises(ValueError):
        UGInstance(2, 2, [UGEdge(0, 1, np.arange(2), 0.5)])


def test_degree_regularity_enforced():
    edges = [
        UGEdge(0, 1, np.arange(2), 0.7),
        UGEdge(1, 2, np.arange(2), 0.2),
        UGEdge(0, 2, np.arange(2), 0.1),
    ]
    with pytest.raises(ValueError):
        UGInstance(3, 2, edges)


def test_perm_must_be_bijection():
    with pytest.raises(ValueError):
        UGInstance(2, 2, [UGEdge(0, 1, np.array([0, 0]), 1.0)])


def test_opt_exhaustive_tiny():
    u = single_edge_instance()
    lam, val = opt_exhaustive(u)
    assert val == 1.0
    assert lam[0] == u.edges[0].perm[lam[1]]


def test_opt_exhaustive_budget_refusal():
    u = single_edge_instance(n_labels=4)
    with pytest.raises(BudgetExceededError) as exc:
        opt_exhaustive(u, budget=15)
    assert exc.value.count == 16


def test_opt_bounds_random_labeling():
    u, hidden = plant_instance(8, 3, 0.2, 0.8, seed=0)
    rng = np.random.default_rng(1)
    _, opt = opt_exhaustive(u, budget=10**5)
    for _ in range(20):
        lam = rng.integers(0, 3, size=8)
        assert value(u, lam) <= opt + 1e-12


def test_planted_value_exact():
    for eta in (0.0, 0.1, 0.3):
        u, hidden = plant_instance(10, 4, eta, 0.7, seed=3)
        n_edges = len(u.edges)
        expected = 1.0 - np.floor(eta * n_edges) / n_edges
        assert abs(value(u, hidden) - expected) < 1e-12
        assert value(u, hidden) >= 1 - eta - 1e-12


def test_planted_single_label_degenerate():
    u, hidden = plant_instance(6, 1, 0.5, 1.0, seed=5)
    assert abs(value(u, np.zeros(6, dtype=int)) - 1.0) < 1e-12


def test_search_is_lower_bound_and_deterministic():
    u, _ = plant_instance(7, 3, 0.15, 0.9, seed=11)
    _, opt = opt_exhaustive(u, budget=10**5)
    lam_a, val_a = opt_search(u, seed=2, restarts=5)
    lam_b, val_b = opt_search(u, seed=2, restarts=5)
    assert val_a <= opt + 1e-12
    assert val_a == val_b and np.array_equal(lam_a, lam_b)


def test_search_recovers_planted_near_optimum():
    u, hidden = plant_instance(12, 4, 0.05, 0.9, seed=13)
    _, val = opt_search(u, seed=3, restarts=20)
    assert val >= value(u, hidden) - 0.05


def test_search_monotone_in_restarts():
    u, _ = plant_instance(9, 4, 0.3, 0.8, seed=17)
    vals = [opt_search(u, seed=5, restarts=r)[1] for r in (1, 3, 6, 10)]
    assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))


def test_label_extended_graph_single_edge():
    u = single_edge_instance()
    lext = label_extended_graph(u)
    assert len(lext) == 2
    assert all(abs(wt - 1.0) < 1e-15 for wt in lext.values())
    assert sum(lext.values()) == 2.0  # total weight N


def test_label_extended_total_weight_and_regularity():
    u, _ = plant_instance(6, 4, 0.2, 0.8, seed=19)
    lext = label_extended_graph(u)
    assert abs(sum(lext.values()) - 4.0) < 1e-9
    degree = {}
    for (a, b), wt in lext.items():
        degree[a] = degree.get(a, 0.0) + wt
        degree[b] = degree.get(b, 0.0) + wt
    degs = np.array(list(degree.values()))
    assert degs.max() - degs.min() < 1e-9


def test_expansion_identity_planted_perfect():
    u, hidden = plant_instance(8, 3, 0.0, 0.8, seed=23)
    val, ome = labeling_set_expansion_identity(u, hidden)
    assert abs(val - 1.0) < 1e-12 and abs(ome - 1.0) < 1e-12


def test_expansion_identity_fully_unsatisfied():
    u = single_edge_instance(perm=[1, 0])
    val, ome = labeling_set_expansion_identity(u, [0, 0])
    assert val == 0.0 and ome == 0.0


def test_expansion_identity_random_labelings():
    u, _ = plant_instance(9, 4, 0.25, 0.9, seed=29)
    rng = np.random.default_rng(31)
    for _ in range(50):
        lam = rng.integers(0, 4, size=9)
        val, ome = labeling_set_expansion_identity(u, lam)
        assert abs(val - ome) < 1e-9


def test_value_invariant_under_global_relabeling():
    u, _ = plant_instance(8, 4, 0.2, 0.8, seed=37)
    rng = np.random.default_rng(41)
    sigma = rng.permutation(4)
    inv = np.argsort(sigma)
    relabeled = UGInstance(
        u.num_vertices,
        u.num_labels,
        [
            UGEdge(e.v, e.w, sigma[e.perm[inv]], e.weight)
            for e in u.edges
        ],
        regularity_tol=1e-6,
    )
    for _ in range(20):
        lam = rng.integers(0, 4, size=8)
        assert abs(value(u, lam) - value(relabeled, sigma[lam])) < 1e-12


def test_serialization_round_trip():
    u, _ = plant_instance(7, 3, 0.2, 0.9, seed=43)
    text = ug_to_text(u)
    back = ug_from_text(text, regularity_tol=1e-6)
    assert back.num_vertices == u.num_vertices
    assert back.num_labels == u.num_labels
    assert len(back.edges) == len(u.edges)
    for e1, e2 in zip(u.edges, back.edges):
        assert (e1.v, e1.w) == (e2.v, e2.w)
        assert e1.weight == e2.weight  # 17 significant digits are lossless
        assert np.array_equal(e1.perm, e2.perm)


def test_from_text_rejects_garbage():
    with pytest.raises(ValueError):
        ug_from_text("XX 2 2 1\n0 1 1.0 0 1\n")
