import numpy as np
import pytest

from cutgap.quotient import build_kv_instance
from cutgap.unique_games import opt_exhaustive, plant_instance, value
from cutgap.verifier import (
    Proof,
    acceptance_probability_exact,
    acceptance_probability_mc,
    decode_labeling,
    long_code_proof,
    piecewise_balance_stat,
    proof_from_text,
    proof_to_text,
)


def test_long_code_tables_are_dictators():
    proof = long_code_proof([0, 2, 3], 4)
    x = np.arange(16)
    for row, j in zip(proof.tables, (0, 2, 3)):
        assert np.array_equal(row, 1 - 2 * ((x >> j) & 1))
    assert piecewise_balance_stat(proof) == 0.0


def test_constant_proof_always_accepts():
    u, _ = plant_instance(6, 4, 0.3, 0.8, seed=0)
    proof = Proof(4, np.ones((6, 16), dtype=np.int8))
    assert abs(acceptance_probability_exact(u, proof, 0.25) - 1.0) < 1e-12


def test_completeness_exact_formula_on_planted():
    # acceptance of the Long Code proof of a hidden labeling:
    # val (1-eps) + (1-val)/2 >= (1-eta)(1-eps)
    for eta, eps in ((0.0, 0.2), (0.1, 0.15), (0.2, 0.3)):
        u, hidden = plant_instance(8, 4, eta, 0.7, seed=3)
        proof = long_code_proof(hidden, 4)
        val = value(u, hidden)
        got = acceptance_probability_exact(u, proof, eps)
        expected = val * (1 - eps) + (1 - val) * 0.5
        assert abs(got - expected) < 1e-12
        assert got >= (1 - eta) * (1 - eps) - 1e-9


def test_perfect_labeling_identity_instance_acceptance():
    u, hidden = plant_instance(8, 4, 0.0, 0.7, seed=5)
    proof = long_code_proof(hidden, 4)
    for eps in (0.1, 0.3):
        got = acceptance_probability_exact(u, proof, eps)
        assert abs(got - (1 - eps)) < 1e-12


def test_dictator_proof_eps_zero_accepts_whenever_satisfied():
    u, hidden = plant_instance(8, 3, 0.25, 0.8, seed=7)
    proof = long_code_proof(hidden, 3)
    got = acceptance_probability_exact(u, proof, 0.0)
    val = value(u, hidden)
    assert abs(got - (val + (1 - val) * 0.5)) < 1e-12
    est, se = acceptance_probability_mc(u, proof, 20000, seed=1, epsilon=0.0)
    assert abs(est - got) < 4 * se + 1e-9


def test_dictator_proof_eps_zero_perfect_instance_is_exact_one():
    u, hidden = plant_instance(8, 3, 0.0, 0.8, seed=7)
    proof = long_code_proof(hidden, 3)
    est, _ = acceptance_probability_mc(u, proof, 5000, seed=3, epsilon=0.0)
    assert est == 1.0


def test_exact_vs_mc_on_fixture_corpus():
    u, hidden = plant_instance(6, 4, 0.15, 0.9, seed=9)
    rng = np.random.default_rng(11)
    fixtures = {
        "longcode": long_code_proof(hidden, 4).tables,
        "constant": np.ones((6, 16), dtype=np.int8),
        "anti": -long_code_proof(hidden, 4).tables,
        "random": rng.choice([-1, 1], size=(6, 16)).astype(np.int8),
        "majority_style": np.where(
            np.bitwise_count(np.arange(16, dtype=np.uint32))[None, :] <= 2, 1, -1
        ).repeat(6, axis=0).astype(np.int8),
    }
    for name, tables in fixtures.items():
        proof = Proof(4, tables)
        exact = acceptance_probability_exact(u, proof, 0.2)
        est, se = acceptance_probability_mc(u, proof, 40000, seed=13, epsilon=0.2)
        assert abs(est - exact) < 4 * se + 1e-9, name


def test_acceptance_on_kv_instance_with_self_loops():
    u, q, _ = build_kv_instance(2, 0.3)
    lam, opt = opt_exhaustive(u)
    proof = long_code_proof(lam, 4)
    got = acceptance_probability_exact(u, proof, 0.3)
    expected = opt * 0.7 + (1 - opt) * 0.5
    assert abs(got - expected) < 1e-12


def test_soundness_direction_on_gap_instance():
    # on the gap instance every balanced fixture proof leaves an
    # eps-dependent acceptance margin, and decoding never beats the optimum
    u, q, _ = build_kv_instance(2, 0.3)
    lam, opt = opt_exhaustive(u)
    rng = np.random.default_rng(33)
    fixtures = [
        long_code_proof(lam, 4).tables,
        rng.choice([-1, 1], size=(4, 16)).astype(np.int8),
        np.where(
            np.bitwise_count(np.arange(16, dtype=np.uint32))[None, :] <= 2, 1, -1
        ).repeat(4, axis=0).astype(np.int8),
    ]
    eps = 0.3
    worst_acceptance = 0.0
    for tables in fixtures:
        proof = Proof(4, tables)
        if piecewise_balance_stat(proof) > 5 / 6:
            continue
        worst_acceptance = max(
            worst_acceptance, acceptance_probability_exact(u, proof, eps)
        )
        decoded = decode_labeling(u, proof, seed=7, rounds=10)
        assert decoded.value <= opt + 1e-12
    margin = 1.0 - worst_acceptance
    assert margin > 0.0


def test_decoder_recovers_perfect_long_code():
    u, hidden = plant_instance(8, 4, 0.0, 0.8, seed=15)
    proof = long_code_proof(hidden, 4)
    for seed in range(5):
        res = decode_labeling(u, proof, seed=seed, rounds=1)
        assert np.array_equal(res.labeling, hidden)
        assert res.fallback_vertices == ()


def test_decoder_on_random_proof_is_near_baseline():
    u, _ = plant_instance(8, 4, 0.1, 0.8, seed=17)
    rng = np.random.default_rng(19)
    proof = Proof(4, rng.choice([-1, 1], size=(8, 16)).astype(np.int8))
    res = decode_labeling(u, proof, seed=21, rounds=20)
    _, opt = opt_exhaustive(u, budget=10**6)
    assert res.value <= opt + 1e-12
    # with 20 best-of rounds the decoded value clears the uniform baseline
    assert res.value >= 0.25 - 0.2


def test_decoder_with_corrupted_long_codes():
    u, hidden = plant_instance(10, 4, 0.0, 0.9, seed=23)
    tables = long_code_proof(hidden, 4).tables.copy()
    tables[0] = 1  # one vertex corrupted to a constant
    res = decode_labeling(u, Proof(4, tables), seed=25, rounds=10)
    assert res.fallback_vertices == (0,)
    planted_val = value(u, hidden)
    assert res.value >= 0.9 * planted_val - 0.25


def test_exact_acceptance_handles_large_epsilon():
    # the test is defined for eps in (0,1); above 1/2 the per-level factor
    # (1-2 eps)^|alpha| alternates sign
    u, hidden = plant_instance(6, 3, 0.1, 0.8, seed=41)
    proof = long_code_proof(hidden, 3)
    for eps in (0.5, 0.7, 0.9):
        exact = acceptance_probability_exact(u, proof, eps)
        est, se = acceptance_probability_mc(u, proof, 60000, seed=43, epsilon=eps)
        assert abs(est - exact) < 4 * se + 1e-9, eps
    # closed form on a satisfied-heavy instance: val (1-eps) + (1-val)/2
    val = value(u, hidden)
    got = acceptance_probability_exact(u, proof, 0.7)
    assert abs(got - (val * 0.3 + (1 - val) * 0.5)) < 1e-12


def test_proof_text_round_trip():
    proof = long_code_proof([1, 0, 3], 4)
    back = proof_from_text(proof_to_text(proof))
    assert back.num_labels == 4
    assert np.array_equal(back.tables, proof.tables)


def test_proof_validation():
    with pytest.raises(ValueError):
        Proof(2, np.array([[1, 1, 1]]))
    with pytest.raises(ValueError):
        Proof(1, np.array([[1, 2]]))
