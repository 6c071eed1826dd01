"""Capital allocation against a maximizing scenario and its fairness audit."""

import numpy as np
import pytest

from treerisk import (
    AdaptedProcess,
    AllocationResult,
    ValidationError,
    allocate,
    fairness_check,
    rho_eval,
    worst_case_spec,
)

from conftest import random_process, random_spec, random_tree

TOL = 1e-12


def two_position_fixture(t1):
    spec = worst_case_spec(t1)
    X1 = AdaptedProcess(t1, {"root": 0.0, "u": 1.0, "d": -1.0})
    X2 = AdaptedProcess(t1, {"root": 0.0, "u": -1.0, "d": 0.5})
    return spec, [X1, X2]


class TestAllocate:
    def test_two_position_fixture(self, t1):
        spec, positions = two_position_fixture(t1)
        result = allocate(spec, positions)
        assert result.k == (1.0, -0.5)
        assert result.maximizer_label == "leaf:d"
        assert result.rho_total == 0.5
        assert result.sum_k == 0.5

    def test_single_position_gets_full_charge(self, t2):
        rng = np.random.default_rng(11)
        spec = worst_case_spec(t2)
        X = random_process(t2, rng)
        result = allocate(spec, [X])
        assert abs(result.k[0] - rho_eval(spec, X).value) <= TOL

    def test_zero_portfolio(self, t1):
        spec = worst_case_spec(t1)
        Z = AdaptedProcess.zero(t1)
        result = allocate(spec, [Z, Z, Z])
        assert result.k == (0.0, 0.0, 0.0)
        assert result.rho_total == 0.0

    def test_charges_sum_to_portfolio_risk(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            tree = random_tree(rng)
            spec = random_spec(tree, rng, n_elements=4, coherent=True)
            n = int(rng.integers(1, 6))
            positions = [random_process(tree, rng) for _ in range(n)]
            result = allocate(spec, positions)
            total = positions[0]
            for X in positions[1:]:
                total = total + X
            assert abs(result.sum_k - rho_eval(spec, total).value) <= TOL

    def test_requires_coherent_spec(self, t1):
        rng = np.random.default_rng(17)
        spec = random_spec(t1, rng, coherent=False)
        X = random_process(t1, rng)
        with pytest.raises(ValidationError):
            allocate(spec, [X])

    def test_requires_positions(self, t1):
        with pytest.raises(ValidationError):
            allocate(worst_case_spec(t1), [])

    def test_result_consistency_enforced(self):
        with pytest.raises(ValidationError):
            AllocationResult(
                k=(1.0, 1.0), maximizer=0, maximizer_label="x", rho_total=0.5, sum_k=2.0
            )


class TestFairness:
    def test_fixture_certificate(self, t1):
        spec, positions = two_position_fixture(t1)
        result = allocate(spec, positions)
        cert = fairness_check(result, spec, positions, samples=1000, seed=5)
        assert cert.passed
        assert cert.checked == 1003
        assert cert.worst_slack >= -TOL
        assert abs(cert.worst_slack) <= TOL
        assert cert.max_witness_deviation <= TOL

    def test_basis_vector_slack(self, t1):
        spec, positions = two_position_fixture(t1)
        result = allocate(spec, positions)
        cert = fairness_check(result, spec, positions, samples=0, seed=1)
        assert cert.checked == 3
        solo_risk = rho_eval(spec, positions[1]).value
        assert abs(solo_risk - 1.0) <= TOL
        assert abs((solo_risk - result.k[1]) - 1.5) <= TOL

    def test_random_instances_pass(self):
        rng = np.random.default_rng(19)
        for trial in range(10):
            tree = random_tree(rng)
            spec = random_spec(tree, rng, n_elements=3, coherent=True)
            n = int(rng.integers(1, 6))
            positions = [random_process(tree, rng) for _ in range(n)]
            result = allocate(spec, positions)
            cert = fairness_check(
                result, spec, positions, samples=50, seed=1000 + trial
            )
            assert cert.passed
            assert cert.worst_slack >= -TOL
            assert cert.max_witness_deviation <= TOL
            assert cert.checked == 50 + n + 1

    def test_seed_required(self, t1):
        spec, positions = two_position_fixture(t1)
        result = allocate(spec, positions)
        with pytest.raises(ValidationError):
            fairness_check(result, spec, positions, samples=10)

    def test_position_count_must_match(self, t1):
        spec, positions = two_position_fixture(t1)
        result = allocate(spec, positions)
        with pytest.raises(ValidationError):
            fairness_check(result, spec, positions[:1], samples=10, seed=3)
