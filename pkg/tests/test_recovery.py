import numpy as np
import pytest
from numpy.testing import assert_allclose

import lowrank_uq as lq

from conftest import bloch_grid_state_projection, random_hermitian


class TestPilotEstimate:
    def test_parseval_inversion(self, rng):
        # noiseless full-basis sample, vanishing penalty: exact recovery
        rho = lq.random_rank_k_state(4, 2, rng)
        plan = lq.full_basis_plan(lq.pauli_design(2), 1)
        batch = lq.measure_gaussian(plan, rho, 0.0, rng)
        pilot = lq.pilot_estimate(batch)
        assert lq.frobenius_norm(pilot - rho) <= 1e-6

    def test_zero_data_heavy_penalty_returns_zero(self):
        plan = lq.draw_plan(lq.pauli_design(2), 16, 0)
        batch = lq.MeasurementBatch(plan, np.zeros(16), lq.GaussianNoise(1.0))
        pilot = lq.pilot_estimate(batch, lq.PilotConfig(lambda_scale=50.0))
        assert lq.frobenius_norm(pilot) == 0.0

    def test_objective_monotone(self, rng):
        rho = lq.random_rank_k_state(4, 1, rng)
        plan = lq.draw_plan(lq.gaussian_design(4, hermitian=True), 60, 3)
        batch = lq.measure_gaussian(plan, rho, 0.2, rng)
        _, info = lq.pilot_estimate(batch, return_info=True)
        obj = np.array(info["objective"])
        assert np.all(np.diff(obj) <= 1e-12)

    def test_divergence_detector(self, rng):
        rho = lq.random_rank_k_state(4, 1, rng)
        plan = lq.draw_plan(lq.gaussian_design(4), 50, 3)
        state = np.diag([1.0, 0, 0, 0]).astype(complex)
        batch = lq.measure_gaussian(plan, state, 0.1, rng)
        bad = lq.PilotConfig(step_override=50.0)  # far beyond 1/L
        with pytest.raises(lq.SolverDivergenceError):
            lq.pilot_estimate(batch, bad)

    def test_result_is_hermitian(self, rng):
        rho = lq.random_rank_k_state(4, 2, rng)
        plan = lq.draw_plan(lq.pauli_design(2), 64, 4)
        batch = lq.measure_gaussian(plan, rho, 0.1, rng)
        lq.check_hermitian(lq.pilot_estimate(batch))

    @pytest.mark.slow
    def test_rank_one_risk_budget(self):
        # isotropic benchmark: squared error within 5 sigma^2 d / n on >= 90%
        # of replications; the realized risk constant is printed for the record
        d, n, sigma, reps = 32, 2000, 0.1, 200
        errs = np.empty(reps)
        for rep in range(reps):
            g = np.random.default_rng((1405, rep))
            u = g.standard_normal(d)
            u /= np.linalg.norm(u)
            state = np.outer(u, u).astype(complex)
            plan = lq.draw_plan(lq.gaussian_design(d), n, g)
            batch = lq.measure_gaussian(plan, state, sigma, g)
            pilot = lq.pilot_estimate(batch)
            errs[rep] = lq.frobenius_norm(pilot - state) ** 2
        bound = 5 * sigma**2 * d / n
        frac = float(np.mean(errs <= bound))
        measured_d = float(np.quantile(errs, 1 - 2 * 0.1 / 3) * n / (sigma**2 * d))
        print(f"rank-1 benchmark: frac within budget {frac:.3f}, measured D {measured_d:.2f}")
        assert frac >= 0.90


class TestRateFunction:
    def test_nondecreasing_in_rank(self):
        rate = lq.RateFunction(D=4.0, sigma=0.1, dim=8, n=256)
        vals = [rate(k) for k in range(1, 9)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_value(self):
        rate = lq.RateFunction(D=2.0, sigma=0.5, dim=4, n=128)
        assert rate(2) == pytest.approx(2 * 0.5 * np.sqrt(2 * 2 * 4 / 128))

    def test_validation(self):
        with pytest.raises(ValueError):
            lq.RateFunction(D=-1.0, sigma=0.1, dim=4, n=16)


class TestRankReduce:
    def test_exact_rank_one_pilot(self, rng):
        pilot = lq.random_rank_k_state(4, 1, rng)
        rate = lq.RateFunction(D=1.0, sigma=0.1, dim=4, n=100)
        reduced, k = lq.rank_reduce(pilot, rate)
        assert k == 1
        assert_allclose(reduced, pilot, atol=1e-9)

    def test_small_tail_truncated(self):
        rate = lq.RateFunction(D=1.0, sigma=0.1, dim=4, n=100)
        eps_tail = 0.9 * rate(1) / 2
        pilot = np.diag([1.0, eps_tail, 0.0, 0.0])
        reduced, k = lq.rank_reduce(pilot, rate)
        assert k == 1
        assert_allclose(reduced, np.diag([1.0, 0.0, 0.0, 0.0]), atol=1e-12)

    def test_zero_rate_returns_full_rank(self, rng):
        pilot = lq.random_rank_k_state(4, 3, rng)
        rate = lq.RateFunction(D=1.0, sigma=0.0, dim=4, n=100)
        reduced, k = lq.rank_reduce(pilot, rate)
        assert k == 3
        assert_allclose(reduced, pilot, atol=1e-10)


class TestRankReductionChain:
    @pytest.mark.slow
    def test_reduced_estimator_error_bounds(self):
        # once D is calibrated at the 1 - 2 delta / 3 quantile, the reduced
        # estimator stays within rate(k) in Frobenius norm and within
        # sqrt(2k) rate(k) in nuclear norm, with roughly that frequency
        d, n, sigma, k0, delta = 8, 512, 0.1, 2, 0.1
        ensemble = lq.pauli_design(3)
        fix = lq.PilotFixture(ensemble=ensemble, sigma=sigma, n=n, rank=k0, reps=100)
        risk_d = lq.calibrate_pilot_risk(fix, delta, 31415)
        rate = lq.RateFunction(risk_d, sigma, d, n)
        hits_f, hits_s1, hits_rank = 0, 0, 0
        reps = 100
        for rep in range(reps):
            g = np.random.default_rng((1406, rep))
            state = lq.random_rank_k_state(d, k0, g)
            batch = lq.measure_gaussian(lq.draw_plan(ensemble, n, g), state, sigma, g)
            pilot = lq.pilot_estimate(batch)
            reduced, k_sel = lq.rank_reduce(pilot, rate)
            hits_f += lq.frobenius_norm(reduced - state) <= rate(k0)
            hits_s1 += lq.nuclear_norm(reduced - state) <= np.sqrt(2 * k0) * rate(k0)
            hits_rank += k_sel <= k0
        floor = (1 - 2 * delta / 3) - 0.08  # binomial margin at 100 replications
        assert hits_f / reps >= floor
        assert hits_s1 / reps >= floor
        assert hits_rank / reps >= floor


class TestPilotToState:
    def test_state_unchanged(self, rng):
        rho = lq.random_rank_k_state(4, 2, rng)
        assert lq.frobenius_norm(lq.pilot_to_state(rho) - rho) <= 1e-10

    def test_zero_pilot_maps_to_maximally_mixed(self):
        assert_allclose(lq.pilot_to_state(np.zeros((4, 4))), np.eye(4) / 4, atol=1e-12)

    def test_matches_grid_oracle(self, rng):
        a = random_hermitian(2, rng)
        assert lq.frobenius_norm(lq.pilot_to_state(a) - bloch_grid_state_projection(a)) <= 1e-4
