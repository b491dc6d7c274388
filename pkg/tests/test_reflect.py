import numpy as np
import pytest

from conftest import build_channels, random_unit_modulus
from seeopt.channels import RawChannels, assemble_composite
from seeopt.conic import SolveOptions, SolveStatus, solve
from seeopt.errors import Degenerate, Infeasible
from seeopt.hermitian import rank1_gap, trace_inner
from seeopt.metrics import NoisePowers, secrecy_rate_lifted
from seeopt.reflect import (ReflectProblem, build_penalized_sdp, init_feasible,
                            penalty_iterate, recover_theta)


def rank1_W(rng, n, power=0.5):
    g = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return power * np.outer(g, g.conj()) / np.linalg.norm(g) ** 2


def full_rank_W(rng, n, power=0.5):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    m = g @ g.conj().T
    return power * m / np.trace(m).real


def make_problem(rng, L=2, N=2, K=1, i_th=20.0, W=None, eve_scale=0.5, full_rank=False):
    ch = build_channels(rng, L=L, N=N, K=K, eve_scale=eve_scale)
    if W is None:
        W = full_rank_W(rng, N) if full_rank else rank1_W(rng, N)
    return ReflectProblem(W=W, channels=ch, noise=NoisePowers(1.0, 1.0), i_th=i_th)


class TestQuadraticTerms:
    def test_matches_hand_expansion(self, rng):
        # coefficient of the eavesdropper row is H_E W H_E^H / sigma^2 entrywise
        prob = make_problem(rng, K=1)
        _, eves, interf = prob.quadratic_terms()
        h = prob.channels.H_E[0]
        expected = h @ prob.W @ h.conj().T
        assert np.allclose(eves[0], (expected + expected.conj().T) / 2)
        hp = prob.channels.H_P
        assert np.allclose(interf, (hp @ prob.W @ hp.conj().T
                                    + (hp @ prob.W @ hp.conj().T).conj().T) / 2 / prob.i_th)


class TestBuildPenalizedSdp:
    def test_zero_penalty_objective_is_pure_t(self, rng):
        prob = make_problem(rng)
        v = np.ones(prob.dim, complex) / np.sqrt(prob.dim)
        prog = build_penalized_sdp(prob, v, 0.0)
        assert prog._objective.scal == {"t": 1.0}
        assert np.allclose(prog._objective.mats["A"], 0.0)

    def test_zero_eves_budget_reduces_to_a(self, rng):
        # with no wiretap term the optimal t collapses onto a
        ch = build_channels(rng, L=2, N=2, K=1, eve_scale=0.0)
        prob = ReflectProblem(W=rank1_W(rng, 2), channels=ch,
                              noise=NoisePowers(1.0, 1.0), i_th=20.0)
        v = np.ones(3, complex) / np.sqrt(3)
        res = solve(build_penalized_sdp(prob, v, 0.0), SolveOptions(1e-9, 1e-9))
        assert res.status is SolveStatus.OPTIMAL
        assert res.scalar("t") == pytest.approx(res.scalar("a"), rel=1e-6, abs=1e-9)

    def test_rejects_bad_linearisation_vector(self, rng):
        prob = make_problem(rng)
        with pytest.raises(ValueError):
            build_penalized_sdp(prob, np.ones(prob.dim), 1.0)  # not unit norm
        with pytest.raises(ValueError):
            build_penalized_sdp(prob, np.ones(prob.dim + 1) / np.sqrt(prob.dim + 1), 1.0)

    def test_unit_diagonal_after_recovery(self, rng):
        prob = make_problem(rng)
        result = penalty_iterate(prob)
        assert np.allclose(np.diag(result.theta).real, 1.0, atol=1e-7)
        assert np.allclose(np.diag(result.theta).imag, 0.0, atol=1e-9)


class TestInitFeasible:
    def test_all_ones_accepted_without_pu_channel(self, rng):
        ch = build_channels(rng, L=2, N=2, pu_scale=0.0)
        prob = ReflectProblem(W=rank1_W(rng, 2), channels=ch,
                              noise=NoisePowers(1.0, 1.0), i_th=1e-6)
        state = init_feasible(prob)
        q = np.ones(3, complex)
        assert np.allclose(state.A, np.outer(q, q.conj()))
        assert state.a == 1.0

    def test_random_retry_path(self):
        # an all-ones PU quadratic makes the deterministic candidate overshoot
        # the cap while typical random phase draws stay below it
        L, N = 3, 2
        ones = np.ones(L + 1, complex)
        raw = RawChannels(H_CI=np.ones((L, N), complex), h_CS=np.ones(N, complex),
                          h_CP=np.ones(N, complex), h_CE=(np.zeros(N, complex),),
                          h_IS=np.ones(L, complex), h_IP=np.ones(L, complex),
                          h_IE=(np.zeros(L, complex),))
        ch = assemble_composite(raw)
        W = np.eye(N, dtype=complex) * 0.25
        m = ch.H_P @ W @ ch.H_P.conj().T
        ones_val = float(np.real(np.vdot(ones, m @ ones)))
        prob = ReflectProblem(W=W, channels=ch, noise=NoisePowers(1.0, 1.0),
                              i_th=0.5 * ones_val)
        state = init_feasible(prob, rng=np.random.default_rng(0))
        assert not np.allclose(state.A, np.outer(ones, ones.conj()))
        _, _, interf = prob.quadratic_terms()
        assert trace_inner(interf, state.A) <= 1.0 + 1e-8

    def test_zero_W_flagged_degenerate(self, rng):
        ch = build_channels(rng, L=2, N=2)
        prob = ReflectProblem(W=np.zeros((2, 2), complex), channels=ch,
                              noise=NoisePowers(1.0, 1.0), i_th=1.0)
        state = init_feasible(prob)
        assert state.degenerate

    def test_warm_vector_preferred(self, rng):
        prob = make_problem(rng, i_th=50.0)
        q = random_unit_modulus(rng, prob.dim)
        state = init_feasible(prob, q_warm=q)
        assert np.allclose(state.A, np.outer(q, q.conj()))


class TestPenaltyIterate:
    def test_rank1_exit_contract(self, rng):
        for seed in range(5):
            prob = make_problem(np.random.default_rng(seed), L=2, full_rank=True)
            result = penalty_iterate(prob)
            scale = float(np.trace(result.theta).real) * result.a
            assert rank1_gap(result.theta * result.a) <= 1e-3 * scale + 1e-12

    def test_penalty_objective_nonincreasing_per_solve(self):
        # full-rank transmit covariance forces genuine penalty steps
        hits = 0
        for seed in range(12):
            rng = np.random.default_rng(100 + seed)
            prob = make_problem(rng, L=3, full_rank=True, eve_scale=1.0)
            result = penalty_iterate(prob)
            for step in result.steps:
                assert step.f_after <= step.f_before + 1e-6
            hits += len(result.steps)
        assert hits > 0  # the loop must actually have run somewhere

    def test_degenerate_short_circuit(self, rng):
        ch = build_channels(rng, L=2, N=2)
        prob = ReflectProblem(W=np.zeros((2, 2), complex), channels=ch,
                              noise=NoisePowers(1.0, 1.0), i_th=1.0)
        result = penalty_iterate(prob)
        assert result.degenerate
        assert result.solves == 0
        assert np.allclose(np.diag(result.theta).real, 1.0)

    def test_improves_on_feasible_start(self, rng):
        # the returned matrix never does worse than the all-ones start
        for seed in range(5):
            r = np.random.default_rng(40 + seed)
            prob = make_problem(r, L=3, K=2)
            result = penalty_iterate(prob)
            noise = NoisePowers(1.0, 1.0)
            ones = np.ones(prob.dim, complex)
            sr_start = secrecy_rate_lifted(prob.W, np.outer(ones, ones.conj()),
                                           prob.channels, noise)
            sr_final = secrecy_rate_lifted(prob.W, result.theta, prob.channels, noise)
            assert sr_final >= sr_start - 1e-6


class TestCharnesCooper:
    def test_fractional_objective_matches_t(self):
        # at the relaxed optimum the ratio at Theta = A/a equals the solved t
        for seed in range(20):
            rng = np.random.default_rng(seed)
            prob = make_problem(rng, L=4, N=2, i_th=50.0)
            v = np.ones(prob.dim, complex) / np.sqrt(prob.dim)
            res = solve(build_penalized_sdp(prob, v, 0.0), SolveOptions(1e-9, 1e-9))
            assert res.status is SolveStatus.OPTIMAL
            theta = res.matrix("A") / res.scalar("a")
            signal, eves, _ = prob.quadratic_terms()
            frac = (1.0 + sum(trace_inner(E, theta) for E in eves)) \
                / (1.0 + trace_inner(signal, theta))
            assert frac == pytest.approx(res.scalar("t"), rel=1e-5)


class TestRecoverTheta:
    def test_scaling(self, rng):
        q = random_unit_modulus(rng, 4)
        a_mat = 2.0 * np.outer(q, q.conj())
        assert np.allclose(recover_theta(a_mat, 2.0), np.outer(q, q.conj()))

    def test_identity_scale(self, rng):
        m = np.outer(random_unit_modulus(rng, 3), random_unit_modulus(rng, 3).conj())
        m = (m + m.conj().T) / 2
        assert np.allclose(recover_theta(m, 1.0), m)

    def test_random_division(self, rng):
        g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        m = g @ g.conj().T
        assert np.allclose(recover_theta(m, 0.25), m / 0.25)

    def test_rejects_vanishing_scale(self, rng):
        with pytest.raises(Degenerate):
            recover_theta(np.eye(2), 1e-15)


class TestInfeasiblePath:
    def test_unreachable_interference_cap(self, rng):
        # strong PU coupling on every surface element and the direct path,
        # with a cap far below anything a unit-diagonal matrix can reach
        L, N = 2, 2
        raw = RawChannels(H_CI=np.ones((L, N), complex), h_CS=np.ones(N, complex),
                          h_CP=np.ones(N, complex) * 10.0, h_CE=(np.zeros(N, complex),),
                          h_IS=np.ones(L, complex), h_IP=np.ones(L, complex) * 10.0,
                          h_IE=(np.zeros(L, complex),))
        ch = assemble_composite(raw)
        prob = ReflectProblem(W=np.eye(N, dtype=complex), channels=ch,
                              noise=NoisePowers(1.0, 1.0), i_th=1e-8)
        with pytest.raises(Infeasible):
            init_feasible(prob, rng=np.random.default_rng(0))
