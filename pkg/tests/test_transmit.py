import math

import numpy as np
import pytest

from conftest import build_channels, random_unit_modulus
from seeopt.channels import RawChannels, assemble_composite
from seeopt.conic import LinExpr, ConeProgram, SolveStatus, solve
from seeopt.errors import Infeasible
from seeopt.metrics import ConstraintSet, NoisePowers, PowerModel
from seeopt.transmit import (TransmitConfig, TransmitProblem, build_inner_program,
                             dc_inner_loop, dinkelbach_outer, init_inner,
                             power_min_step, socp_log_blocks, socp_max_rate)


def bisect_rate(x, lo=-1.0, hi=40.0, iters=100):
    """Independent oracle: root of exp(s ln2) = 1 + x by bisection."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if math.exp(mid * math.log(2.0)) - (1.0 + x) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def make_problem(seed=0, L=2, N=2, K=1, p_max=2.0, r_min=0.0, i_th=5.0,
                 eve_scale=0.5, statics=0.2, theta_rank1=True):
    rng = np.random.default_rng(seed)
    ch = build_channels(rng, L=L, N=N, K=K, eve_scale=eve_scale)
    q = random_unit_modulus(rng, L + 1)
    theta = np.outer(q, q.conj())
    return TransmitProblem(theta=theta, channels=ch, noise=NoisePowers(1.0, 1.0),
                           constraints=ConstraintSet(p_max=p_max, r_min=r_min, i_th=i_th),
                           power_model=PowerModel(zeta=1.0, p_cbs=statics / 2,
                                                  p_irs=statics / 2))


def zero_eve_problem(seed=0, L=2, N=3, p_max=2.0, r_min=0.0):
    rng = np.random.default_rng(seed)
    raw = RawChannels(H_CI=(rng.standard_normal((L, N)) + 1j * rng.standard_normal((L, N))),
                      h_CS=rng.standard_normal(N) + 1j * rng.standard_normal(N),
                      h_CP=np.zeros(N, complex), h_CE=(np.zeros(N, complex),),
                      h_IS=rng.standard_normal(L) + 1j * rng.standard_normal(L),
                      h_IP=np.zeros(L, complex), h_IE=(np.zeros(L, complex),))
    ch = assemble_composite(raw)
    q = random_unit_modulus(rng, L + 1)
    return TransmitProblem(theta=np.outer(q, q.conj()), channels=ch,
                           noise=NoisePowers(1.0, 1.0),
                           constraints=ConstraintSet(p_max=p_max, r_min=r_min, i_th=1.0),
                           power_model=PowerModel(zeta=1.0, p_cbs=0.1, p_irs=0.1))


class TestSocpChain:
    def test_zero_rate_feasible_for_any_nonneg_signal(self):
        for x in (0.0, 0.5, 7.0):
            prog = ConeProgram()
            s = prog.scalar_var("s")
            prog.add_eq(s - 0.0)
            socp_log_blocks(prog, s, LinExpr(const=x), 6)
            prog.minimize(s)
            assert solve(prog).status is SolveStatus.OPTIMAL

    def test_unit_signal_gives_unit_rate(self):
        assert socp_max_rate(1.0, 6) == pytest.approx(1.0, abs=1e-3)

    def test_three_to_two_bits(self):
        assert socp_max_rate(3.0, 8) == pytest.approx(2.0, abs=1e-4)

    def test_accuracy_against_bisection_oracle(self):
        for x in (0.1, 1.0, 3.0, 10.0, 100.0, 1e4):
            assert socp_max_rate(x, 6) == pytest.approx(bisect_rate(x), abs=1e-3)

    def test_depth_improves_accuracy(self):
        x = 1e4
        err6 = abs(socp_max_rate(x, 6) - bisect_rate(x))
        err10 = abs(socp_max_rate(x, 10) - bisect_rate(x))
        assert err10 < err6

    def test_row_count(self):
        # one row per chain variable plus the linear attachment row
        for depth in (3, 6, 9):
            prog = ConeProgram()
            s = prog.scalar_var("s")
            k = socp_log_blocks(prog, s, LinExpr(const=1.0), depth)
            assert len(k) == depth + 4
            assert len(prog._socs) == depth + 3
            assert len(prog._ineqs) == 2  # quartic combination row + attachment row

    def test_rejects_shallow_depth(self):
        prog = ConeProgram()
        s = prog.scalar_var("s")
        with pytest.raises(ValueError):
            socp_log_blocks(prog, s, LinExpr(const=1.0), 2)


class TestBuildInnerProgram:
    def test_eta_zero_drops_power_term(self):
        prob = make_problem()
        prog, handles = build_inner_program(prob, 0.0, 1.5, 6)
        w_coeff = prog._objective.mats.get("W")
        assert w_coeff is None or np.allclose(w_coeff, 0.0)

    def test_eve_coefficient_matches_hand_expansion(self):
        prob = make_problem(K=1)
        _, eves, _ = prob.quadratic_terms()
        h = prob.channels.H_E[0]
        expected = h.conj().T @ prob.theta @ h
        assert np.allclose(eves[0], (expected + expected.conj().T) / 2)

    def test_rate_floor_row_scales_with_rmin(self):
        # with r_min = 0 the floor row reduces to signal >= phi - 1
        prob0 = make_problem(r_min=0.0)
        prog0, _ = build_inner_program(prob0, 0.0, 1.0, 6)
        prob1 = make_problem(r_min=1.0)
        prog1, _ = build_inner_program(prob1, 0.0, 1.0, 6)
        row0 = next(e for e in prog0._ineqs if e.scal.get("phi", 0.0) > 0 and "W" in e.mats)
        row1 = next(e for e in prog1._ineqs if e.scal.get("phi", 0.0) > 0 and "W" in e.mats)
        assert row0.scal["phi"] == pytest.approx(1.0)
        assert row1.scal["phi"] == pytest.approx(2.0)

    def test_rejects_bad_linearisation_point(self):
        with pytest.raises(ValueError):
            build_inner_program(make_problem(), 0.0, 0.5, 6)


class TestInitInner:
    def test_zero_eves_gives_unit_phi(self):
        prob = zero_eve_problem()
        state = init_inner(prob, np.eye(3, dtype=complex) * 0.1)
        assert state.phi == pytest.approx(1.0)

    def test_phi_matches_direct_evaluation(self):
        prob = make_problem(K=2, seed=3)
        W0 = np.eye(2, dtype=complex) * 0.2
        state = init_inner(prob, W0)
        _, eves, _ = prob.quadratic_terms()
        expected = 1.0 + sum(float(np.vdot(state.W, E).real) for E in eves)
        assert state.phi == pytest.approx(expected, rel=1e-9)

    def test_scales_onto_budgets(self):
        prob = make_problem(p_max=1.0, i_th=0.05, seed=4)
        _, _, interf = prob.quadratic_terms()
        W0 = np.eye(2, dtype=complex) * 5.0  # violates both rows
        state = init_inner(prob, W0)
        assert np.trace(state.W).real <= prob.constraints.p_max + 1e-9
        assert float(np.vdot(state.W, interf).real) <= 1.0 + 1e-9

    def test_feasibility_fallback_on_hard_rate_floor(self):
        prob = make_problem(r_min=1.0, seed=5, eve_scale=0.2)
        state = init_inner(prob, np.zeros((2, 2), complex))
        signal, _, _ = prob.quadratic_terms()
        x = float(np.vdot(state.W, signal).real)
        assert x + 1.0 >= 2.0 ** 1.0 * state.phi - 1e-6

    def test_unreachable_rate_floor_raises(self):
        prob = make_problem(r_min=60.0, seed=6)
        with pytest.raises(Infeasible):
            init_inner(prob, np.zeros((2, 2), complex))


class TestDcInnerLoop:
    def test_zero_eve_analytic_optimum(self):
        # single-log objective peaks at full power on the top eigenvector
        prob = zero_eve_problem()
        signal, _, _ = prob.quadratic_terms()
        analytic = math.log2(1.0 + prob.constraints.p_max * np.linalg.eigvalsh(signal)[-1])
        state = init_inner(prob, np.eye(3, dtype=complex) * 0.01)
        res = dc_inner_loop(prob, 0.0, state, TransmitConfig(eps=1e-7))
        assert res.f == pytest.approx(analytic, rel=1e-6)
        assert np.trace(res.W).real == pytest.approx(prob.constraints.p_max, rel=1e-6)

    def test_surrogate_monotone_and_bounded(self):
        for seed in range(10):
            prob = make_problem(seed=seed, K=2, eve_scale=0.8)
            state = init_inner(prob, np.eye(2, dtype=complex) * 0.05)
            res = dc_inner_loop(prob, 0.3, state, TransmitConfig())
            surr = [s.f_surrogate for s in res.steps]
            for a, b in zip(surr, surr[1:]):
                assert b >= a - 1e-7
            for s in res.steps:
                assert s.f <= res.bound + 1e-9

    def test_wiretap_row_tight_at_optimum(self):
        prob = make_problem(seed=8, K=2, eve_scale=0.8)
        state = init_inner(prob, np.eye(2, dtype=complex) * 0.05)
        res = dc_inner_loop(prob, 0.2, state, TransmitConfig())
        _, eves, _ = prob.quadratic_terms()
        budget = 1.0 + sum(float(np.vdot(res.W, E).real) for E in eves)
        assert budget == pytest.approx(res.phi, rel=1e-5)


class TestDinkelbach:
    def test_eta_sequence_and_exit(self):
        for seed in range(8):
            prob = make_problem(seed=seed, K=1, eve_scale=0.6)
            res = dinkelbach_outer(prob, np.eye(2, dtype=complex) * 0.1)
            etas = list(res.etas)
            assert etas[0] == 0.0
            for a, b in zip(etas[1:], etas[2:]):
                assert b >= a - 1e-9
            assert abs(res.subtractive_exit) <= 1e-3

    def test_eta_matches_ratio_of_final_point(self):
        prob = make_problem(seed=11)
        res = dinkelbach_outer(prob, np.eye(2, dtype=complex) * 0.1)
        signal, eves, _ = prob.quadratic_terms()
        x = float(np.vdot(res.W, signal).real)
        rate = math.log2(1.0 + x) - math.log2(res.phi)
        power = np.trace(res.W).real + prob.power_model.static
        assert res.eta == pytest.approx(rate / power, rel=1e-6)

    def test_rank1_covariance(self):
        for seed in range(8):
            prob = make_problem(seed=20 + seed, K=2)
            res = dinkelbach_outer(prob, np.eye(2, dtype=complex) * 0.1)
            assert res.rank_ratio <= 1e-6

    def test_depth_consistency(self):
        # shallow and deep rate chains agree on the achieved objective
        for seed in range(5):
            prob = make_problem(seed=30 + seed)
            r6 = dinkelbach_outer(prob, np.eye(2, dtype=complex) * 0.1,
                                  TransmitConfig(depth=6))
            r12 = dinkelbach_outer(prob, np.eye(2, dtype=complex) * 0.1,
                                   TransmitConfig(depth=12))
            assert r6.eta == pytest.approx(r12.eta, rel=1e-2)


class TestPowerMin:
    def test_zero_rate_floor_gives_zero_power(self):
        prob = make_problem(r_min=0.0, seed=40)
        W, phi = power_min_step(prob)
        assert np.trace(W).real == pytest.approx(0.0, abs=1e-6)

    def test_rate_pinned_to_floor(self):
        for seed in range(5):
            prob = make_problem(r_min=0.8, seed=50 + seed, eve_scale=0.3, p_max=5.0)
            W, phi = power_min_step(prob)
            signal, _, _ = prob.quadratic_terms()
            x = float(np.vdot(W, signal).real)
            rate = math.log2(1.0 + x) - math.log2(phi)
            assert rate == pytest.approx(0.8, abs=1e-2)

    def test_unreachable_floor_raises(self):
        prob = make_problem(r_min=60.0, seed=41)
        with pytest.raises(Infeasible):
            power_min_step(prob)
