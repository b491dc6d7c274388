import numpy as np
import pytest

from conftest import build_channels, random_unit_modulus
from seeopt.channels import RawChannels, assemble_composite
from seeopt.metrics import (EVE_COOPERATIVE, EVE_NON_COOPERATIVE, ConstraintSet,
                            NoisePowers, PowerModel, VectorSolution, db_to_linear,
                            dbm_to_watt, feasibility_report, interference,
                            interference_lifted, lifted_trace_term, secrecy_rate,
                            secrecy_rate_lifted, see, snr, total_power)


def channels_with_direct(h_cs, h_cp=None, h_ce=()):
    """Composite channels with no surface path, only direct rows."""
    n = len(h_cs)
    zero_l = np.zeros(1, dtype=complex)
    raw = RawChannels(H_CI=np.zeros((1, n), dtype=complex),
                      h_CS=np.asarray(h_cs, dtype=complex),
                      h_CP=np.asarray(h_cp if h_cp is not None else np.zeros(n), dtype=complex),
                      h_CE=tuple(np.asarray(h, dtype=complex) for h in h_ce),
                      h_IS=zero_l, h_IP=zero_l,
                      h_IE=tuple(zero_l for _ in h_ce))
    return assemble_composite(raw)


class TestUnitConversions:
    def test_dbm(self):
        assert dbm_to_watt(30.0) == pytest.approx(1.0)
        assert dbm_to_watt(23.0) == pytest.approx(0.19953, rel=1e-4)

    def test_db(self):
        assert db_to_linear(0.0) == pytest.approx(1.0)
        assert db_to_linear(7.0) == pytest.approx(5.0119, rel=1e-4)


class TestSnr:
    def test_zero_beamformer(self):
        h = np.array([[1.0], [1.0]])
        assert snr(np.ones(2), h, np.zeros(1), 1.0) == 0.0

    def test_hand_value(self):
        # q = (1, 1), stacked channel rows give q^H H w = 2, sigma2 = 1
        h = np.array([[1.0], [1.0]])
        assert snr(np.ones(2), h, np.ones(1), 1.0) == pytest.approx(4.0)

    def test_power_homogeneity(self, rng):
        ch = build_channels(rng, L=3, N=2)
        q = random_unit_modulus(rng, 4)
        w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        assert snr(q, ch.H_S, 2.0 * w, 1.0) == pytest.approx(4.0 * snr(q, ch.H_S, w, 1.0))


class TestInterference:
    def test_zero(self):
        h = np.array([[1.0], [1.0]])
        assert interference(np.ones(2), h, np.zeros(1)) == 0.0

    def test_hand_value(self):
        h = np.array([[1.0], [1.0]])
        assert interference(np.ones(2), h, np.ones(1)) == pytest.approx(4.0)

    def test_scaling(self, rng):
        ch = build_channels(rng, L=2, N=2)
        q = random_unit_modulus(rng, 3)
        w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        assert interference(q, ch.H_P, 2 * w) == pytest.approx(4 * interference(q, ch.H_P, w))


class TestSecrecyRate:
    def test_hand_arithmetic(self):
        # gamma_S = 3 against a single eavesdropper at gamma_E = 1
        ch = channels_with_direct([np.sqrt(3.0)], h_ce=([1.0],))
        sol = (np.ones(1), np.ones(2))
        assert secrecy_rate(sol, ch, NoisePowers(1.0, 1.0)) == pytest.approx(1.0)

    def test_zero_eves(self):
        ch = channels_with_direct([np.sqrt(3.0)], h_ce=([0.0],))
        sol = (np.ones(1), np.ones(2))
        assert secrecy_rate(sol, ch, NoisePowers(1.0, 1.0)) == pytest.approx(2.0)

    def test_equal_snrs_vanish(self):
        ch = channels_with_direct([1.0], h_ce=([1.0],))
        sol = (np.ones(1), np.ones(2))
        assert secrecy_rate(sol, ch, NoisePowers(1.0, 1.0)) == pytest.approx(0.0)

    def test_negative_allowed(self):
        ch = channels_with_direct([1.0], h_ce=([2.0],))
        sol = (np.ones(1), np.ones(2))
        assert secrecy_rate(sol, ch, NoisePowers(1.0, 1.0)) < 0.0

    def test_non_cooperative_uses_worst_link(self):
        ch = channels_with_direct([2.0], h_ce=([1.0], [0.5]))
        sol = (np.ones(1), np.ones(2))
        coop = secrecy_rate(sol, ch, NoisePowers(1.0, 1.0), EVE_COOPERATIVE)
        woret = secrecy_rate(sol, ch, NoisePowers(1.0, 1.0), EVE_NON_COOPERATIVE)
        assert woret > coop
        assert woret == pytest.approx(np.log2(5.0) - np.log2(2.0))

    def test_monotone_in_eve_strength(self):
        base = channels_with_direct([2.0], h_ce=([0.5],))
        worse = channels_with_direct([2.0], h_ce=([1.5],))
        sol = (np.ones(1), np.ones(2))
        noise = NoisePowers(1.0, 1.0)
        assert secrecy_rate(sol, worse, noise) < secrecy_rate(sol, base, noise)


class TestPower:
    def test_static_only_defaults(self):
        assert total_power(np.zeros(4), PowerModel()) == pytest.approx(0.29953, rel=1e-4)

    def test_vector(self):
        pm = PowerModel(zeta=1.0, p_cbs=0.0, p_irs=0.0)
        assert total_power(np.array([1.0]), pm) == pytest.approx(1.0)

    def test_lifted(self):
        pm = PowerModel(zeta=2.0, p_cbs=0.2, p_irs=0.1)
        assert total_power(0.25 * np.eye(2), pm) == pytest.approx(1.3)


class TestSee:
    def test_values(self):
        assert see(1.0, 0.5) == pytest.approx(2.0)
        assert see(0.0, 1.0) == 0.0
        assert see(1.3219, 0.29953) == pytest.approx(4.4133, rel=1e-4)

    def test_power_homogeneity(self):
        assert see(1.0, 2.0) == pytest.approx(0.5 * see(1.0, 1.0))

    def test_rejects_nonpositive_power(self):
        with pytest.raises(ValueError):
            see(1.0, 0.0)


class TestLiftedForms:
    def test_matches_vector_form(self, rng):
        for _ in range(50):
            ch = build_channels(rng, L=3, N=2, K=2)
            q = random_unit_modulus(rng, 4)
            w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            W = np.outer(w, w.conj())
            theta = np.outer(q, q.conj())
            noise = NoisePowers(1.0, 1.0)
            g_direct = snr(q, ch.H_S, w, 1.0)
            g_lift = lifted_trace_term(theta, ch.H_S, W, 1.0)
            assert g_lift == pytest.approx(g_direct, rel=1e-9, abs=1e-12)
            assert secrecy_rate_lifted(W, theta, ch, noise) == pytest.approx(
                secrecy_rate((w, q), ch, noise), rel=1e-9, abs=1e-9)
            assert interference_lifted(W, theta, ch) == pytest.approx(
                interference(q, ch.H_P, w), rel=1e-9, abs=1e-12)

    def test_zero_beamformer(self, rng):
        ch = build_channels(rng, L=2, N=2)
        theta = np.outer(np.ones(3), np.ones(3))
        assert lifted_trace_term(theta, ch.H_S, np.zeros((2, 2)), 1.0) == 0.0


class TestVectorSolution:
    def test_rejects_non_unit_modulus(self):
        with pytest.raises(ValueError):
            VectorSolution(w=np.ones(2), q=np.array([0.5, 1.0]))

    def test_rejects_bad_last_entry(self):
        with pytest.raises(ValueError):
            VectorSolution(w=np.ones(2), q=np.array([1.0, 1.0j]))


class TestFeasibilityReport:
    def _report(self, w, q, ch, p_max=1.0, r_min=0.0, i_th=1.0):
        return feasibility_report((w, q), ch, ConstraintSet(p_max, r_min, i_th),
                                  PowerModel(), NoisePowers(1.0, 1.0))

    def test_zero_beamformer_passes(self):
        ch = channels_with_direct([1.0], h_ce=([1.0],))
        rep = self._report(np.zeros(1), np.ones(2), ch)
        assert rep.feasible
        assert rep["secrecy_rate"].ok

    def test_power_violation_margin(self):
        ch = channels_with_direct([1.0], h_ce=([0.0],))
        w = np.array([np.sqrt(1.1)])
        rep = self._report(w, np.ones(2), ch, p_max=1.0)
        assert not rep["transmit_power"].ok
        assert rep["transmit_power"].margin == pytest.approx(-0.1, rel=1e-9)
        assert not rep.feasible

    def test_interference_only_violation(self):
        # constructed so only the interference cap fails
        ch = channels_with_direct([2.0], h_cp=[2.0], h_ce=([0.0],))
        rep = self._report(np.array([0.5]), np.ones(2), ch, p_max=1.0, i_th=0.5)
        failing = [c.name for c in rep.checks if not c.ok]
        assert failing == ["interference"]
