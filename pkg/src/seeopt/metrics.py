"""Scalar performance metrics: SNR, secrecy rate, power, SEE and feasibility.

All quantities are evaluated in physical units (watts, bits/s/Hz).  Both the
vector form (beamformer ``w`` and unit-modulus reflect vector ``q``) and the
lifted form (PSD matrices ``W = w w^H`` and ``Theta = q q^H``) are supported;
the two agree to working precision on rank-1 lifts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hermitian import trace_inner

__all__ = [
    "EVE_COOPERATIVE",
    "EVE_NON_COOPERATIVE",
    "PowerModel",
    "ConstraintSet",
    "VectorSolution",
    "LiftedSolution",
    "NoisePowers",
    "ConstraintCheck",
    "FeasibilityReport",
    "dbm_to_watt",
    "db_to_linear",
    "snr",
    "interference",
    "secrecy_rate",
    "total_power",
    "see",
    "lifted_trace_term",
    "secrecy_rate_lifted",
    "interference_lifted",
    "feasibility_report",
    "default_power_model",
    "default_constraints",
    "default_noise",
]

# Eavesdropper cooperation modes: coordinated Eves pool their observations
# (rates add inside one log), non-cooperative Eves are handled via the worst
# single wiretap link.
EVE_COOPERATIVE = "cooperative"
EVE_NON_COOPERATIVE = "non-cooperative"


def dbm_to_watt(x_dbm: float) -> float:
    """Convert a power in dBm to watts."""
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def db_to_linear(x_db: float) -> float:
    """Convert a ratio in dB to linear scale."""
    return 10.0 ** (x_db / 10.0)


@dataclass(frozen=True)
class PowerModel:
    """Total-power model: ``zeta * ||w||^2 + p_cbs + p_irs`` (watts)."""

    zeta: float = 1.0
    p_cbs: float = dbm_to_watt(23.0)
    p_irs: float = dbm_to_watt(20.0)

    def __post_init__(self):
        if self.zeta <= 0 or self.p_cbs < 0 or self.p_irs < 0:
            raise ValueError("zeta must be positive and static powers nonnegative")

    @property
    def static(self) -> float:
        return self.p_cbs + self.p_irs


@dataclass(frozen=True)
class ConstraintSet:
    """Transmit power budget, minimum secrecy rate and interference cap."""

    p_max: float
    r_min: float
    i_th: float

    def __post_init__(self):
        if self.p_max <= 0 or self.r_min < 0 or self.i_th <= 0:
            raise ValueError("require p_max > 0, r_min >= 0, i_th > 0")


@dataclass(frozen=True)
class NoisePowers:
    """Receiver noise powers in watts (one value shared by all Eves or a list)."""

    sigma2_su: float = 1e-13
    sigma2_eve: float = 1e-13

    def __post_init__(self):
        if self.sigma2_su <= 0:
            raise ValueError("sigma2_su must be positive")
        for s in np.atleast_1d(self.sigma2_eve):
            if s <= 0:
                raise ValueError("sigma2_eve must be positive")

    def eve(self, k: int) -> float:
        s = np.atleast_1d(self.sigma2_eve)
        return float(s[k]) if len(s) > 1 else float(s[0])


@dataclass(frozen=True)
class VectorSolution:
    """A transmit beamformer ``w`` and a unit-modulus reflect vector ``q``.

    ``q`` has length L+1 with the last entry fixed to 1 (the direct path).
    """

    w: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q)
        if np.any(np.abs(np.abs(q) - 1.0) > 1e-6):
            raise ValueError("reflect vector entries must have unit modulus")
        if abs(q[-1] - 1.0) > 1e-6:
            raise ValueError("reflect vector must end with 1")


@dataclass(frozen=True)
class LiftedSolution:
    """PSD pair (W, Theta) replacing (w w^H, q q^H) in the lifted problem."""

    W: np.ndarray
    Theta: np.ndarray


def snr(q, h_eff, w, sigma2: float) -> float:
    """Receive SNR ``|q^H H w|^2 / sigma2`` through a composite channel."""
    amp = np.vdot(np.asarray(q, dtype=complex), np.asarray(h_eff, dtype=complex) @ np.asarray(w, dtype=complex))
    return float(np.abs(amp) ** 2 / sigma2)


def interference(q, h_p, w) -> float:
    """Received interference power ``|q^H H_P w|^2`` at the primary user."""
    amp = np.vdot(np.asarray(q, dtype=complex), np.asarray(h_p, dtype=complex) @ np.asarray(w, dtype=complex))
    return float(np.abs(amp) ** 2)


def _eve_rate(gammas, eve_mode: str) -> float:
    gams = list(gammas)
    if eve_mode == EVE_COOPERATIVE:
        return math.log2(1.0 + sum(gams))
    if eve_mode == EVE_NON_COOPERATIVE:
        return max(math.log2(1.0 + g) for g in gams) if gams else 0.0
    raise ValueError(f"unknown eavesdropper mode {eve_mode!r}")


def _unpack(solution):
    """Accept a VectorSolution or a plain (w, q) pair."""
    if isinstance(solution, tuple):
        return solution
    return solution.w, solution.q


def secrecy_rate(solution, channels, noise: NoisePowers,
                 eve_mode: str = EVE_COOPERATIVE) -> float:
    """Secrecy rate in bits/s/Hz; may be negative (no clamping)."""
    w, q = _unpack(solution)
    g_s = snr(q, channels.H_S, w, noise.sigma2_su)
    g_e = [snr(q, h, w, noise.eve(k)) for k, h in enumerate(channels.H_E)]
    return math.log2(1.0 + g_s) - _eve_rate(g_e, eve_mode)


def total_power(w_or_W, model: PowerModel) -> float:
    """Total consumed power in watts for a beamformer or its lifted matrix."""
    x = np.asarray(w_or_W)
    tx = float(np.trace(x).real) if x.ndim == 2 else float(np.linalg.norm(x) ** 2)
    return model.zeta * tx + model.static


def see(r_sec: float, p_tot: float) -> float:
    """Secrecy energy efficiency ``r_sec / p_tot`` in bits/Joule/Hz."""
    if p_tot <= 0:
        raise ValueError("total power must be positive")
    return r_sec / p_tot


def lifted_trace_term(theta, h_eff, W, sigma2: float) -> float:
    """Lifted SNR term ``tr(Theta H W H^H) / sigma2``."""
    h = np.asarray(h_eff, dtype=complex)
    return trace_inner(np.asarray(theta), h @ np.asarray(W) @ h.conj().T) / sigma2


def secrecy_rate_lifted(W, theta, channels, noise: NoisePowers,
                        eve_mode: str = EVE_COOPERATIVE) -> float:
    """Secrecy rate evaluated on the lifted pair (W, Theta)."""
    g_s = lifted_trace_term(theta, channels.H_S, W, noise.sigma2_su)
    g_e = [lifted_trace_term(theta, h, W, noise.eve(k)) for k, h in enumerate(channels.H_E)]
    return math.log2(1.0 + max(g_s, 0.0)) - _eve_rate([max(g, 0.0) for g in g_e], eve_mode)


def interference_lifted(W, theta, channels) -> float:
    """Primary-user interference ``tr(Theta H_P W H_P^H)`` on the lifted pair."""
    h = np.asarray(channels.H_P, dtype=complex)
    return trace_inner(np.asarray(theta), h @ np.asarray(W) @ h.conj().T)


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    value: float
    bound: float
    margin: float
    ok: bool


@dataclass(frozen=True)
class FeasibilityReport:
    checks: tuple
    p_tot: float
    feasible: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "feasible", all(c.ok for c in self.checks))

    def __getitem__(self, name: str) -> ConstraintCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def feasibility_report(solution, channels, constraints: ConstraintSet,
                       power_model: PowerModel, noise: NoisePowers,
                       eve_mode: str = EVE_COOPERATIVE,
                       atol: float = 1e-8, rtol: float = 1e-4) -> FeasibilityReport:
    """Per-constraint pass/fail with margins for a candidate solution.

    A constraint passes when its margin is at least ``-(atol + rtol*|bound|)``;
    the relative part keeps checks meaningful across the very different scales
    of the power budget (~1 W) and the interference cap (~1e-13 W) while
    absorbing the boundary noise a rank-1 extraction leaves behind.
    """
    w, q = _unpack(solution)
    sr = secrecy_rate(solution, channels, noise, eve_mode)
    pw = float(np.linalg.norm(w) ** 2)
    ip = interference(q, channels.H_P, w)

    def tol(bound):
        return atol + rtol * abs(bound)

    checks = (
        ConstraintCheck("secrecy_rate", sr, constraints.r_min, sr - constraints.r_min,
                        sr - constraints.r_min >= -tol(constraints.r_min)),
        ConstraintCheck("transmit_power", pw, constraints.p_max, constraints.p_max - pw,
                        constraints.p_max - pw >= -tol(constraints.p_max)),
        ConstraintCheck("interference", ip, constraints.i_th, constraints.i_th - ip,
                        constraints.i_th - ip >= -tol(constraints.i_th)),
    )
    return FeasibilityReport(checks=checks, p_tot=total_power(w, power_model))


def default_power_model() -> PowerModel:
    return PowerModel()


def default_noise() -> NoisePowers:
    return NoisePowers()


def default_constraints(pmax_dbm: float = 30.0, r_min: float = 0.5,
                        ith_db: float = 7.0, sigma2: float = 1e-13) -> ConstraintSet:
    """Default constraint set; the interference cap is ``ith_db`` above the noise floor."""
    return ConstraintSet(p_max=dbm_to_watt(pmax_dbm), r_min=r_min,
                         i_th=db_to_linear(ith_db) * sigma2)
