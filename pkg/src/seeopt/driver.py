"""Alternating optimization driver and benchmark schemes.

One outer round optimizes the reflect matrix for the current transmit
covariance, checks the minimum-rate side condition, then re-optimizes the
covariance for the new reflect matrix; rounds repeat until the efficiency
value stalls.  Because each half-step is solved by a local method, the driver
keeps whichever block iterate scores better under the scheme objective, so
the traced efficiency never decreases on converged runs.

Schemes:

``proposed``   efficiency maximization (Dinkelbach transmit step)
``srmax``      rate maximization (single D.C. pass with zero power weight)
``powermin``   power minimization at the rate floor (single SDP transmit step)
``noirs``      efficiency maximization with the surface disabled
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import Degenerate, Infeasible, SolverFailure
from .hermitian import principal_rank1_factor, rank1_gap
from .metrics import (EVE_COOPERATIVE, ConstraintSet, FeasibilityReport, NoisePowers,
                      PowerModel, feasibility_report, secrecy_rate_lifted, total_power)
from .reflect import ReflectConfig, ReflectProblem, penalty_iterate
from .transmit import (TransmitConfig, TransmitProblem, dc_inner_loop,
                       dinkelbach_outer, init_inner, power_min_step)

__all__ = [
    "SCHEMES",
    "RunStatus",
    "Instance",
    "DriverConfig",
    "ExtractedSolution",
    "RunResult",
    "init_W",
    "extract_solution",
    "alternate",
    "run_scheme",
    "run_sr_max",
    "run_power_min",
    "run_no_irs",
    "feasibility_probe",
]

SCHEME_PROPOSED = "proposed"
SCHEME_SR_MAX = "srmax"
SCHEME_POWER_MIN = "powermin"
SCHEME_NO_IRS = "noirs"
SCHEMES = (SCHEME_PROPOSED, SCHEME_SR_MAX, SCHEME_POWER_MIN, SCHEME_NO_IRS)


class RunStatus(str, Enum):
    CONVERGED = "Converged"
    INFEASIBLE = "Infeasible"
    ITERATION_LIMIT = "IterationLimit"
    SOLVER_FAILURE = "SolverFailure"


@dataclass(frozen=True)
class Instance:
    """One network realisation plus all constraint and power parameters."""

    channels: object
    noise: NoisePowers
    constraints: ConstraintSet
    power_model: PowerModel
    eve_mode: str = EVE_COOPERATIVE
    geometry: object = None       # echoed for reporting only
    seed: int | None = None


@dataclass(frozen=True)
class DriverConfig:
    eps: float = 1e-3
    max_outer: int = 50
    scheme: str = SCHEME_PROPOSED
    reflect: ReflectConfig = field(default_factory=ReflectConfig)
    transmit: TransmitConfig = field(default_factory=TransmitConfig)
    extract_gap_tol: float = 0.02

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; pick one of {SCHEMES}")


@dataclass(frozen=True)
class ExtractedSolution:
    w: np.ndarray
    q: np.ndarray
    see_lifted: float
    see_extracted: float
    sr_lifted: float
    sr_extracted: float
    degradation_rel: float


@dataclass
class RunResult:
    status: RunStatus
    scheme: str
    see_trace: tuple = ()
    see_lifted: float = float("nan")
    see_extracted: float = float("nan")
    sr_lifted: float = float("nan")
    sr_extracted: float = float("nan")
    p_tot: float = float("nan")
    outer_iters: int = 0
    solver_calls: int = 0
    wall_ms: float = 0.0
    w: np.ndarray | None = None
    q: np.ndarray | None = None
    feasibility: FeasibilityReport | None = None
    boundary: bool = False
    guard_hits: int = 0
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status is RunStatus.CONVERGED


def init_W(instance: Instance) -> np.ndarray:
    """Matched-filter warm start ``sqrt(p_max) h h^H / ||h||^2``.

    The direct-link vector is the last row of the composite channel.  The
    start is shrunk when it overshoots the power budget (possible for budgets
    below 1 W) or when a reflect-free bound on the primary-user interference
    exceeds the cap, so the first reflect subproblem starts feasible.
    """
    ch = instance.channels
    h = np.conj(ch.H_S[-1, :])
    nrm2 = float(np.linalg.norm(h) ** 2)
    if nrm2 <= 0.0:
        raise Degenerate("direct link to the secondary user is identically zero")
    W = np.sqrt(instance.constraints.p_max) * np.outer(h, h.conj()) / nrm2

    tr_w = float(np.trace(W).real)
    if tr_w > instance.constraints.p_max:
        W = W * (instance.constraints.p_max / tr_w)
    # valid for any PSD unit-diagonal reflect matrix: tr(Theta M) <= (L+1) lam_max(M)
    M = ch.H_P @ W @ ch.H_P.conj().T
    dim = M.shape[0]
    bound = min(dim * float(np.linalg.eigvalsh(M)[-1]),
                float(np.sum(np.abs(M))))
    if bound > instance.constraints.i_th:
        W = W * (instance.constraints.i_th / bound)
    return W


def _unit_modulus_projection(vec: np.ndarray) -> np.ndarray:
    mags = np.abs(vec)
    safe = np.where(mags > 1e-12, mags, 1.0)
    q = np.where(mags > 1e-12, vec / safe, 1.0)
    pivot = q[-1]
    return q * (np.conj(pivot) / np.abs(pivot))


def _psd_clip(mat: np.ndarray, rel: float = 1e-6) -> np.ndarray:
    """Zero out noise-level negative eigenvalues; reject real indefiniteness.

    Solver outputs can carry negative eigenvalues at the duality-gap scale,
    which for very low-power covariances rivals the matrix norm itself.
    """
    w, v = np.linalg.eigh(mat)
    floor = -(rel * max(w[-1], 0.0) + 1e-9 * max(1.0, float(np.trace(mat).real)))
    if w[0] < floor:
        raise SolverFailure(f"matrix is indefinite beyond solver noise: "
                            f"lam_min={w[0]:.3e}, lam_max={w[-1]:.3e}")
    return (v * np.maximum(w, 0.0)) @ v.conj().T


def extract_solution(W: np.ndarray, theta: np.ndarray, instance: Instance,
                     gap_tol: float = 0.02, project_q: bool = True) -> ExtractedSolution:
    """Rank-1 factors of the lifted pair, with the efficiency loss they cost.

    The reflect factor is projected entrywise onto the unit circle and rotated
    so its last entry is 1.  A reflect matrix whose rank-1 gap exceeds
    ``gap_tol`` relative to its trace means the reflect optimizer broke its
    contract and is rejected.
    """
    tr_theta = float(np.trace(theta).real)
    if tr_theta > 0 and rank1_gap(theta) > gap_tol * tr_theta:
        raise SolverFailure(f"reflect matrix rank-1 gap {rank1_gap(theta):.3e} exceeds "
                            f"{gap_tol} of its trace")
    if float(np.trace(W).real) <= 1e-8 * max(1.0, instance.constraints.p_max):
        W = np.zeros_like(W)  # solver noise around an all-off transmitter
    else:
        W = _psd_clip(W)
    w = principal_rank1_factor(W, psd_tol=1e-6)
    qv = principal_rank1_factor(_psd_clip(theta), psd_tol=1e-6)
    q = _unit_modulus_projection(qv) if project_q else qv

    ch, noise, pm = instance.channels, instance.noise, instance.power_model
    sr_lift = secrecy_rate_lifted(W, theta, ch, noise, instance.eve_mode)
    see_lift = sr_lift / total_power(W, pm)
    W_vec = np.outer(w, w.conj())
    theta_vec = np.outer(q, q.conj())
    sr_vec = secrecy_rate_lifted(W_vec, theta_vec, ch, noise, instance.eve_mode)
    see_vec = sr_vec / total_power(W_vec, pm)
    degr = (see_lift - see_vec) / abs(see_lift) if abs(see_lift) > 1e-12 else 0.0
    return ExtractedSolution(w=w, q=q, see_lifted=see_lift, see_extracted=see_vec,
                             sr_lifted=sr_lift, sr_extracted=sr_vec,
                             degradation_rel=degr)


def _see_of(instance, W, theta):
    sr = secrecy_rate_lifted(W, theta, instance.channels, instance.noise, instance.eve_mode)
    return sr / total_power(W, instance.power_model), sr


def _reflect_problem(instance, W):
    return ReflectProblem(W=W, channels=instance.channels, noise=instance.noise,
                          i_th=instance.constraints.i_th, r_min=instance.constraints.r_min,
                          eve_mode=instance.eve_mode)


def _transmit_problem(instance, theta):
    return TransmitProblem(theta=theta, channels=instance.channels, noise=instance.noise,
                           constraints=instance.constraints, power_model=instance.power_model,
                           eve_mode=instance.eve_mode)


def _finalize(instance, config, W, theta, status, trace, outer, calls, t0,
              boundary, guards, message="", project_q=True):
    result = RunResult(status=status, scheme=config.scheme, see_trace=tuple(trace),
                       outer_iters=outer, solver_calls=calls,
                       wall_ms=1000.0 * (time.perf_counter() - t0),
                       boundary=boundary, guard_hits=guards, message=message)
    if W is None or theta is None:
        return result
    try:
        ext = extract_solution(W, theta, instance, gap_tol=config.extract_gap_tol,
                               project_q=project_q)
    except (SolverFailure, ValueError) as exc:
        result.status = RunStatus.SOLVER_FAILURE
        result.message = f"extraction failed: {exc}"
        return result
    result.see_lifted = ext.see_lifted
    result.see_extracted = ext.see_extracted
    result.sr_lifted = ext.sr_lifted
    result.sr_extracted = ext.sr_extracted
    result.w, result.q = ext.w, ext.q
    result.p_tot = total_power(ext.w, instance.power_model)
    result.feasibility = feasibility_report(
        (ext.w, ext.q), instance.channels, instance.constraints,
        instance.power_model, instance.noise, instance.eve_mode)
    return result


def _transmit_step(instance, config, theta, W):
    """Scheme-specific transmit half-step; returns (W_new, solver_calls)."""
    problem = _transmit_problem(instance, theta)
    if config.scheme == SCHEME_POWER_MIN:
        W_new, _ = power_min_step(problem, config.transmit.solve_options)
        return W_new, 1
    if config.scheme == SCHEME_SR_MAX:
        state = init_inner(problem, W, config.transmit.solve_options)
        res = dc_inner_loop(problem, 0.0, state, config.transmit)
        return res.W, len(res.steps) - 1
    res = dinkelbach_outer(problem, W, config.transmit)
    return res.W, res.solves


def alternate(instance: Instance, config: DriverConfig | None = None,
              rng: np.random.Generator | None = None) -> RunResult:
    """Run the alternating scheme selected by the config to a fixed point."""
    config = config or DriverConfig()
    if config.scheme == SCHEME_NO_IRS:
        return run_no_irs(instance, config)
    t0 = time.perf_counter()
    rng = rng or np.random.default_rng(instance.seed or 0)

    try:
        W = init_W(instance)
    except Degenerate as exc:
        return RunResult(status=RunStatus.INFEASIBLE, scheme=config.scheme,
                         message=str(exc))

    theta = None
    q_warm = None
    see_prev = 0.0
    trace = []
    calls = 0
    guards = 0
    boundary = False
    status = RunStatus.ITERATION_LIMIT
    outer = 0
    r_min = instance.constraints.r_min

    for outer in range(1, config.max_outer + 1):
        # reflect half-step (rate-maximizing for every scheme)
        try:
            rres = penalty_iterate(_reflect_problem(instance, W), config.reflect,
                                   q_warm=q_warm, rng=rng)
        except Infeasible as exc:
            if outer == 1:
                return _finalize(instance, config, None, None, RunStatus.INFEASIBLE,
                                 trace, outer, calls, t0, boundary, guards, str(exc))
            return _finalize(instance, config, W, theta, RunStatus.SOLVER_FAILURE,
                             trace, outer, calls, t0, boundary, guards, str(exc))
        except SolverFailure as exc:
            return _finalize(instance, config, W, theta, RunStatus.SOLVER_FAILURE,
                             trace, outer, calls, t0, boundary, guards, str(exc))
        calls += rres.solves

        if theta is None:
            theta = rres.theta
        else:
            # local solves can regress; keep the rate-better reflect matrix
            _, sr_new = _see_of(instance, W, rres.theta)
            _, sr_old = _see_of(instance, W, theta)
            if sr_new >= sr_old - 1e-12:
                theta = rres.theta
            else:
                guards += 1
        q_warm = _unit_modulus_projection(principal_rank1_factor(theta, psd_tol=1e-6))

        # minimum-rate side condition is only checked after the reflect solve;
        # the warm start may sit below the floor, so iteration 1 defers the
        # verdict to the transmit step's feasibility program
        _, sr_cur = _see_of(instance, W, theta)
        if sr_cur < r_min - 1e-9 and outer > 1:
            boundary = True
            status = RunStatus.CONVERGED
            break

        # transmit half-step
        try:
            W_new, n_calls = _transmit_step(instance, config, theta, W)
        except Infeasible as exc:
            if outer == 1:
                return _finalize(instance, config, None, None, RunStatus.INFEASIBLE,
                                 trace, outer, calls, t0, boundary, guards, str(exc))
            return _finalize(instance, config, W, theta, RunStatus.SOLVER_FAILURE,
                             trace, outer, calls, t0, boundary, guards, str(exc))
        except SolverFailure as exc:
            return _finalize(instance, config, W, theta, RunStatus.SOLVER_FAILURE,
                             trace, outer, calls, t0, boundary, guards, str(exc))
        calls += n_calls

        if config.scheme == SCHEME_PROPOSED:
            see_new, _ = _see_of(instance, W_new, theta)
            see_old, _ = _see_of(instance, W, theta)
            if see_new >= see_old - 1e-12:
                W = W_new
            else:
                guards += 1
        elif config.scheme == SCHEME_SR_MAX:
            _, sr_new = _see_of(instance, W_new, theta)
            _, sr_old = _see_of(instance, W, theta)
            if sr_new >= sr_old - 1e-12:
                W = W_new
            else:
                guards += 1
        else:
            W = W_new

        see_j, _ = _see_of(instance, W, theta)
        trace.append(see_j)
        # relative form so the stop behaves the same across efficiency scales
        if abs(see_j - see_prev) <= config.eps * max(1.0, abs(see_j)):
            status = RunStatus.CONVERGED
            break
        see_prev = see_j

    return _finalize(instance, config, W, theta, status, trace, outer, calls, t0,
                     boundary, guards)


def run_scheme(instance: Instance, scheme: str, config: DriverConfig | None = None,
               rng: np.random.Generator | None = None) -> RunResult:
    """Run one scheme, reusing the shared alternation machinery."""
    base = config or DriverConfig()
    cfg = DriverConfig(eps=base.eps, max_outer=base.max_outer, scheme=scheme,
                       reflect=base.reflect, transmit=base.transmit,
                       extract_gap_tol=base.extract_gap_tol)
    return alternate(instance, cfg, rng=rng)


def run_sr_max(instance, config=None, rng=None) -> RunResult:
    return run_scheme(instance, SCHEME_SR_MAX, config, rng)


def run_power_min(instance, config=None, rng=None) -> RunResult:
    return run_scheme(instance, SCHEME_POWER_MIN, config, rng)


def run_no_irs(instance: Instance, config: DriverConfig | None = None) -> RunResult:
    """Efficiency maximization with only the direct rows of the channels active."""
    base = config or DriverConfig()
    config = DriverConfig(eps=base.eps, max_outer=base.max_outer, scheme=SCHEME_NO_IRS,
                          reflect=base.reflect, transmit=base.transmit,
                          extract_gap_tol=base.extract_gap_tol)
    t0 = time.perf_counter()
    dim = instance.channels.H_S.shape[0]
    theta = np.zeros((dim, dim), dtype=complex)
    theta[-1, -1] = 1.0
    try:
        W0 = init_W(instance)
        res = dinkelbach_outer(_transmit_problem(instance, theta), W0, config.transmit)
    except (Infeasible, Degenerate) as exc:
        return RunResult(status=RunStatus.INFEASIBLE, scheme=SCHEME_NO_IRS, message=str(exc))
    except SolverFailure as exc:
        return RunResult(status=RunStatus.SOLVER_FAILURE, scheme=SCHEME_NO_IRS, message=str(exc))
    see_val, _ = _see_of(instance, res.W, theta)
    return _finalize(instance, config, res.W, theta, RunStatus.CONVERGED, [see_val],
                     1, res.solves, t0, False, 0, project_q=False)


def feasibility_probe(instance: Instance, config: DriverConfig | None = None,
                      rng: np.random.Generator | None = None) -> bool:
    """Whether a channel realisation admits any point meeting all constraints.

    Probed by the rate-maximizing scheme: a run that reaches the rate floor
    with the budget and interference rows satisfied is an existence proof,
    whether or not the alternation had fully stalled by the iteration cap.
    """
    res = run_sr_max(instance, config, rng)
    if res.status not in (RunStatus.CONVERGED, RunStatus.ITERATION_LIMIT):
        return False
    if res.feasibility is None or res.sr_lifted < instance.constraints.r_min - 1e-6:
        return False
    rep = res.feasibility
    return bool(rep["transmit_power"].ok and rep["interference"].ok)
