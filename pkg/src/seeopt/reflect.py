"""Reflect-vector optimization for a fixed transmit covariance.

With the transmit side frozen, maximizing the secrecy rate over the lifted
reflect matrix ``Theta`` (PSD, unit diagonal, rank 1) is a linear-fractional
problem.  A Charnes-Cooper substitution ``A = a * Theta`` turns it into an
SDP whose only hard part is the rank-1 requirement, handled exactly through
the identity ``rank(A) = 1  <=>  tr(A) - lam_max(A) <= 0`` for PSD ``A``.
The nonconvex ``-lam_max`` part of the penalised objective is linearised at
the current top eigenvector and the resulting SDPs are iterated with an
adaptive penalty coefficient: doubled whenever the iterate stagnates, reset
to its initial value after a genuine step.

The traced penalty objective ``t + rho * (tr(A) - lam_max(A))`` is
non-increasing across each solve at the coefficient used for it, which the
tests assert.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conic import ConeProgram, SolveOptions, SolveStatus, solve_robust
from .errors import Degenerate, Infeasible, SolverFailure
from .hermitian import as_hermitian, lambda_max_with_vector, rank1_gap
from .metrics import EVE_COOPERATIVE, EVE_NON_COOPERATIVE, NoisePowers

__all__ = [
    "ReflectProblem",
    "ReflectConfig",
    "PenaltyState",
    "PenaltyStep",
    "ReflectResult",
    "build_penalized_sdp",
    "init_feasible",
    "penalty_iterate",
    "recover_theta",
]


@dataclass(frozen=True)
class ReflectProblem:
    """Reflect subproblem data: fixed transmit covariance plus channel terms."""

    W: np.ndarray
    channels: object
    noise: NoisePowers
    i_th: float
    r_min: float = 0.0            # checked by the caller after solving
    eve_mode: str = EVE_COOPERATIVE

    def __post_init__(self):
        if self.eve_mode not in (EVE_COOPERATIVE, EVE_NON_COOPERATIVE):
            raise ValueError(f"unknown eavesdropper mode {self.eve_mode!r}")

    @property
    def dim(self) -> int:
        return self.channels.H_S.shape[0]

    def quadratic_terms(self):
        """Noise-normalised quadratic forms felt by the reflect matrix.

        Returns ``(signal, eves, interference)`` where each is an
        (L+1) x (L+1) Hermitian PSD matrix; the interference term is scaled
        by the cap so its constraint reads ``tr(A P) <= a``.
        """
        W = as_hermitian(self.W)
        ch = self.channels

        def term(H, denom):
            return as_hermitian(H @ W @ H.conj().T) / denom

        signal = term(ch.H_S, self.noise.sigma2_su)
        eves = [term(h, self.noise.eve(k)) for k, h in enumerate(ch.H_E)]
        interf = term(ch.H_P, self.i_th)
        return signal, eves, interf


@dataclass(frozen=True)
class ReflectConfig:
    eps: float = 1e-3
    rho_init: float = 10.0
    rho_mult: float = 2.0
    rho_cap: float = 1e6
    stagnation_tol: float = 1e-4
    max_iter: int = 100           # total SDP solves
    max_init_tries: int = 50
    solve_options: SolveOptions = field(default_factory=SolveOptions)

    def __post_init__(self):
        if min(self.eps, self.rho_init, self.rho_mult - 1.0, self.stagnation_tol) <= 0:
            raise ValueError("config values must be positive (rho_mult > 1)")


@dataclass
class PenaltyState:
    A: np.ndarray
    a: float
    t: float
    rho: float
    n: int = 0
    degenerate: bool = False


@dataclass(frozen=True)
class PenaltyStep:
    """One SDP solve inside the penalty loop."""

    n: int
    rho: float
    gap: float                    # tr(A) - lam_max(A) after the solve
    f_before: float               # penalty objective at the linearisation point
    f_after: float                # penalty objective at the new iterate
    step_norm: float
    stagnated: bool


@dataclass(frozen=True)
class ReflectResult:
    theta: np.ndarray
    a: float
    gap: float
    steps: tuple
    solves: int
    degenerate: bool = False


def _eve_budget_exprs(prog, A_var, a_expr, t_expr, eves, eve_mode):
    """Rows keeping the wiretap budget below ``t``: summed or per-Eve."""
    if eve_mode == EVE_COOPERATIVE:
        total = sum((prog.trace_term(E, A_var) for E in eves), a_expr * 1.0)
        prog.add_le(total - t_expr)
    else:
        for E in eves:
            prog.add_le(a_expr + prog.trace_term(E, A_var) - t_expr)


def build_penalized_sdp(problem: ReflectProblem, a_max_vec: np.ndarray,
                        rho: float) -> ConeProgram:
    """Penalised SDP with the top-eigenvector linearisation of ``-lam_max``."""
    v = np.asarray(a_max_vec, dtype=complex)
    n = problem.dim
    if v.shape != (n,):
        raise ValueError(f"linearisation vector has shape {v.shape}, expected ({n},)")
    if abs(np.linalg.norm(v) - 1.0) > 1e-6:
        raise ValueError("linearisation vector must be unit norm")
    signal, eves, interf = problem.quadratic_terms()

    prog = ConeProgram()
    A = prog.hermitian_var("A", n)
    a = prog.scalar_var("a", nonneg=True)
    t = prog.scalar_var("t")
    prog.add_le(1.0 - a - prog.trace_term(signal, A))
    _eve_budget_exprs(prog, A, a, t, eves, problem.eve_mode)
    prog.add_le(prog.trace_term(interf, A) - a)
    for l in range(n):
        basis = np.zeros((n, n))
        basis[l, l] = 1.0
        prog.add_eq(prog.trace_term(basis, A) - a)
    prog.minimize(t + rho * (prog.trace(A) - prog.trace_term(np.outer(v, v.conj()), A)))
    return prog


def _wiretap_budget(problem, A, a):
    _, eves, _ = problem.quadratic_terms()
    vals = [float(np.vdot(A, E).real) for E in eves]
    if problem.eve_mode == EVE_COOPERATIVE:
        return a + sum(vals)
    return a + (max(vals) if vals else 0.0)


def _interference_ratio(problem, q):
    _, _, interf = problem.quadratic_terms()
    return float(np.real(np.vdot(q, interf @ q)))


def init_feasible(problem: ReflectProblem, config: ReflectConfig | None = None,
                  rng: np.random.Generator | None = None,
                  q_warm: np.ndarray | None = None) -> PenaltyState:
    """Feasible starting point for the penalty loop.

    Tries a warm unit-modulus vector, then the all-ones vector, then random
    phase draws, and finally a minimum-interference SDP with unit diagonal.
    A vanishing transmit covariance is trivially feasible but flagged
    degenerate so the caller can skip the optimization.
    """
    cfg = config or ReflectConfig()
    rng = rng or np.random.default_rng(0)
    n = problem.dim

    degenerate = float(np.trace(problem.W).real) <= 1e-300
    candidates = []
    if q_warm is not None:
        q = np.asarray(q_warm, dtype=complex)
        if q.shape == (n,) and np.all(np.abs(np.abs(q) - 1.0) < 1e-6):
            candidates.append(q)
    candidates.append(np.ones(n, dtype=complex))
    for q in candidates:
        if degenerate or _interference_ratio(problem, q) <= 1.0 + 1e-9:
            A = np.outer(q, q.conj())
            return PenaltyState(A=A, a=1.0, t=_wiretap_budget(problem, A, 1.0),
                                rho=cfg.rho_init, degenerate=degenerate)
    for _ in range(cfg.max_init_tries):
        q = np.exp(2j * np.pi * rng.random(n))
        q[-1] = 1.0
        if _interference_ratio(problem, q) <= 1.0 + 1e-9:
            A = np.outer(q, q.conj())
            return PenaltyState(A=A, a=1.0, t=_wiretap_budget(problem, A, 1.0),
                                rho=cfg.rho_init)

    # last resort: minimise interference over PSD matrices with unit diagonal
    signal, _, interf = problem.quadratic_terms()
    prog = ConeProgram()
    A = prog.hermitian_var("A", n)
    for l in range(n):
        basis = np.zeros((n, n))
        basis[l, l] = 1.0
        prog.add_eq(prog.trace_term(basis, A) - 1.0)
    prog.minimize(prog.trace_term(interf, A))
    res = solve_robust(prog, cfg.solve_options)
    if res.status is not SolveStatus.OPTIMAL or res.objective > 1.0 + 1e-7:
        raise Infeasible("no reflect matrix meets the interference cap for this "
                         f"transmit covariance (best ratio {res.objective})")
    A0 = as_hermitian(res.matrix("A"))
    return PenaltyState(A=A0, a=1.0, t=_wiretap_budget(problem, A0, 1.0), rho=cfg.rho_init)


def recover_theta(A: np.ndarray, a: float) -> np.ndarray:
    """Undo the Charnes-Cooper scaling: ``Theta = A / a``."""
    if a <= 1e-12:
        raise Degenerate(f"scale factor a={a:.3e} is numerically zero")
    return as_hermitian(np.asarray(A, dtype=complex) / a, tol=1e-8)


def _relaxed_start(problem, state, cfg):
    """Replace the cheap feasible point by the rank-relaxed SDP optimum.

    Solving the zero-penalty program gives the best matrix satisfying the
    constraint rows; the penalty loop then only has to close its rank-1 gap.
    Starting the loop from an already rank-1 point would pin the
    linearisation to that direction and stall the search.
    """
    _, v = lambda_max_with_vector(state.A)
    prog = build_penalized_sdp(problem, v, 0.0)
    res = solve_robust(prog, cfg.solve_options)
    if res.status is not SolveStatus.OPTIMAL:
        return state, 1  # keep the feasible fallback point
    A0 = as_hermitian(res.matrix("A"), tol=1e-6)
    return PenaltyState(A=A0, a=res.scalar("a"), t=res.scalar("t"), rho=cfg.rho_init), 1


def penalty_iterate(problem: ReflectProblem, config: ReflectConfig | None = None,
                    q_warm: np.ndarray | None = None,
                    rng: np.random.Generator | None = None) -> ReflectResult:
    """Run the penalty iteration and return a unit-diagonal rank-1 reflect matrix."""
    cfg = config or ReflectConfig()
    state = init_feasible(problem, cfg, rng=rng, q_warm=q_warm)
    if state.degenerate:
        theta = recover_theta(state.A, state.a)
        return ReflectResult(theta=theta, a=state.a, gap=rank1_gap(state.A),
                             steps=(), solves=0, degenerate=True)
    state, solves = _relaxed_start(problem, state, cfg)
    if rank1_gap(state.A) <= cfg.eps * float(np.trace(state.A).real):
        # the relaxed optimum is already rank 1, hence subproblem-optimal
        theta = recover_theta(state.A, state.a)
        return ReflectResult(theta=theta, a=state.a, gap=rank1_gap(state.A),
                             steps=(), solves=solves)

    steps = []
    while True:
        lam, v = lambda_max_with_vector(state.A)
        gap_before = float(np.trace(state.A).real) - lam
        f_before = state.t + state.rho * gap_before

        prog = build_penalized_sdp(problem, v, state.rho)
        res = solve_robust(prog, cfg.solve_options)
        solves += 1
        if res.status is not SolveStatus.OPTIMAL:
            raise SolverFailure(f"penalty SDP solve {solves} returned {res.status.value}: "
                                f"{res.message}")
        A_new = as_hermitian(res.matrix("A"), tol=1e-6)
        a_new = res.scalar("a")
        t_new = res.scalar("t")
        gap = rank1_gap(A_new)
        f_after = t_new + state.rho * gap
        step_norm = float(np.linalg.norm(A_new - state.A, "fro"))
        stagnated = step_norm <= cfg.stagnation_tol * (1.0 + np.linalg.norm(state.A, "fro"))
        steps.append(PenaltyStep(n=state.n, rho=state.rho, gap=gap, f_before=f_before,
                                 f_after=f_after, step_norm=step_norm, stagnated=stagnated))

        if stagnated:
            state.rho *= cfg.rho_mult
        else:
            state.n += 1
            state.rho = cfg.rho_init
        state.A, state.a, state.t = A_new, a_new, t_new

        if gap <= cfg.eps * float(np.trace(A_new).real):
            break
        if state.rho > cfg.rho_cap:
            raise SolverFailure(f"penalty coefficient exceeded {cfg.rho_cap:g} with "
                                f"rank-1 gap {gap:.3e} still above tolerance")
        if solves >= cfg.max_iter:
            raise SolverFailure(f"penalty iteration hit the {cfg.max_iter}-solve cap "
                                f"with rank-1 gap {gap:.3e}")

    theta = recover_theta(state.A, state.a)
    return ReflectResult(theta=theta, a=state.a, gap=rank1_gap(state.A),
                         steps=tuple(steps), solves=solves)
