"""Monte Carlo experiment harness, aggregation, and the brute-force oracle.

An :class:`ExperimentSpec` names one experiment kind, a swept parameter with
its values, a seed count and the scenario overrides.  Each (scheme, sweep
value, seed) triple becomes one row; the channel seed depends only on the
base seed and the seed index, so schemes and sweep points see paired
realisations.  Outputs are plain CSV (a fixed row schema plus per-point
aggregates) and an optional gnuplot-style ``.dat`` table.

Row wall times are measured but written as 0 unless timing is explicitly
requested, keeping repeated sweeps byte-identical for a fixed base seed.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelParams, ScenarioGeometry, generate_channels
from .driver import (SCHEME_PROPOSED, SCHEMES, DriverConfig, Instance, RunResult,
                     RunStatus, alternate, run_sr_max)
from .errors import Infeasible
from .metrics import (EVE_COOPERATIVE, ConstraintSet, NoisePowers, PowerModel,
                      dbm_to_watt, db_to_linear)
from .reflect import ReflectConfig
from .transmit import TransmitConfig

__all__ = [
    "EXPERIMENT_KINDS",
    "ExperimentSpec",
    "RecordRow",
    "AggregateRow",
    "OracleConfig",
    "OracleResult",
    "default_overrides",
    "make_instance",
    "make_driver_config",
    "monte_carlo",
    "write_rows_csv",
    "write_aggregates_csv",
    "write_dat",
    "aggregate_rows",
    "growth_rate",
    "brute_force_oracle",
    "parse_config_text",
    "spec_from_config",
]

EXPERIMENT_KINDS = ("convergence", "feasibility_rate", "pmax_sweep", "rmin_sweep",
                    "L_sweep", "K_sweep", "irs_location_sweep", "growth_rate",
                    "oracle_check")

CSV_HEADER = "experiment,scheme,sweep_param,sweep_value,seed,status,see,sr,ptot_w,feasible,outer_iters,wall_ms"

# scenario knobs understood by make_instance / the config file
_OVERRIDE_KEYS = ("L", "N", "K", "pmax_dbm", "rmin", "ith_db", "eve_mode",
                  "socp_depth", "x_irs", "eps", "max_outer", "sigma2_dbm")


def default_overrides() -> dict:
    return {"L": 16, "N": 4, "K": 2, "pmax_dbm": 30.0, "rmin": 0.5, "ith_db": 7.0,
            "eve_mode": EVE_COOPERATIVE, "socp_depth": 6, "x_irs": 100.0,
            "eps": 1e-3, "max_outer": 50, "sigma2_dbm": -100.0}


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    sweep_param: str = ""
    sweep_values: tuple = (None,)
    seeds: int = 50
    base_seed: int = 1
    schemes: tuple = (SCHEME_PROPOSED,)
    overrides: dict = field(default_factory=dict)
    record_timing: bool = False

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.seeds < 1 or not self.sweep_values:
            raise ValueError("need at least one seed and one sweep value")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown scheme {s!r}")


@dataclass(frozen=True)
class RecordRow:
    experiment: str
    scheme: str
    sweep_param: str
    sweep_value: object
    seed: int
    status: str
    see: float
    sr: float
    ptot_w: float
    feasible: bool
    outer_iters: int
    wall_ms: float


@dataclass(frozen=True)
class AggregateRow:
    experiment: str
    scheme: str
    sweep_param: str
    sweep_value: object
    n: int
    n_failed: int
    feas_rate: float
    see_mean: float
    see_stderr: float
    sr_mean: float
    sr_stderr: float
    ptot_mean: float


def make_instance(seed: int, overrides: dict | None = None) -> Instance:
    """Build one seeded network instance from flat override keys."""
    ov = default_overrides()
    ov.update(overrides or {})
    sigma2 = dbm_to_watt(ov["sigma2_dbm"])
    geometry = ScenarioGeometry(N=int(ov["N"]), L=int(ov["L"]), K=int(ov["K"]),
                                irs_x=float(ov["x_irs"]))
    params = ChannelParams(sigma2_su=sigma2, sigma2_eve=sigma2)
    channels = generate_channels(geometry, params, seed)
    noise = NoisePowers(sigma2_su=sigma2, sigma2_eve=sigma2)
    constraints = ConstraintSet(p_max=dbm_to_watt(float(ov["pmax_dbm"])),
                                r_min=float(ov["rmin"]),
                                i_th=db_to_linear(float(ov["ith_db"])) * sigma2)
    return Instance(channels=channels, noise=noise, constraints=constraints,
                    power_model=PowerModel(), eve_mode=ov["eve_mode"],
                    geometry=geometry, seed=seed)


def make_driver_config(scheme: str, overrides: dict | None = None) -> DriverConfig:
    ov = default_overrides()
    ov.update(overrides or {})
    return DriverConfig(eps=float(ov["eps"]), max_outer=int(ov["max_outer"]),
                        scheme=scheme,
                        transmit=TransmitConfig(eps=float(ov["eps"]),
                                                depth=int(ov["socp_depth"])),
                        reflect=ReflectConfig(eps=float(ov["eps"])))


def _row_from_result(spec, scheme, value, seed, res: RunResult, wall_ms) -> RecordRow:
    feasible = bool(res.feasibility.feasible) if res.feasibility is not None else False
    return RecordRow(experiment=spec.kind, scheme=scheme, sweep_param=spec.sweep_param,
                     sweep_value=value, seed=seed, status=res.status.value,
                     see=res.see_extracted, sr=res.sr_extracted, ptot_w=res.p_tot,
                     feasible=feasible, outer_iters=res.outer_iters, wall_ms=wall_ms)


def _run_one(task):
    """Worker entry: one (scheme, sweep value, seed) row."""
    spec, scheme, value, seed = task
    overrides = dict(spec.overrides)
    if spec.sweep_param and value is not None:
        overrides[spec.sweep_param] = value
    t0 = time.perf_counter()
    instance = make_instance(seed, overrides)
    config = make_driver_config(scheme, overrides)
    if spec.kind == "feasibility_rate":
        res = run_sr_max(instance, config)
        feasible = (res.status in (RunStatus.CONVERGED, RunStatus.ITERATION_LIMIT)
                    and res.feasibility is not None
                    and res.sr_lifted >= instance.constraints.r_min - 1e-6
                    and res.feasibility["transmit_power"].ok
                    and res.feasibility["interference"].ok)
        wall = 1000.0 * (time.perf_counter() - t0)
        return RecordRow(experiment=spec.kind, scheme=scheme, sweep_param=spec.sweep_param,
                         sweep_value=value, seed=seed, status=res.status.value,
                         see=res.see_extracted, sr=res.sr_extracted, ptot_w=res.p_tot,
                         feasible=bool(feasible), outer_iters=res.outer_iters, wall_ms=wall)
    res = alternate(instance, config)
    wall = 1000.0 * (time.perf_counter() - t0)
    return _row_from_result(spec, scheme, value, seed, res, wall)


def _worker_count() -> int:
    raw = os.environ.get("SEEOPT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def monte_carlo(spec: ExperimentSpec, out_dir=None):
    """Run all rows of an experiment; returns (rows, aggregates).

    Rows execute in a process pool capped by ``SEEOPT_THREADS`` (default 1).
    The channel seed of row index ``i`` is ``base_seed ^ i``, identical across
    schemes and sweep values so comparisons are paired.  When ``out_dir`` is
    given, ``<kind>_rows.csv``, ``<kind>_agg.csv`` and ``<kind>.dat`` are
    written there.
    """
    tasks = []
    for value in spec.sweep_values:
        for scheme in spec.schemes:
            for i in range(spec.seeds):
                tasks.append((spec, scheme, value, spec.base_seed ^ i))
    workers = _worker_count()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_one, tasks, chunksize=1))
    else:
        rows = [_run_one(t) for t in tasks]
    aggregates = aggregate_rows(rows)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_rows_csv(rows, os.path.join(out_dir, f"{spec.kind}_rows.csv"), spec)
        write_aggregates_csv(aggregates, os.path.join(out_dir, f"{spec.kind}_agg.csv"), spec)
        write_dat(aggregates, os.path.join(out_dir, f"{spec.kind}.dat"))
        if spec.kind == "growth_rate":
            _write_growth_rates(aggregates, os.path.join(out_dir, "growth_rate_gr.csv"), spec)
    return rows, aggregates


def _write_growth_rates(aggs, path, spec) -> None:
    """Per-step percentage change of mean rate and mean total power."""
    with open(path, "w") as fh:
        fh.write(_header_comment(spec))
        fh.write("scheme,sweep_param,from_value,to_value,sr_growth_pct,ptot_growth_pct\n")
        schemes = []
        for a in aggs:
            if a.scheme not in schemes:
                schemes.append(a.scheme)
        for scheme in schemes:
            pts = [a for a in aggs if a.scheme == scheme and math.isfinite(a.sr_mean)]
            if len(pts) < 2:
                continue
            gr_sr = growth_rate([a.sr_mean for a in pts])
            gr_tp = growth_rate([a.ptot_mean for a in pts])
            for prev, cur, gs, gt in zip(pts, pts[1:], gr_sr, gr_tp):
                fh.write(",".join([scheme, prev.sweep_param, _fmt(prev.sweep_value),
                                   _fmt(cur.sweep_value), _fmt(gs), _fmt(gt)]) + "\n")


def aggregate_rows(rows) -> list:
    """Mean/stderr per (scheme, sweep value), failures filtered but counted."""
    groups = {}
    order = []
    for row in rows:
        key = (row.scheme, row.sweep_value)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    out = []
    for key in order:
        grp = groups[key]
        ok = [r for r in grp if r.status == RunStatus.CONVERGED.value and r.feasible
              and math.isfinite(r.see)]
        n_failed = sum(1 for r in grp
                       if r.status in (RunStatus.SOLVER_FAILURE.value,
                                       RunStatus.ITERATION_LIMIT.value))
        feas_rate = sum(1 for r in grp if r.feasible) / len(grp)

        def stats(vals):
            if not vals:
                return float("nan"), float("nan")
            m = float(np.mean(vals))
            s = float(np.std(vals, ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
            return m, s

        see_m, see_s = stats([r.see for r in ok])
        sr_m, sr_s = stats([r.sr for r in ok])
        ptot_m, _ = stats([r.ptot_w for r in ok])
        first = grp[0]
        out.append(AggregateRow(experiment=first.experiment, scheme=key[0],
                                sweep_param=first.sweep_param, sweep_value=key[1],
                                n=len(grp), n_failed=n_failed, feas_rate=feas_rate,
                                see_mean=see_m, see_stderr=see_s, sr_mean=sr_m,
                                sr_stderr=sr_s, ptot_mean=ptot_m))
    return out


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _header_comment(spec: ExperimentSpec) -> str:
    ov = default_overrides()
    ov.update(spec.overrides)
    return (f"# seeopt {spec.kind}: seeds={spec.seeds} base_seed={spec.base_seed} "
            f"L={ov['L']} N={ov['N']} K={ov['K']} (reduced desk-scale run)\n")


def write_rows_csv(rows, path, spec: ExperimentSpec) -> None:
    with open(path, "w") as fh:
        fh.write(_header_comment(spec))
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            wall = r.wall_ms if spec.record_timing else 0.0
            fh.write(",".join([r.experiment, r.scheme, r.sweep_param, _fmt(r.sweep_value),
                               str(r.seed), r.status, _fmt(r.see), _fmt(r.sr),
                               _fmt(r.ptot_w), _fmt(r.feasible), str(r.outer_iters),
                               _fmt(float(wall))]) + "\n")


def write_aggregates_csv(aggs, path, spec: ExperimentSpec) -> None:
    with open(path, "w") as fh:
        fh.write(_header_comment(spec))
        fh.write("experiment,scheme,sweep_param,sweep_value,n,n_failed,feas_rate,"
                 "see_mean,see_stderr,sr_mean,sr_stderr,ptot_mean\n")
        for a in aggs:
            fh.write(",".join([a.experiment, a.scheme, a.sweep_param, _fmt(a.sweep_value),
                               str(a.n), str(a.n_failed), _fmt(a.feas_rate),
                               _fmt(a.see_mean), _fmt(a.see_stderr), _fmt(a.sr_mean),
                               _fmt(a.sr_stderr), _fmt(a.ptot_mean)]) + "\n")


def write_dat(aggs, path) -> None:
    """Gnuplot-friendly blocks: one block per scheme, columns value/mean/stderr."""
    with open(path, "w") as fh:
        schemes = []
        for a in aggs:
            if a.scheme not in schemes:
                schemes.append(a.scheme)
        for scheme in schemes:
            fh.write(f"# scheme {scheme}: sweep_value see_mean see_stderr sr_mean\n")
            for a in aggs:
                if a.scheme == scheme:
                    fh.write(f"{_fmt(a.sweep_value)} {_fmt(a.see_mean)} "
                             f"{_fmt(a.see_stderr)} {_fmt(a.sr_mean)}\n")
            fh.write("\n\n")


def growth_rate(series) -> list:
    """Per-step percentage growth of a positive series (length n-1 output)."""
    vals = [float(v) for v in series]
    if len(vals) < 2:
        raise ValueError("growth rate needs at least two values")
    if any(v <= 0 for v in vals):
        raise ValueError("growth rate requires positive values")
    return [100.0 * (b - a) / a for a, b in zip(vals, vals[1:])]


# ---------------------------------------------------------------------------
# exhaustive oracle for desk-scale verification

@dataclass(frozen=True)
class OracleConfig:
    phase_levels: int = 16
    beam_samples: int = 20000
    power_points: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.phase_levels < 4:
            raise ValueError("need at least 4 phase levels")


@dataclass(frozen=True)
class OracleResult:
    see: float
    sr: float
    power: float
    w: np.ndarray
    q: np.ndarray


def brute_force_oracle(instance: Instance, config: OracleConfig | None = None) -> OracleResult:
    """Exhaustive phase grid with sampled beam directions and a power sweep.

    Cost grows as ``phase_levels ** L``, so inputs are capped at L <= 3 and
    N <= 2.  For each grid reflect vector the candidate beams are the matched
    direction, its zero-forcing projection away from the primary-user
    channel, and random unit vectors.  Each candidate sweeps its own power
    grid, capped where the interference constraint binds, so cap-limited
    candidates keep full power resolution.  The best feasible point wins.
    """
    cfg = config or OracleConfig()
    ch = instance.channels
    L, N = ch.L, ch.N
    if L > 3 or N > 2:
        raise ValueError(f"oracle capped at L<=3, N<=2 (got L={L}, N={N})")
    cons = instance.constraints
    pm = instance.power_model
    noise = instance.noise
    if instance.eve_mode != EVE_COOPERATIVE:
        raise ValueError("oracle implemented for the cooperative eavesdropper mode")

    rng = np.random.default_rng(cfg.seed)
    dirs = rng.standard_normal((N, cfg.beam_samples)) + 1j * rng.standard_normal((N, cfg.beam_samples))
    dirs = dirs / np.linalg.norm(dirs, axis=0, keepdims=True)
    frac = np.linspace(0.0, 1.0, cfg.power_points)

    def unit(v):
        n = np.linalg.norm(v)
        return v / n if n > 1e-300 else None

    best = None
    phases = 2.0 * np.pi * np.arange(cfg.phase_levels) / cfg.phase_levels
    grids = np.meshgrid(*([phases] * L), indexing="ij")
    combos = np.stack([g.ravel() for g in grids], axis=1)
    for angles in combos:
        q = np.concatenate([np.exp(1j * angles), [1.0]])
        g_s = q.conj() @ ch.H_S
        g_p = q.conj() @ ch.H_P
        g_e = np.stack([q.conj() @ h for h in ch.H_E])
        fixed = [unit(g_s.conj())]
        gp_dir = unit(g_p.conj())
        if gp_dir is not None:
            fixed.append(unit(g_s.conj() - gp_dir * np.vdot(gp_dir, g_s.conj())))
        cand = np.concatenate([np.stack([f for f in fixed if f is not None], axis=1),
                               dirs], axis=1)
        a_s = np.abs(g_s @ cand) ** 2 / noise.sigma2_su
        a_p = np.abs(g_p @ cand) ** 2
        a_e = sum(np.abs(g_e[k] @ cand) ** 2 / noise.eve(k) for k in range(len(g_e)))

        with np.errstate(divide="ignore"):
            p_cap = np.minimum(cons.p_max, np.where(a_p > 0, cons.i_th / a_p, np.inf))
        powers = p_cap[:, None] * frac[None, :]
        sr = np.log2(1.0 + powers * a_s[:, None]) - np.log2(1.0 + powers * a_e[:, None])
        see_grid = sr / (pm.zeta * powers + pm.static)
        see_grid = np.where(sr >= cons.r_min - 1e-12, see_grid, -np.inf)
        idx = np.unravel_index(np.argmax(see_grid), see_grid.shape)
        if np.isfinite(see_grid[idx]) and (best is None or see_grid[idx] > best[0]):
            ci, pi = idx
            w = np.sqrt(powers[ci, pi]) * cand[:, ci]
            best = (float(see_grid[idx]), float(sr[idx]),
                    float(pm.zeta * powers[ci, pi] + pm.static), w.copy(), q.copy())
    if best is None:
        raise Infeasible("oracle found no feasible candidate on its grid")
    return OracleResult(see=best[0], sr=best[1], power=best[2], w=best[3], q=best[4])


# ---------------------------------------------------------------------------
# flat key = value configuration files

_CONFIG_KEYS = {"experiment", "sweep", "seeds", "seed", "schemes",
                "record_timing"} | set(_OVERRIDE_KEYS)


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines; '#' comments; unknown keys are errors."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _parse_number(token: str):
    try:
        return int(token)
    except ValueError:
        return float(token)


def spec_from_config(cfg: dict) -> ExperimentSpec:
    """Build an ExperimentSpec from parsed config keys."""
    if "experiment" not in cfg:
        raise ValueError("config must set 'experiment'")
    kind = cfg["experiment"]
    sweep_param, sweep_values = "", (None,)
    if "sweep" in cfg:
        if ":" not in cfg["sweep"]:
            raise ValueError("sweep must look like 'param: v1,v2,...'")
        sweep_param, vals = cfg["sweep"].split(":", 1)
        sweep_param = sweep_param.strip()
        if sweep_param not in _OVERRIDE_KEYS:
            raise ValueError(f"unknown sweep parameter {sweep_param!r}")
        sweep_values = tuple(_parse_number(v.strip()) for v in vals.split(",") if v.strip())
    schemes = tuple(s.strip() for s in cfg.get("schemes", SCHEME_PROPOSED).split(",") if s.strip())
    overrides = {}
    for key in _OVERRIDE_KEYS:
        if key in cfg:
            overrides[key] = cfg[key] if key == "eve_mode" else _parse_number(cfg[key])
    return ExperimentSpec(kind=kind, sweep_param=sweep_param, sweep_values=sweep_values,
                          seeds=int(cfg.get("seeds", 50)), base_seed=int(cfg.get("seed", 1)),
                          schemes=schemes, overrides=overrides,
                          record_timing=cfg.get("record_timing", "0").strip() in ("1", "true", "yes"))
