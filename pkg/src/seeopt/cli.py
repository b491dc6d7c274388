"""Command line interface.

Subcommands: ``run`` (one instance, prints the run summary), ``sweep``
(experiment from a config file, writes CSVs), ``oracle-check`` (tiny
instances against the exhaustive grid) and ``dump-channels`` (plain-text
realisation dump).  Exit codes: 0 success, 1 infeasible, 2 configuration
error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .channels import ChannelParams, ScenarioGeometry, dump_channels, generate_raw_channels
from .driver import RunStatus, SCHEMES, alternate
from .errors import Infeasible, SolverFailure
from .experiments import (ExperimentSpec, OracleConfig, brute_force_oracle,
                          default_overrides, make_driver_config, make_instance,
                          monte_carlo, parse_config_text, spec_from_config)
from .metrics import EVE_COOPERATIVE, EVE_NON_COOPERATIVE, dbm_to_watt

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=str, default=None, help="flat key = value config file")
    p.add_argument("--seed", type=int, default=1, help="base 64-bit seed")
    p.add_argument("--L", type=int, default=None, help="number of reflecting elements")
    p.add_argument("--N", type=int, default=None, help="number of transmit antennas")
    p.add_argument("--K", type=int, default=None, help="number of eavesdroppers")
    p.add_argument("--pmax-dbm", type=float, default=None, help="transmit power budget")
    p.add_argument("--rmin", type=float, default=None, help="minimum secrecy rate")
    p.add_argument("--ith-db", type=float, default=None,
                   help="interference cap in dB over the noise floor")
    p.add_argument("--eve-mode", choices=[EVE_COOPERATIVE, EVE_NON_COOPERATIVE],
                   default=None)
    p.add_argument("--socp-depth", type=int, default=None, help="rate-chain accuracy")
    p.add_argument("--scheme", choices=list(SCHEMES), default="proposed")
    p.add_argument("--out", type=str, default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seeopt",
                                     description="Secrecy-energy-efficient beamforming "
                                                 "for an IRS-assisted cognitive radio downlink")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="optimize one channel realisation")
    _add_scenario_flags(run_p)

    sweep_p = sub.add_parser("sweep", help="Monte Carlo experiment from a config file")
    _add_scenario_flags(sweep_p)
    sweep_p.add_argument("--seeds", type=int, default=None, help="number of realisations")

    oracle_p = sub.add_parser("oracle-check", help="compare against the exhaustive grid")
    _add_scenario_flags(oracle_p)
    oracle_p.add_argument("--seeds", type=int, default=5)
    oracle_p.add_argument("--phase-levels", type=int, default=16)

    dump_p = sub.add_parser("dump-channels", help="write one realisation as plain text")
    _add_scenario_flags(dump_p)
    return parser


def _overrides_from_args(args) -> dict:
    ov = {}
    for key, attr in (("L", "L"), ("N", "N"), ("K", "K"), ("pmax_dbm", "pmax_dbm"),
                      ("rmin", "rmin"), ("ith_db", "ith_db"), ("eve_mode", "eve_mode"),
                      ("socp_depth", "socp_depth")):
        value = getattr(args, attr, None)
        if value is not None:
            ov[key] = value
    return ov


def _load_config(path: str) -> dict:
    with open(path) as fh:
        return parse_config_text(fh.read())


def _cmd_run(args) -> int:
    overrides = {}
    if args.config:
        cfg = _load_config(args.config)
        spec = spec_from_config(cfg) if "experiment" in cfg else None
        overrides.update(spec.overrides if spec else
                         {k: v for k, v in cfg.items() if k not in ("experiment",)})
    overrides.update(_overrides_from_args(args))
    instance = make_instance(args.seed, overrides)
    config = make_driver_config(args.scheme, overrides)
    res = alternate(instance, config)
    print(f"scheme          {res.scheme}")
    print(f"status          {res.status.value}")
    print(f"outer iters     {res.outer_iters}   (solver calls {res.solver_calls})")
    if res.see_trace:
        print("see trace       " + " ".join(f"{v:.4f}" for v in res.see_trace))
    if res.w is not None:
        print(f"SEE             {res.see_extracted:.6f} bits/J/Hz (lifted {res.see_lifted:.6f})")
        print(f"secrecy rate    {res.sr_extracted:.6f} bits/s/Hz")
        print(f"transmit power  {float(np.linalg.norm(res.w) ** 2):.6f} W of "
              f"{instance.constraints.p_max:.6f} W")
        print(f"total power     {res.p_tot:.6f} W")
        print(f"feasible        {res.feasibility.feasible}")
    if res.message:
        print(f"note            {res.message}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        trace_path = os.path.join(args.out, "run_trace.dat")
        with open(trace_path, "w") as fh:
            fh.write("# outer_round see\n")
            for j, v in enumerate(res.see_trace, 1):
                fh.write(f"{j} {v:.12g}\n")
        print(f"trace           {trace_path}")
    if res.status is RunStatus.INFEASIBLE:
        return EXIT_INFEASIBLE
    if res.status is RunStatus.SOLVER_FAILURE:
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_sweep(args) -> int:
    if not args.config:
        print("sweep requires --config", file=sys.stderr)
        return EXIT_CONFIG
    cfg = _load_config(args.config)
    spec = spec_from_config(cfg)
    overrides = dict(spec.overrides)
    overrides.update(_overrides_from_args(args))
    updates = {"overrides": overrides}
    if args.seeds is not None:
        updates["seeds"] = args.seeds
    if args.seed != 1 or "seed" not in cfg:
        updates["base_seed"] = args.seed if args.seed != 1 else spec.base_seed
    spec = ExperimentSpec(kind=spec.kind, sweep_param=spec.sweep_param,
                          sweep_values=spec.sweep_values,
                          seeds=updates.get("seeds", spec.seeds),
                          base_seed=updates.get("base_seed", spec.base_seed),
                          schemes=spec.schemes, overrides=overrides,
                          record_timing=spec.record_timing)
    out = args.out or "."
    rows, aggs = monte_carlo(spec, out_dir=out)
    n_fail = sum(1 for r in rows if r.status == RunStatus.SOLVER_FAILURE.value)
    print(f"{len(rows)} rows -> {out}/{spec.kind}_rows.csv ({n_fail} solver failures)")
    for a in aggs:
        print(f"  {a.scheme:9s} {a.sweep_param}={a.sweep_value}: "
              f"SEE {a.see_mean:.4f} +/- {a.see_stderr:.4f}  feas {a.feas_rate:.2f}")
    return EXIT_OK


def _cmd_oracle_check(args) -> int:
    overrides = default_overrides()
    overrides.update({"L": 2, "N": 2, "K": 2})
    overrides.update(_overrides_from_args(args))
    if overrides["L"] > 3 or overrides["N"] > 2:
        print("oracle-check requires L <= 3 and N <= 2", file=sys.stderr)
        return EXIT_CONFIG
    ocfg = OracleConfig(phase_levels=args.phase_levels)
    hits = 0
    for i in range(args.seeds):
        seed = args.seed ^ i
        instance = make_instance(seed, overrides)
        res = alternate(instance, make_driver_config(args.scheme, overrides))
        try:
            oracle = brute_force_oracle(instance, ocfg)
        except Infeasible:
            print(f"seed {seed}: oracle infeasible, skipped")
            continue
        ok = res.converged and res.see_extracted >= oracle.see * 0.98
        hits += ok
        print(f"seed {seed}: optimizer {res.see_extracted:.4f}  oracle {oracle.see:.4f}  "
              f"{'ok' if ok else 'BELOW'}")
    print(f"{hits}/{args.seeds} within 2% of the oracle")
    return EXIT_OK


def _cmd_dump_channels(args) -> int:
    if not args.out:
        print("dump-channels requires --out <file>", file=sys.stderr)
        return EXIT_CONFIG
    overrides = default_overrides()
    overrides.update(_overrides_from_args(args))
    geometry = ScenarioGeometry(N=int(overrides["N"]), L=int(overrides["L"]),
                                K=int(overrides["K"]), irs_x=float(overrides["x_irs"]))
    sigma2 = dbm_to_watt(float(overrides["sigma2_dbm"]))
    params = ChannelParams(sigma2_su=sigma2, sigma2_eve=sigma2)
    raw = generate_raw_channels(geometry, params, np.random.default_rng(args.seed))
    dump_channels(raw, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, matching the config-error code
        return int(exc.code or 0)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "oracle-check":
            return _cmd_oracle_check(args)
        if args.command == "dump-channels":
            return _cmd_dump_channels(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_CONFIG


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
