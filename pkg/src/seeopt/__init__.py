"""Secrecy-energy-efficient beamforming for an IRS-assisted cognitive radio
downlink: joint transmit/reflect optimization, benchmark schemes, a conic
solver layer and a Monte Carlo experiment harness."""

from .channels import (ChannelParams, CompositeChannels, RawChannels, ScenarioGeometry,
                       assemble_composite, draw_rayleigh, dump_channels,
                       generate_channels, generate_raw_channels, load_channels,
                       pathloss_gain)
from .conic import (ConeProgram, LinExpr, SolveOptions, SolveResult, SolveStatus,
                    dump_program, solve, solve_robust)
from .driver import (SCHEMES, DriverConfig, Instance, RunResult, RunStatus,
                     alternate, extract_solution, feasibility_probe, init_W,
                     run_no_irs, run_power_min, run_scheme, run_sr_max)
from .errors import Degenerate, Infeasible, SolverFailure
from .experiments import (ExperimentSpec, OracleConfig, OracleResult, RecordRow,
                          aggregate_rows, brute_force_oracle, default_overrides,
                          growth_rate, make_driver_config, make_instance, monte_carlo)
from .hermitian import (as_hermitian, eig_herm, lambda_max_with_vector,
                        principal_rank1_factor, rank1_gap, trace_inner)
from .metrics import (EVE_COOPERATIVE, EVE_NON_COOPERATIVE, ConstraintSet,
                      FeasibilityReport, LiftedSolution, NoisePowers, PowerModel,
                      VectorSolution, db_to_linear, dbm_to_watt, default_constraints,
                      feasibility_report, interference, interference_lifted,
                      lifted_trace_term, secrecy_rate, secrecy_rate_lifted, see, snr,
                      total_power)
from .reflect import (PenaltyState, ReflectConfig, ReflectProblem, ReflectResult,
                      build_penalized_sdp, init_feasible, penalty_iterate, recover_theta)
from .transmit import (DcState, TransmitConfig, TransmitProblem, build_inner_program,
                       dc_inner_loop, dinkelbach_outer, init_inner, power_min_step,
                       socp_log_blocks, socp_max_rate)

__version__ = "0.1.0"
