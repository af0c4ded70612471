"""Telemetry attribute keys, metric names and process exit codes."""

from opentelemetry.semconv.attributes.error_attributes import ERROR_TYPE as ERROR_TYPE

# --- Attribute Keys ---
LEVY_OPERATION_NAME = "levy.operation.name"
LEVY_PROCESS_CLASS = "levy.process.class"
LEVY_LADDER_PROVENANCE = "levy.ladder.provenance"
LEVY_LADDER_DELTA_H = "levy.ladder.delta_h"

# Solver results
LEVY_SOLUTION_RHO_STAR = "levy.solution.rho_star"
LEVY_SOLUTION_S = "levy.solution.s"
LEVY_SOLUTION_UPPER = "levy.solution.S"
LEVY_SOLUTION_DEGENERACY = "levy.solution.degeneracy"
LEVY_SOLUTION_ITERATIONS = "levy.solution.iterations"
LEVY_SOLUTION_SHORTCUT = "levy.solution.used_special_shortcut"

# Simulation results
LEVY_SIMULATION_J_HAT = "levy.simulation.j_hat"
LEVY_SIMULATION_SE = "levy.simulation.se"
LEVY_SIMULATION_CYCLES = "levy.simulation.cycles"
LEVY_VERIFICATION_PASSED = "levy.verification.passed"

# 𝔊 evaluation events
EVENT_BIG_G = "levy.big_g"
LEVY_EVAL_RHO = "levy.eval.rho"
LEVY_EVAL_VALUE = "levy.eval.value"

# --- Operation Names ---
OPERATION_BUILD_LADDER = "build_ladder_system"
OPERATION_SOLVE = "solve"
OPERATION_SOLVE_FIXED_RESTART = "solve_fixed_restart"
OPERATION_RUN_POLICY = "run_policy"
OPERATION_VERIFY = "verify_solution"

# --- Metric Names ---
LEVY_OPERATION_DURATION = "levy.operation.duration"
LEVY_SOLVER_ITERATIONS = "levy.solver.iterations"

# --- Histogram Bucket Boundaries ---
DURATION_BUCKETS = [
    0.001,
    0.004,
    0.016,
    0.064,
    0.256,
    1.024,
    4.096,
    16.384,
    65.536,
    262.144,
]

ITERATION_BUCKETS = [1, 2, 4, 8, 16, 32, 64, 128, 256]

# --- Exit Codes ---
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DEGENERATE = 2
