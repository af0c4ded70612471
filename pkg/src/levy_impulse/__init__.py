"""Long-term-average impulse control of Lévy processes: (s,S) solver and renewal-reward simulator.

Operations live in their modules (``levy_impulse.solver.solve``,
``levy_impulse.simulate.run_policy``, ...), where the instrumentor wraps them.
"""

from levy_impulse._instrumentor import LevyImpulseInstrumentor
from levy_impulse.config import AuditLevel, Numerics
from levy_impulse.errors import LevyImpulseError
from levy_impulse.problem import ProblemSpec, RunResult, load_spec, parse_spec
from levy_impulse.process import JumpLaw, LevyModel
from levy_impulse.simulate import Strategy
from levy_impulse.solver import Degeneracy, PolicySolution
from levy_impulse.transform import Cost, Gamma, PayoffSpec, Restart
from levy_impulse.version import __version__

__all__ = [
    "AuditLevel",
    "Cost",
    "Degeneracy",
    "Gamma",
    "JumpLaw",
    "LevyImpulseError",
    "LevyImpulseInstrumentor",
    "LevyModel",
    "Numerics",
    "PayoffSpec",
    "PolicySolution",
    "ProblemSpec",
    "Restart",
    "RunResult",
    "Strategy",
    "__version__",
    "load_spec",
    "parse_spec",
]
