from pshlab.invariants import InvariantEstimate, cse_estimate, lelong_estimate
from pshlab.psh import Family, Polydisc, PshExpr
from pshlab.result import TaskResult
from pshlab.runner import Report, run_scenario

__all__ = [
    "Family",
    "InvariantEstimate",
    "Polydisc",
    "PshExpr",
    "Report",
    "TaskResult",
    "cse_estimate",
    "lelong_estimate",
    "run_scenario",
]
