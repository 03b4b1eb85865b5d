from .bisection import EmptyProblemError, bisect_max_t
from .ipm import ConeDims, ConeResult, conelp
from .problems import (
    Objective,
    SdpProblem,
    SocpProblem,
    SolveReport,
    Status,
    sdp_violation,
    socp_violation,
    solve_sdp,
    solve_socp,
)

__all__ = [
    "ConeDims",
    "ConeResult",
    "EmptyProblemError",
    "Objective",
    "SdpProblem",
    "SocpProblem",
    "SolveReport",
    "Status",
    "bisect_max_t",
    "conelp",
    "sdp_violation",
    "socp_violation",
    "solve_sdp",
    "solve_socp",
]
