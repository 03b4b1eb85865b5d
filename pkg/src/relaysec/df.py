"""Decode-and-forward relay beamforming: rate evaluation and weight designs.

All rates are in bits (base-2 logarithms) and clamped at zero: a
beamformer that favours the eavesdropper supports no secret rate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channel import ChannelRealization, first_hop_rate
from .conic import (
    EmptyProblemError,
    Objective,
    SdpProblem,
    SocpProblem,
    SolveReport,
    Status,
    bisect_max_t,
    solve_sdp,
    solve_socp,
)
from .errors import DegenerateError, SolverError, ValidationError
from .numerics import (
    as_vector,
    fix_phase,
    generalized_eig_max,
    hermitian_eig,
    null_space_projector,
    principal_rank_one,
)
from .settings import NumericSettings, resolve


class Method(str, enum.Enum):
    TOTAL_CLOSED_FORM = "TotalClosedForm"
    NULL_SPACE = "NullSpace"
    LOW_SNR_DIRECTION = "LowSnrDirection"
    INDIVIDUAL_SDR = "IndividualSdr"
    INDIVIDUAL_SOCP = "IndividualSocp"
    SUBOPTIMAL = "Suboptimal"


@dataclass
class Diagnostics:
    """Solver bookkeeping attached to a design.

    ``achieved_rate_bits`` is the rate of the returned ``w`` itself, which
    can fall below the reported rate when a relaxation is not rank one.
    """

    status: Status = Status.OPTIMAL
    t_max: float = math.nan
    rank_ratio: float = 0.0
    rank_flagged: bool = False
    achieved_rate_bits: float = math.nan
    iterations: int = 0
    feasibility_calls: int = 0
    max_violation: float = 0.0


@dataclass
class DfDesignResult:
    w: np.ndarray
    second_hop_rate_bits: float
    method: Method
    first_hop_rate_bits: float | None = None
    overall_rate_bits: float | None = None
    X: np.ndarray | None = None
    diagnostics: Diagnostics = field(default_factory=Diagnostics)


# ------------------------------------------------------------------ evaluation


def _check_pair(h, z):
    h = as_vector(h, "h")
    z = as_vector(z, "z")
    if h.size != z.size:
        raise ValidationError(f"h and z must have the same length, got {h.size} and {z.size}")
    return h, z


def _check_n0(N0):
    if not (math.isfinite(N0) and N0 > 0):
        raise ValidationError("N0 must be positive")
    return float(N0)


def _check_p(p, M):
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size != M or np.any(~np.isfinite(p)) or np.any(p <= 0):
        raise ValidationError(f"p must hold {M} positive entries")
    return p


def df_secrecy_rate(w, h, z, N0: float) -> float:
    """``max(0, log2((N0 + |h^H w|^2) / (N0 + |z^H w|^2)))``."""
    h, z = _check_pair(h, z)
    w = as_vector(w, "w")
    if w.size != h.size:
        raise ValidationError("w must have the same length as h")
    N0 = _check_n0(N0)
    num = N0 + abs(np.vdot(h, w)) ** 2
    den = N0 + abs(np.vdot(z, w)) ** 2
    return max(0.0, math.log2(num / den))


def df_secrecy_rates(W: np.ndarray, h, z, N0: float) -> np.ndarray:
    """Vectorized :func:`df_secrecy_rate` over the rows of ``W``."""
    num = N0 + np.abs(W @ np.conj(h)) ** 2
    den = N0 + np.abs(W @ np.conj(z)) ** 2
    return np.maximum(0.0, np.log2(num / den))


def df_overall_rate(ch: ChannelRealization, Ps: float, design: DfDesignResult) -> float:
    """End-to-end rate: the weaker of the decoding hop and the secure second hop."""
    return min(first_hop_rate(ch, Ps), design.second_hop_rate_bits)


def with_first_hop(design: DfDesignResult, ch: ChannelRealization, Ps: float) -> DfDesignResult:
    """Fill in the first-hop and overall rates of ``design`` for channel ``ch``."""
    design.first_hop_rate_bits = first_hop_rate(ch, Ps)
    design.overall_rate_bits = min(design.first_hop_rate_bits, design.second_hop_rate_bits)
    return design


# ------------------------------------------------------------------ total power


def df_total_power(h, z, N0: float, P_T: float) -> DfDesignResult:
    """Optimal weights under ``||w||^2 <= P_T``: the top generalized eigenvector of
    ``(N0 I + P_T h h^H, N0 I + P_T z z^H)`` scaled to full power.

    When the top eigenvalue is at most 1 the direction is still returned, with rate 0.
    """
    h, z = _check_pair(h, z)
    N0 = _check_n0(N0)
    if not (math.isfinite(P_T) and P_T > 0):
        raise ValidationError("P_T must be positive")
    M = h.size
    eye = np.eye(M)
    A = N0 * eye + P_T * np.outer(h, h.conj())
    B = N0 * eye + P_T * np.outer(z, z.conj())
    lam, u = generalized_eig_max(A, B)
    w = math.sqrt(P_T) * u
    rate = df_secrecy_rate(w, h, z, N0)
    diag = Diagnostics(t_max=lam, achieved_rate_bits=rate)
    return DfDesignResult(w, rate, Method.TOTAL_CLOSED_FORM, diagnostics=diag)


def df_null_space(h, z, P_T: float, N0: float = 1.0) -> DfDesignResult:
    """Full-power weights in the null space of ``z^H`` (eavesdropper receives nothing)."""
    h, z = _check_pair(h, z)
    N0 = _check_n0(N0)
    if not (math.isfinite(P_T) and P_T > 0):
        raise ValidationError("P_T must be positive")
    C = null_space_projector(z)
    proj = C.conj().T @ h
    gain = float(np.vdot(proj, proj).real)
    if gain <= (1e-12 * np.linalg.norm(h)) ** 2:
        raise DegenerateError("h lies along z; its projection onto the null space of z is zero")
    v = C @ proj
    w = fix_phase(math.sqrt(P_T) * v / np.linalg.norm(v))
    rate = math.log2(1.0 + P_T / N0 * gain)
    diag = Diagnostics(achieved_rate_bits=df_secrecy_rate(w, h, z, N0))
    return DfDesignResult(w, rate, Method.NULL_SPACE, diagnostics=diag)


def df_low_snr_direction(h, z) -> np.ndarray:
    """Unit top eigenvector of ``h h^H - z z^H``, the optimal direction as power vanishes."""
    h, z = _check_pair(h, z)
    return hermitian_eig(np.outer(h, h.conj()) - np.outer(z, z.conj()))[0].vector


def low_snr_slope(h, z) -> float:
    """``lambda_max(h h^H - z z^H)``, the limit of ``rate * ln 2 / P_T`` as ``P_T -> 0``."""
    h, z = _check_pair(h, z)
    return hermitian_eig(np.outer(h, h.conj()) - np.outer(z, z.conj()))[0].value


# ------------------------------------------------------------------ level search


@dataclass
class LevelSearch:
    """Outcome of a bisection over ``t`` followed by a final solve at ``t_max``."""

    t_max: float
    final: SolveReport
    calls: int
    iterations: int


def level_search(
    solve_at: Callable[[float, Objective], SolveReport],
    hi: float,
    final_objective: Objective,
    tol: float,
    certify: Callable[[SolveReport], float] | None = None,
) -> LevelSearch:
    """Bisect ``t`` over ``[1, hi]`` with ``solve_at(t, FEASIBILITY)`` then re-solve at ``t_max``.

    ``t = 1`` is always feasible (``X = 0`` or ``w = 0``), so the floor never
    fails for the secrecy problems built here. ``certify`` maps a feasible
    report to the level its witness actually attains, letting the floor
    jump past the tested ``t``. A numerical failure anywhere raises
    :class:`SolverError`.
    """
    calls = 0
    iters = 0

    def feasible(t: float) -> bool:
        nonlocal calls, iters
        rep = solve_at(t, Objective.FEASIBILITY)
        calls += 1
        iters += rep.iterations
        if rep.status is Status.NUMERICAL_FAILURE:
            raise SolverError(f"feasibility solve failed at t={t}", report=rep)
        if rep.ok and certify is not None and rep.max_violation <= 0.5 * resolve(None).feasibility_tol:
            return True, certify(rep)
        return rep.ok

    try:
        t_max = bisect_max_t(feasible, 1.0, max(1.0, hi), tol)
    except EmptyProblemError as exc:
        raise SolverError(f"t = 1 reported infeasible: {exc}") from exc
    final = solve_at(t_max, final_objective)
    iters += final.iterations
    if not final.ok:
        raise SolverError(f"final solve at t={t_max} returned {final.status.value}", report=final)
    return LevelSearch(t_max, final, calls, iters)


def rate_upper_level(N0: float, power: float, gain: float) -> float:
    """Matched-filter cap ``(N0 + power * gain) / N0`` on the achievable ratio."""
    return (N0 + power * gain) / N0


def _tr(A: np.ndarray, X: np.ndarray) -> float:
    return float(np.real(np.sum(A * X.T)))


def _cap_to_bounds(w: np.ndarray, p: np.ndarray | None, P_T: float | None) -> np.ndarray:
    # eigenvector extraction can overshoot a bound by roundoff; shrink uniformly
    scale = 1.0
    pw = np.abs(w) ** 2
    if p is not None:
        over = pw > p
        if np.any(over):
            scale = min(scale, float(np.min(np.sqrt(p[over] / pw[over]))))
    if P_T is not None and pw.sum() > P_T:
        scale = min(scale, math.sqrt(P_T / pw.sum()))
    return w * scale


def sdr_design(
    H: np.ndarray,
    Zt: Callable[[float], tuple],
    hi: float,
    p: np.ndarray | None,
    P_T: float | None,
    settings: NumericSettings | None = None,
    tol: float | None = None,
    certify: Callable[[np.ndarray], float] | None = None,
):
    """Shared SDR search: ``Zt(t)`` returns the ``(trace, norm)`` constraint lists at level ``t``.

    ``certify(X)`` optionally returns the level a feasible ``X`` attains.
    """
    s = resolve(settings)
    tol = s.bisection_tol if tol is None else tol
    M = H.shape[0]

    def solve_at(t, objective):
        trace_cons, norm_cons = Zt(t)
        prob = SdpProblem(
            M, trace_constraints=trace_cons, norm_constraints=norm_cons,
            diag_bounds=p, trace_bound=P_T, objective=objective,
        )
        return solve_sdp(prob, s)

    cert = None if certify is None else (lambda rep: certify(rep.X))
    search = level_search(solve_at, hi, Objective.MIN_TRACE, tol, cert)
    X = search.final.X
    w, ratio = principal_rank_one(X, s)
    w = _cap_to_bounds(w, p, P_T)
    return search, X, w, ratio


# ------------------------------------------------------------------ individual power


def df_individual_sdr(
    h, z, N0: float, p, P_T: float | None = None,
    settings: NumericSettings | None = None, tol: float | None = None,
) -> DfDesignResult:
    """Per-relay power design by semidefinite relaxation.

    Bisects ``t`` over ``tr(X (h h^H - t z z^H)) >= N0 (t - 1)`` with
    ``diag(X) <= p`` (and ``tr(X) <= P_T`` when given), then extracts ``w``
    from the min-trace solution at ``t_max``. The reported rate is
    ``log2(t_max)``; the extracted weights' own rate is in the diagnostics.
    """
    h, z = _check_pair(h, z)
    N0 = _check_n0(N0)
    p = _check_p(p, h.size)
    s = resolve(settings)
    H = np.outer(h, h.conj())
    Z = np.outer(z, z.conj())
    power = float(p.sum()) if P_T is None else min(float(p.sum()), P_T)
    hi = rate_upper_level(N0, power, float(np.vdot(h, h).real))

    def cons(t):
        return [(H - t * Z, N0 * (t - 1.0))], []

    def level(X):
        return (N0 + _tr(H, X)) / (N0 + _tr(Z, X))

    search, X, w, ratio = sdr_design(H, cons, hi, p, P_T, s, tol, level)
    achieved = df_secrecy_rate(w, h, z, N0)
    diag = Diagnostics(
        status=search.final.status, t_max=search.t_max, rank_ratio=ratio,
        rank_flagged=ratio > s.rank_ratio_flag, achieved_rate_bits=achieved,
        iterations=search.iterations, feasibility_calls=search.calls,
        max_violation=search.final.max_violation,
    )
    rate = max(0.0, math.log2(search.t_max))
    return DfDesignResult(w, rate, Method.INDIVIDUAL_SDR, X=X, diagnostics=diag)


def df_individual_socp(
    h, z, N0: float, p, P_T: float | None = None,
    settings: NumericSettings | None = None, tol: float | None = None,
) -> DfDesignResult:
    """Per-relay power design through the equivalent second-order cone program.

    Same bisection as :func:`df_individual_sdr`; the final ``w`` is the
    minimum-power point at ``t_max``.
    """
    h, z = _check_pair(h, z)
    N0 = _check_n0(N0)
    p = _check_p(p, h.size)
    s = resolve(settings)
    tol = s.bisection_tol if tol is None else tol
    power = float(p.sum()) if P_T is None else min(float(p.sum()), P_T)
    hi = rate_upper_level(N0, power, float(np.vdot(h, h).real))

    def solve_at(t, objective):
        return solve_socp(SocpProblem(h, z, N0, t, p=p, total_bound=P_T, objective=objective), s)

    def level(rep):
        return (N0 + abs(np.vdot(h, rep.w)) ** 2) / (N0 + abs(np.vdot(z, rep.w)) ** 2)

    search = level_search(solve_at, hi, Objective.MIN_POWER, tol, level)
    w = _cap_to_bounds(search.final.w, p, P_T)
    achieved = df_secrecy_rate(w, h, z, N0)
    diag = Diagnostics(
        status=search.final.status, t_max=search.t_max, achieved_rate_bits=achieved,
        iterations=search.iterations, feasibility_calls=search.calls,
        max_violation=search.final.max_violation,
    )
    rate = max(0.0, math.log2(search.t_max))
    return DfDesignResult(w, rate, Method.INDIVIDUAL_SOCP, diagnostics=diag)


def df_suboptimal(h, z, N0: float, p) -> DfDesignResult:
    """Total-power design at ``P_T = sum(p)`` shrunk until every relay fits its budget.

    The binding relay is ``argmax |w_i|^2 / p_i`` (lowest index on ties).
    """
    h, z = _check_pair(h, z)
    N0 = _check_n0(N0)
    p = _check_p(p, h.size)
    w_opt = df_total_power(h, z, N0, float(p.sum())).w
    ratios = np.abs(w_opt) ** 2 / p
    k = int(np.argmax(ratios))
    theta = math.sqrt(p[k]) / abs(w_opt[k])
    w = theta * w_opt
    # make the binding relay land exactly on its budget
    w[k] = math.sqrt(p[k]) * w[k] / abs(w[k])
    rate = df_secrecy_rate(w, h, z, N0)
    diag = Diagnostics(achieved_rate_bits=rate)
    return DfDesignResult(w, rate, Method.SUBOPTIMAL, diagnostics=diag)
