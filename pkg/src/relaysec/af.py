"""Amplify-and-forward relay beamforming.

The secrecy ratio ``(1 + SNR_d) / (1 + SNR_e)`` factors as ``t1 * t2`` with

    t1 = (N0 + tr((D_h + Ps h_g h_g^H) X)) / (N0 + tr((D_z + Ps h_z h_z^H) X))
    t2 = (N0 + tr(D_z X)) / (N0 + tr(D_h X))

for ``X = w w^H``. Each factor alone is a generalized Rayleigh quotient
(total power) or a bisection over SDP feasibility (per-relay power). The
joint optimum comes from a grid search over ``t1`` with a bisection over
``t2`` at each grid point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .channel import ChannelRealization, PowerConstraint
from .conic import (
    EmptyProblemError,
    Objective,
    SdpProblem,
    Status,
    bisect_max_t,
    solve_sdp,
)
from .df import level_search
from .errors import SolverError, ValidationError
from .numerics import as_vector, generalized_eig_max, principal_rank_one
from .settings import NumericSettings, resolve


@dataclass(frozen=True, eq=False)
class AfChannelData:
    """Effective AF channel seen through the relays' amplification.

    ``d_h`` and ``d_z`` are the diagonals of ``D_h`` and ``D_z`` (forwarded
    relay noise at the destination and eavesdropper).
    """

    l: np.ndarray
    h_g: np.ndarray
    h_z: np.ndarray
    d_h: np.ndarray
    d_z: np.ndarray
    Ps: float
    N0: float

    @property
    def M(self) -> int:
        return self.l.size

    @property
    def D_h(self) -> np.ndarray:
        return np.diag(self.d_h).astype(complex)

    @property
    def D_z(self) -> np.ndarray:
        return np.diag(self.d_z).astype(complex)

    def t1_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """``(D_h + Ps h_g h_g^H, D_z + Ps h_z h_z^H)``."""
        A = self.D_h + self.Ps * np.outer(self.h_g, self.h_g.conj())
        B = self.D_z + self.Ps * np.outer(self.h_z, self.h_z.conj())
        return A, B


def af_precompute(ch: ChannelRealization, Ps: float) -> AfChannelData:
    """Scaling factors ``l_m = 1/sqrt(|g_m|^2 Ps + N_m)`` and the effective vectors."""
    if not (math.isfinite(Ps) and Ps > 0):
        raise ValidationError("Ps must be positive")
    l = 1.0 / np.sqrt(np.abs(ch.g) ** 2 * Ps + ch.Nm)
    # ch.h and ch.z already hold conjugated coefficients
    h_g = ch.h * np.conj(ch.g) * l
    h_z = ch.z * np.conj(ch.g) * l
    d_h = np.abs(ch.h) ** 2 * l**2 * ch.Nm
    d_z = np.abs(ch.z) ** 2 * l**2 * ch.Nm
    return AfChannelData(l, h_g, h_z, d_h, d_z, float(Ps), ch.N0)


# ------------------------------------------------------------------ evaluation


def _as_weights(w, data: AfChannelData) -> np.ndarray:
    w = as_vector(w, "w")
    if w.size != data.M:
        raise ValidationError(f"w has {w.size} entries but there are {data.M} relays")
    return w


def af_snrs(w, data: AfChannelData) -> tuple[float, float]:
    """Received SNRs ``(Gamma_d, Gamma_e)`` for relay weights ``w``."""
    w = _as_weights(w, data)
    pw = np.abs(w) ** 2
    gd = data.Ps * abs(np.vdot(data.h_g, w)) ** 2 / (pw @ data.d_h + data.N0)
    ge = data.Ps * abs(np.vdot(data.h_z, w)) ** 2 / (pw @ data.d_z + data.N0)
    return float(gd), float(ge)


def af_secrecy_rate(w, data: AfChannelData) -> float:
    gd, ge = af_snrs(w, data)
    return max(0.0, math.log2((1.0 + gd) / (1.0 + ge)))


def af_secrecy_rates(W: np.ndarray, data: AfChannelData) -> np.ndarray:
    """Vectorized :func:`af_secrecy_rate` over the rows of ``W``."""
    P = np.abs(W) ** 2
    gd = data.Ps * np.abs(W @ np.conj(data.h_g)) ** 2 / (P @ data.d_h + data.N0)
    ge = data.Ps * np.abs(W @ np.conj(data.h_z)) ** 2 / (P @ data.d_z + data.N0)
    return np.maximum(0.0, np.log2((1.0 + gd) / (1.0 + ge)))


def _tr(A: np.ndarray, X: np.ndarray) -> float:
    return float(np.real(np.sum(A * X.T)))


def af_t1(X: np.ndarray, data: AfChannelData) -> float:
    A, B = data.t1_matrices()
    return (data.N0 + _tr(A, X)) / (data.N0 + _tr(B, X))


def af_t2(X: np.ndarray, data: AfChannelData) -> float:
    dx = np.real(np.diag(X))
    return (data.N0 + dx @ data.d_z) / (data.N0 + dx @ data.d_h)


# ------------------------------------------------------------------ bounds


class AfBounds(NamedTuple):
    t1: float
    t2: float
    X1: np.ndarray
    X2: np.ndarray


def _cap_level(t: float) -> float:
    # X = 0 always gives t1 = t2 = 1, so neither maximum is below 1
    return max(1.0, t)


def af_total_bounds(data: AfChannelData, P_T: float) -> tuple[float, float, np.ndarray, np.ndarray]:
    """Largest ``t1`` and ``t2`` on the sphere ``||w||^2 = P_T`` with their maximizing ``w``.

    Returns ``(t1_u, t2_u, w1, w2)``, both witnesses at full power.
    """
    if not (math.isfinite(P_T) and P_T > 0):
        raise ValidationError("P_T must be positive")
    eye = (data.N0 / P_T) * np.eye(data.M)
    A, B = data.t1_matrices()
    t1, u1 = generalized_eig_max(A + eye, B + eye)
    t2, u2 = generalized_eig_max(data.D_z + eye, data.D_h + eye)
    s = math.sqrt(P_T)
    return t1, t2, s * u1, s * u2


def _sdp(data, trace_cons, constraint: PowerConstraint, objective, s):
    prob = SdpProblem(
        data.M, trace_constraints=trace_cons, diag_bounds=constraint.p,
        trace_bound=constraint.P_T, objective=objective,
    )
    return solve_sdp(prob, s)


def _t1_con(data, t1):
    A, B = data.t1_matrices()
    return (A - t1 * B, data.N0 * (t1 - 1.0))


def _t2_con(data, t2):
    return (data.D_z - t2 * data.D_h, data.N0 * (t2 - 1.0))


def _ball_caps(data: AfChannelData, constraint: PowerConstraint) -> tuple[float, float]:
    t1_u, t2_u, _, _ = af_total_bounds(data, constraint.effective_power())
    return _cap_level(t1_u), _cap_level(t2_u)


def af_individual_bounds(
    data: AfChannelData, p=None, constraint: PowerConstraint | None = None,
    settings: NumericSettings | None = None, tol: float | None = None,
) -> AfBounds:
    """Largest feasible ``t1`` and ``t2`` under per-relay budgets, by SDP bisection.

    Pass either ``p`` or a full ``constraint`` (which may also carry a total
    bound). The bisection ceilings are the total-power bounds at the
    effective power, which contain the per-relay feasible set.
    """
    if constraint is None:
        constraint = PowerConstraint.individual(p)
    constraint.check_dim(data.M)
    s = resolve(settings)
    tol = s.bisection_tol if tol is None else tol
    hi1, hi2 = _ball_caps(data, constraint)

    def at1(t, objective):
        return _sdp(data, [_t1_con(data, t)], constraint, objective, s)

    def at2(t, objective):
        return _sdp(data, [_t2_con(data, t)], constraint, objective, s)

    r1 = level_search(at1, hi1, Objective.MIN_TRACE, tol, lambda rep: af_t1(rep.X, data))
    r2 = level_search(at2, hi2, Objective.MIN_TRACE, tol, lambda rep: af_t2(rep.X, data))
    return AfBounds(r1.t_max, r2.t_max, r1.final.X, r2.final.X)


class AfAchievable(NamedTuple):
    rate_bits: float
    w: np.ndarray
    X: np.ndarray
    t1: float
    t2_l: float


def af_achievable(
    data: AfChannelData, constraint: PowerConstraint,
    settings: NumericSettings | None = None, tol: float | None = None,
    bounds: AfBounds | None = None,
) -> AfAchievable:
    """Rate of the design that maximizes ``t1`` alone, with its own ``t2`` evaluated.

    ``bounds`` may carry precomputed per-relay bounds to skip their bisection.
    """
    constraint.check_dim(data.M)
    if constraint.has_individual:
        b = bounds or af_individual_bounds(data, constraint=constraint, settings=settings, tol=tol)
        t1, X = b.t1, b.X1
        w, _ = principal_rank_one(X, settings)
    else:
        t1, _, w, _ = af_total_bounds(data, constraint.P_T)
        X = np.outer(w, w.conj())
    t2_l = af_t2(X, data)
    rate = max(0.0, math.log2(t1 * t2_l))
    return AfAchievable(rate, w, X, t1, t2_l)


# ------------------------------------------------------------------ 2-D search


@dataclass
class SearchStep:
    index: int
    t1: float
    t2: float | None
    product: float
    calls: int


@dataclass
class AfSearchResult:
    X: np.ndarray
    w: np.ndarray
    t1_o: float
    t2_o: float
    rate_bits: float
    status: Status = Status.OPTIMAL
    rank_ratio: float = 0.0
    rank_flagged: bool = False
    achieved_rate_bits: float = math.nan
    feasibility_calls: int = 0
    iterations: int = 0
    trace: list[SearchStep] = field(default_factory=list)


def af_optimize(
    data: AfChannelData,
    constraint: PowerConstraint,
    N: int = 200,
    tol: float | None = None,
    settings: NumericSettings | None = None,
) -> AfSearchResult:
    """Maximize ``t1 * t2`` by a descending grid over ``t1`` and bisection over ``t2``.

    Starting from the achievable pair, grid point ``t1 = i * t1_cap / N``
    (``i = N, N-1, ...``) is tried while ``t1 * t2_cap`` can still beat the
    incumbent. At each point ``t2`` is bisected on
    ``[incumbent / t1, t2_cap]``; a point whose floor is infeasible is
    skipped. ``X`` is recovered by a min-trace solve at the final pair.

    A numerical failure raises :class:`SolverError` whose ``report`` is the
    partial result (status ``NumericalFailure``) with the trace so far.
    """
    if int(N) != N or N < 10:
        raise ValidationError("N must be an integer >= 10")
    constraint.check_dim(data.M)
    s = resolve(settings)
    tol = s.bisection_tol if tol is None else tol

    if constraint.has_individual:
        b = af_individual_bounds(data, constraint=constraint, settings=s, tol=tol)
        ach = af_achievable(data, constraint, s, tol, bounds=b)
        t1_cap, t2_cap = b.t1, b.t2
    else:
        ach = af_achievable(data, constraint, s, tol)
        t1_u, t2_u, _, _ = af_total_bounds(data, constraint.P_T)
        t1_cap, t2_cap = _cap_level(t1_u), _cap_level(t2_u)

    t1_o, t2_o = ach.t1, ach.t2_l
    if t1_o * t2_o < 1.0:
        # X = 0 achieves the pair (1, 1)
        t1_o, t2_o = 1.0, 1.0
    trace = [SearchStep(N + 1, t1_o, t2_o, t1_o * t2_o, 0)]
    calls = 0
    iters = 0

    def joint(t1, t2, objective):
        return _sdp(data, [_t1_con(data, t1), _t2_con(data, t2)], constraint, objective, s)

    def partial(msg, rep=None):
        X0 = np.zeros((data.M, data.M), dtype=complex)
        res = AfSearchResult(
            X0, np.zeros(data.M, dtype=complex), t1_o, t2_o, max(0.0, math.log2(t1_o * t2_o)),
            status=Status.NUMERICAL_FAILURE, feasibility_calls=calls, iterations=iters, trace=trace,
        )
        return SolverError(msg, report=res)

    dt = t1_cap / N
    for i in range(N, 0, -1):
        t1 = i * dt
        best = t1_o * t2_o
        if t1 * t2_cap < best:
            break
        floor = best / t1
        step_calls = 0

        def feasible(t2):
            nonlocal calls, iters, step_calls
            rep = joint(t1, t2, Objective.FEASIBILITY)
            calls += 1
            step_calls += 1
            iters += rep.iterations
            if rep.status is Status.NUMERICAL_FAILURE:
                raise partial(f"joint feasibility failed at t1={t1}, t2={t2}", rep)
            if rep.ok and rep.max_violation <= 0.5 * s.feasibility_tol:
                return True, af_t2(rep.X, data)
            return rep.ok

        try:
            t2_m = bisect_max_t(feasible, floor, max(floor, t2_cap), tol)
        except EmptyProblemError:
            trace.append(SearchStep(i, t1, None, best, step_calls))
            continue
        if t1 * t2_m >= best:
            t1_o, t2_o = t1, t2_m
        trace.append(SearchStep(i, t1, t2_m, t1_o * t2_o, step_calls))

    final = joint(t1_o, t2_o, Objective.MIN_TRACE)
    iters += final.iterations
    if not final.ok:
        raise partial(f"min-trace recovery at ({t1_o}, {t2_o}) returned {final.status.value}", final)
    X = final.X
    w, ratio = principal_rank_one(X, s)
    return AfSearchResult(
        X, w, t1_o, t2_o, max(0.0, math.log2(t1_o * t2_o)),
        status=final.status, rank_ratio=ratio, rank_flagged=ratio > s.rank_ratio_flag,
        achieved_rate_bits=af_secrecy_rate(w, data), feasibility_calls=calls,
        iterations=iters, trace=trace,
    )
