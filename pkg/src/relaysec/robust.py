"""Robust decode-and-forward designs under imperfect channel knowledge.

Only estimates ``H_hat`` and ``Z_hat`` of ``h h^H`` and ``z z^H`` are known.
Two error models are handled:

* worst case: ``||H_err|| <= eps_H`` and ``||Z_err|| <= eps_Z``, covered by
  shifting the estimates to ``H_hat - eps_H I`` and ``Z_hat + eps_Z I``;
* statistical: Gaussian Hermitian errors with entry variances ``var_H`` and
  ``var_Z``, with the secrecy constraint required to hold with probability
  at least ``epsilon``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import PowerConstraint, rng_for
from .df import Diagnostics, _cap_to_bounds, sdr_design
from .errors import DomainError, ValidationError
from .numerics import as_hermitian, inv_erf
from .settings import NumericSettings, resolve


class UncertaintyMode(str, enum.Enum):
    WORST_CASE = "WorstCase"
    STATISTICAL = "Statistical"


@dataclass(frozen=True)
class CsiUncertainty:
    mode: UncertaintyMode
    eps_H: float = 0.0
    eps_Z: float = 0.0
    var_H: float = 0.0
    var_Z: float = 0.0
    epsilon: float | None = None

    def __post_init__(self):
        mode = UncertaintyMode(self.mode)
        object.__setattr__(self, "mode", mode)
        for name in ("eps_H", "eps_Z", "var_H", "var_Z"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"{name} must be a nonnegative finite real")
        if mode is UncertaintyMode.STATISTICAL:
            if self.epsilon is None or not 0.0 < self.epsilon < 1.0:
                raise ValidationError("statistical mode needs epsilon in (0, 1)")

    @classmethod
    def worst_case(cls, eps_H: float, eps_Z: float) -> "CsiUncertainty":
        return cls(UncertaintyMode.WORST_CASE, eps_H=eps_H, eps_Z=eps_Z)

    @classmethod
    def statistical(cls, var_H: float, var_Z: float, epsilon: float) -> "CsiUncertainty":
        return cls(UncertaintyMode.STATISTICAL, var_H=var_H, var_Z=var_Z, epsilon=epsilon)


@dataclass
class RobustDesignResult:
    X: np.ndarray
    w: np.ndarray
    t_max: float
    rate_bits: float
    mode: UncertaintyMode
    diagnostics: Diagnostics = field(default_factory=Diagnostics)
    # margin of the robust secrecy constraint for X at t_max (never negative)
    constraint_slack: float | None = None
    empirical_nonoutage: float | None = None


def _inputs(H_hat, Z_hat, N0, constraint: PowerConstraint):
    H = as_hermitian(H_hat, "H_hat")
    Z = as_hermitian(Z_hat, "Z_hat")
    if H.shape != Z.shape:
        raise ValidationError("H_hat and Z_hat must have the same shape")
    if not (math.isfinite(N0) and N0 > 0):
        raise ValidationError("N0 must be positive")
    constraint.check_dim(H.shape[0])
    return H, Z, float(N0)


def _level_cap(H: np.ndarray, Z: np.ndarray, N0: float, power: float) -> float:
    """Upper bound on ``t`` from ``t (N0 + tr(Z X)) <= N0 + tr(H X)`` with ``tr X <= power``."""
    top = max(0.0, float(np.linalg.eigvalsh(H)[-1]))
    low = min(0.0, float(np.linalg.eigvalsh(Z)[0]))
    den = N0 + low * power
    if den <= 0:
        raise DomainError("Z_hat is too indefinite for the power budget: the secrecy ratio is unbounded")
    return (N0 + top * power) / den


def _tr(A: np.ndarray, X: np.ndarray) -> float:
    return float(np.real(np.sum(A * X.T)))


def _witnessed_level(margin, X: np.ndarray, t_hi: float) -> float:
    """Largest ``t <= t_hi`` with ``margin(t, X) >= 0``.

    The margin is strictly decreasing in ``t``, so the level the returned
    ``X`` supports exactly is found by a scalar bisection. This removes the
    solver's feasibility tolerance from the reported ``t_max``.
    """
    if margin(t_hi, X) >= 0 or margin(1.0, X) < 0:
        return t_hi if margin(t_hi, X) >= 0 else 1.0
    lo, hi = 1.0, t_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if margin(mid, X) >= 0:
            lo = mid
        else:
            hi = mid
    return lo


def _finish(search, X, w, ratio, H_nom, Z_nom, N0, mode, s, constraint, margin):
    t_max = _witnessed_level(margin, X, search.t_max)
    w = _cap_to_bounds(w, constraint.p, constraint.P_T)
    nominal = (N0 + float(np.real(np.vdot(w, H_nom @ w)))) / (N0 + float(np.real(np.vdot(w, Z_nom @ w))))
    diag = Diagnostics(
        status=search.final.status, t_max=t_max, rank_ratio=ratio,
        rank_flagged=ratio > s.rank_ratio_flag,
        achieved_rate_bits=max(0.0, math.log2(nominal)),
        iterations=search.iterations, feasibility_calls=search.calls,
        max_violation=search.final.max_violation,
    )
    res = RobustDesignResult(X, w, t_max, max(0.0, math.log2(t_max)), mode, diag)
    res.constraint_slack = margin(t_max, X)
    return res


def robust_worst_case(
    H_hat, Z_hat, unc: CsiUncertainty, N0: float, constraint: PowerConstraint,
    settings: NumericSettings | None = None, tol: float | None = None,
) -> RobustDesignResult:
    """Bisection over ``tr(X((H_hat - eps_H I) - t (Z_hat + eps_Z I))) >= N0 (t - 1)``.

    Too much uncertainty simply yields ``t_max = 1`` (rate 0).
    ``diagnostics.achieved_rate_bits`` is the extracted ``w``'s rate on the
    nominal estimates.
    """
    if unc.mode is not UncertaintyMode.WORST_CASE:
        raise ValidationError("robust_worst_case needs a WorstCase uncertainty")
    H, Z, N0 = _inputs(H_hat, Z_hat, N0, constraint)
    s = resolve(settings)
    eye = np.eye(H.shape[0])
    Hs = H - unc.eps_H * eye
    Zs = Z + unc.eps_Z * eye
    hi = _level_cap(Hs, Zs, N0, constraint.effective_power())

    def cons(t):
        return [(Hs - t * Zs, N0 * (t - 1.0))], []

    def level(X):
        den = N0 + _tr(Zs, X)
        return (N0 + _tr(Hs, X)) / den if den > 0 else 1.0

    def margin(t, X):
        return _tr(Hs - t * Zs, X) - N0 * (t - 1.0)

    search, X, w, ratio = sdr_design(Hs, cons, hi, constraint.p, constraint.P_T, s, tol, level)
    return _finish(search, X, w, ratio, H, Z, N0, UncertaintyMode.WORST_CASE, s, constraint, margin)


def outage_kappa(t: float, var_H: float, var_Z: float, epsilon: float) -> float:
    """Coefficient of ``||X||_F`` in the non-outage constraint at level ``t``."""
    if not epsilon > 0.5:
        raise DomainError("epsilon must exceed 0.5 (the constraint needs a negative inverse-erf term)")
    return math.sqrt(2.0 * (var_H + t * t * var_Z)) * abs(inv_erf(1.0 - 2.0 * epsilon))


def robust_statistical(
    H_hat, Z_hat, unc: CsiUncertainty, N0: float, constraint: PowerConstraint,
    settings: NumericSettings | None = None, tol: float | None = None,
    validate_trials: int | None = None, validate_seed: int = 0,
) -> RobustDesignResult:
    """Chance-constrained design: the secrecy constraint holds with probability ``>= epsilon``.

    With Gaussian errors ``y = tr((H - t Z) X)`` is Gaussian with mean
    ``tr((H_hat - t Z_hat) X)`` and standard deviation
    ``sqrt(var_H + t^2 var_Z) ||X||_F``, so ``Pr(y >= (t-1) N0) >= epsilon``
    becomes the second-order cone constraint
    ``kappa(t) ||X||_F <= tr((H_hat - t Z_hat) X) - (t-1) N0``.
    ``validate_trials`` optionally attaches a Monte Carlo non-outage estimate.
    """
    if unc.mode is not UncertaintyMode.STATISTICAL:
        raise ValidationError("robust_statistical needs a Statistical uncertainty")
    H, Z, N0 = _inputs(H_hat, Z_hat, N0, constraint)
    if not unc.epsilon > 0.5:
        raise DomainError("epsilon must exceed 0.5 (the constraint needs a negative inverse-erf term)")
    s = resolve(settings)
    hi = _level_cap(H, Z, N0, constraint.effective_power())

    def cons(t):
        kappa = outage_kappa(t, unc.var_H, unc.var_Z, unc.epsilon)
        return [], [(H - t * Z, N0 * (t - 1.0), kappa)]

    def margin(t, X):
        kappa = outage_kappa(t, unc.var_H, unc.var_Z, unc.epsilon)
        return _tr(H - t * Z, X) - (t - 1.0) * N0 - kappa * float(np.linalg.norm(X))

    search, X, w, ratio = sdr_design(H, cons, hi, constraint.p, constraint.P_T, s, tol)
    res = _finish(search, X, w, ratio, H, Z, N0, UncertaintyMode.STATISTICAL, s, constraint, margin)
    if validate_trials:
        res.empirical_nonoutage = validate_nonoutage(
            X, res.t_max, H, Z, unc.var_H, unc.var_Z, N0, validate_trials, validate_seed)
    return res


# ------------------------------------------------------------------ Monte Carlo check

_CHUNK = 10_000


def hermitian_perturbations(rng: np.random.Generator, var: float, M: int, n: int) -> np.ndarray:
    """``n`` Hermitian ``M x M`` errors with ``Var(tr(E X)) = var * ||X||_F^2``.

    Diagonal entries are real with variance ``var``; upper off-diagonal
    entries have independent real and imaginary parts of variance ``var/2``
    and are mirrored conjugately.
    """
    sd = math.sqrt(var)
    E = np.zeros((n, M, M), dtype=complex)
    idx = np.arange(M)
    E[:, idx, idx] = sd * rng.standard_normal((n, M))
    iu = np.triu_indices(M, 1)
    k = iu[0].size
    if k:
        off = sd / math.sqrt(2.0) * (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k)))
        E[:, iu[0], iu[1]] = off
        E[:, iu[1], iu[0]] = off.conj()
    return E


def validate_nonoutage(
    X, t: float, H_hat, Z_hat, var_H: float, var_Z: float, N0: float,
    trials: int = 100_000, seed: int = 0,
) -> float:
    """Fraction of sampled error pairs for which ``tr((H - t Z) X) >= (t-1) N0`` holds.

    Trials are drawn in fixed chunks, each from its own substream of
    ``seed``, so the estimate does not depend on how the work is split.
    """
    X = as_hermitian(X, "X")
    H = as_hermitian(H_hat, "H_hat")
    Z = as_hermitian(Z_hat, "Z_hat")
    if int(trials) != trials or trials < 1:
        raise ValidationError("trials must be a positive integer")
    if var_H < 0 or var_Z < 0:
        raise ValidationError("variances must be nonnegative")
    M = X.shape[0]
    mean = _tr(H - t * Z, X)
    rhs = (t - 1.0) * N0
    XT = X.T
    hits = 0
    for c, start in enumerate(range(0, trials, _CHUNK)):
        n = min(_CHUNK, trials - start)
        rng = rng_for(seed, c)
        Eh = hermitian_perturbations(rng, var_H, M, n)
        Ez = hermitian_perturbations(rng, var_Z, M, n)
        dev = np.real(np.einsum("kij,ij->k", Eh - t * Ez, XT))
        hits += int(np.count_nonzero(mean + dev >= rhs))
    return hits / trials
