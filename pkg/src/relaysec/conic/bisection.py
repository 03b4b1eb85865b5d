"""Bisection over the level ``t`` of a quasiconcave maximization."""

from __future__ import annotations

from typing import Callable, Union

from ..errors import RelaySecError, ValidationError

# A predicate may return a plain bool, or ``(feasible, t_cert)`` where
# ``t_cert >= t`` is a level its witness also satisfies.
Verdict = Union[bool, tuple[bool, float]]


class EmptyProblemError(RelaySecError):
    """The floor of the bisection interval is already infeasible."""


def _unpack(verdict: Verdict, t: float) -> tuple[bool, float]:
    if isinstance(verdict, tuple):
        ok, cert = verdict
        return bool(ok), max(t, float(cert)) if ok else t
    return bool(verdict), t


def bisect_max_t(is_feasible: Callable[[float], Verdict], lo: float, hi: float, tol: float) -> float:
    """Largest ``t`` in ``[lo, hi]`` accepted by a monotone feasibility predicate.

    Stops once the bracket is narrower than ``tol * max(1, lo)``. When the
    predicate reports a certified level for its witness, the floor jumps
    there, which only shrinks the bracket faster. The predicate is called at
    most ``ceil(log2((hi - lo) / tol)) + 2`` times.
    """
    if not hi >= lo:
        raise ValidationError(f"bisection needs hi >= lo, got [{lo}, {hi}]")
    if not tol > 0:
        raise ValidationError("tol must be positive")
    ok, cert = _unpack(is_feasible(lo), lo)
    if not ok:
        raise EmptyProblemError(f"predicate infeasible at the floor t={lo}")
    if cert >= hi:
        return hi
    lo = cert
    if hi - lo <= tol * max(1.0, lo):
        return lo
    ok, _ = _unpack(is_feasible(hi), hi)
    if ok:
        return hi
    while hi - lo > tol * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        ok, cert = _unpack(is_feasible(mid), mid)
        if ok:
            if cert >= hi:
                # the witness reaches a level already known infeasible: roundoff
                lo = mid
            else:
                lo = cert
        else:
            hi = mid
    return lo
