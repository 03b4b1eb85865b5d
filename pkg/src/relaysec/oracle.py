"""Brute-force random search over feasible beamformers, used to cross-check the designs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .af import AfChannelData, af_secrecy_rates
from .channel import PowerConstraint, rng_for
from .df import df_secrecy_rates
from .errors import ValidationError
from .numerics import as_vector

_CHUNK = 1 << 16


@dataclass
class OracleResult:
    rate_bits: float
    w: np.ndarray
    samples: int


def _phases(rng: np.random.Generator, n: int, M: int) -> np.ndarray:
    return np.exp(2j * np.pi * rng.random((n, M)))


def _split(n: int, parts: int) -> list[int]:
    base = [n // parts] * parts
    base[0] += n - sum(base)
    return base


def _total_batch(rng, n, M, P_T, interior: bool) -> np.ndarray:
    W = rng.standard_normal((n, M)) + 1j * rng.standard_normal((n, M))
    norms = np.linalg.norm(W, axis=1)
    norms[norms == 0] = 1.0
    W *= (np.sqrt(P_T) / norms)[:, None]
    if interior:
        n_u = n_l = n // 4
        n_b = n - n_u - n_l
        # half the rows stay on the boundary; the rest get a uniform or log-uniform power fraction
        frac = np.ones(n)
        frac[n_b:n_b + n_u] = rng.random(n_u)
        frac[n_b + n_u:] = 10.0 ** rng.uniform(-6.0, 0.0, n_l)
        W *= np.sqrt(frac)[:, None]
    return W


def _individual_batch(rng, n, M, p, P_T, interior: bool) -> np.ndarray:
    n_u, n_s = _split(n, 2)
    power = np.empty((n, M))
    power[:n_u] = rng.random((n_u, M)) * p
    power[n_u:] = p
    if interior and n_s > 1:
        # a common log-uniform backoff on part of the saturated rows
        k = n_s // 2
        power[n_u:n_u + k] *= 10.0 ** rng.uniform(-6.0, 0.0, (k, 1))
    W = np.sqrt(power) * _phases(rng, n, M)
    if P_T is not None:
        tot = power.sum(axis=1)
        scale = np.where(tot > P_T, np.sqrt(P_T / np.where(tot > 0, tot, 1.0)), 1.0)
        W *= scale[:, None]
    return W


def random_search_oracle(
    target, constraint: PowerConstraint, samples: int, seed: int = 0, N0: float = 1.0,
) -> OracleResult:
    """Best secrecy rate over ``samples`` random feasible beamformers.

    ``target`` is either an ``(h, z)`` pair (decode-and-forward, noise ``N0``)
    or an :class:`AfChannelData` (amplify-and-forward, which carries its own
    noise level). Under a total budget directions are uniform and the power
    sits on the boundary; amplify-and-forward also samples interior powers
    because its rate is not monotone in the scale of ``w``. Under per-relay
    budgets each ``|w_m|^2`` is uniform on ``[0, p_m]``, plus a batch
    saturated at ``p_m``; with both budgets rows are scaled down to fit.
    Deterministic given ``seed``.
    """
    if int(samples) != samples or samples < 1:
        raise ValidationError("samples must be a positive integer")
    samples = int(samples)
    if isinstance(target, AfChannelData):
        M = target.M
        is_af = True
        evaluate = lambda W: af_secrecy_rates(W, target)
    else:
        try:
            h, z = target
        except (TypeError, ValueError):
            raise ValidationError("target must be an (h, z) pair or AfChannelData") from None
        h = as_vector(h, "h")
        z = as_vector(z, "z")
        if h.size != z.size:
            raise ValidationError("h and z must have the same length")
        if not N0 > 0:
            raise ValidationError("N0 must be positive")
        M = h.size
        is_af = False
        evaluate = lambda W: df_secrecy_rates(W, h, z, N0)
    constraint.check_dim(M)

    best_rate, best_w = -np.inf, None
    for c, start in enumerate(range(0, samples, _CHUNK)):
        n = min(_CHUNK, samples - start)
        rng = rng_for(seed, c)
        if constraint.has_individual:
            W = _individual_batch(rng, n, M, constraint.p, constraint.P_T, is_af)
        else:
            W = _total_batch(rng, n, M, constraint.P_T, is_af)
        rates = evaluate(W)
        k = int(np.argmax(rates))
        if rates[k] > best_rate:
            best_rate, best_w = float(rates[k]), W[k].copy()
    return OracleResult(best_rate, best_w, samples)
