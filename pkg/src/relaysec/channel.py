"""Channel realizations: data model, seeded sampling, first-hop rate, file I/O.

Vector convention: ``h`` and ``z`` hold the *conjugated* relay-to-receiver
coefficients, so the destination sees ``h^H w`` and the eavesdropper
``z^H w`` for relay weights ``w``. ``g`` holds the plain source-to-relay
coefficients. All gains are circularly symmetric, so sampling is unaffected
by this choice.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .numerics import as_vector


@dataclass(frozen=True)
class ChannelStatistics:
    sigma_g: float = 1.0
    sigma_h: float = 1.0
    sigma_z: float = 1.0

    def __post_init__(self):
        for name in ("sigma_g", "sigma_h", "sigma_z"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"{name} must be a nonnegative finite real, got {v}")


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    g: np.ndarray
    h: np.ndarray
    z: np.ndarray
    Nm: np.ndarray
    N0: float

    def __post_init__(self):
        g = as_vector(self.g, "g")
        h = as_vector(self.h, "h")
        z = as_vector(self.z, "z")
        M = g.size
        if h.size != M or z.size != M:
            raise ValidationError(f"g, h, z must share length M; got {g.size}, {h.size}, {z.size}")
        Nm = np.asarray(self.Nm, dtype=float)
        if Nm.ndim == 0:
            Nm = np.full(M, float(Nm))
        if Nm.shape != (M,):
            raise ValidationError(f"Nm must be a scalar or have length {M}, got shape {Nm.shape}")
        if np.any(~np.isfinite(Nm)) or np.any(Nm <= 0):
            raise ValidationError("all Nm must be positive")
        N0 = float(self.N0)
        if not (math.isfinite(N0) and N0 > 0):
            raise ValidationError("N0 must be positive")
        for name, v in (("g", g), ("h", h), ("z", z), ("Nm", Nm)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        object.__setattr__(self, "N0", N0)

    @property
    def M(self) -> int:
        return self.g.size

    def __eq__(self, other):
        if not isinstance(other, ChannelRealization):
            return NotImplemented
        return (
            self.N0 == other.N0
            and np.array_equal(self.g, other.g)
            and np.array_equal(self.h, other.h)
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.Nm, other.Nm)
        )

    def subset(self, M: int) -> "ChannelRealization":
        """The first ``M`` relays of this realization."""
        if not 1 <= M <= self.M:
            raise ValidationError(f"subset size must be in [1, {self.M}], got {M}")
        return ChannelRealization(self.g[:M], self.h[:M], self.z[:M], self.Nm[:M], self.N0)


class PowerKind(str, enum.Enum):
    TOTAL = "Total"
    INDIVIDUAL = "Individual"
    BOTH = "Both"


@dataclass(frozen=True, eq=False)
class PowerConstraint:
    kind: PowerKind
    P_T: float | None = None
    p: np.ndarray | None = None

    def __post_init__(self):
        kind = PowerKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in (PowerKind.TOTAL, PowerKind.BOTH):
            if self.P_T is None or not (math.isfinite(self.P_T) and self.P_T > 0):
                raise ValidationError(f"{kind.value} constraint needs a positive P_T")
            object.__setattr__(self, "P_T", float(self.P_T))
        else:
            object.__setattr__(self, "P_T", None)
        if kind in (PowerKind.INDIVIDUAL, PowerKind.BOTH):
            if self.p is None:
                raise ValidationError(f"{kind.value} constraint needs per-relay powers p")
            p = np.asarray(self.p, dtype=float).reshape(-1)
            if p.size == 0 or np.any(~np.isfinite(p)) or np.any(p <= 0):
                raise ValidationError("per-relay powers p must be positive")
            p.setflags(write=False)
            object.__setattr__(self, "p", p)
        else:
            object.__setattr__(self, "p", None)

    @classmethod
    def total(cls, P_T: float) -> "PowerConstraint":
        return cls(PowerKind.TOTAL, P_T=P_T)

    @classmethod
    def individual(cls, p) -> "PowerConstraint":
        return cls(PowerKind.INDIVIDUAL, p=p)

    @classmethod
    def both(cls, P_T: float, p) -> "PowerConstraint":
        return cls(PowerKind.BOTH, P_T=P_T, p=p)

    @property
    def has_total(self) -> bool:
        return self.P_T is not None

    @property
    def has_individual(self) -> bool:
        return self.p is not None

    def effective_power(self) -> float:
        """Largest ``||w||^2`` any feasible ``w`` can reach."""
        cands = []
        if self.P_T is not None:
            cands.append(self.P_T)
        if self.p is not None:
            cands.append(float(np.sum(self.p)))
        return min(cands)

    def check_dim(self, M: int) -> None:
        if self.p is not None and self.p.size != M:
            raise ValidationError(f"p has {self.p.size} entries but there are {M} relays")

    def is_satisfied(self, w: np.ndarray, rtol: float = 1e-8) -> bool:
        pw = np.abs(np.asarray(w)) ** 2
        if self.P_T is not None and pw.sum() > self.P_T * (1 + rtol):
            return False
        if self.p is not None and np.any(pw > self.p * (1 + rtol)):
            return False
        return True


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Independent Philox stream for ``(seed, *stream)``; stable across runs and platforms."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *[int(s) for s in stream]])
    return np.random.Generator(np.random.Philox(ss))


def complex_gaussian(rng: np.random.Generator, sigma: float, size) -> np.ndarray:
    """Circularly symmetric complex Gaussian with ``E|x|^2 = sigma^2``."""
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return sigma * (re + 1j * im) / math.sqrt(2.0)


def sample_channel(
    M: int,
    stats: ChannelStatistics,
    Nm=1.0,
    N0: float = 1.0,
    seed: int = 0,
    stream: int = 0,
) -> ChannelRealization:
    """Draw one realization; identical arguments give bit-identical output."""
    if int(M) != M or M < 1:
        raise ValidationError(f"M must be a positive integer, got {M}")
    Nm_arr = np.asarray(Nm, dtype=float)
    if np.any(Nm_arr <= 0) or not float(N0) > 0:
        raise ValidationError("noise variances must be positive")
    rng = rng_for(seed, stream)
    g = complex_gaussian(rng, stats.sigma_g, M)
    h = complex_gaussian(rng, stats.sigma_h, M)
    z = complex_gaussian(rng, stats.sigma_z, M)
    return ChannelRealization(g, h, z, Nm_arr, float(N0))


def first_hop_rate(ch: ChannelRealization, Ps: float) -> float:
    """Rate all relays can decode: ``min_m log2(1 + |g_m|^2 Ps / N_m)``."""
    if not Ps > 0:
        raise ValidationError("Ps must be positive")
    return float(np.min(np.log2(1.0 + np.abs(ch.g) ** 2 * Ps / ch.Nm)))


# ------------------------------------------------------------------ file format

_FIELDS = ("M", "g", "h", "z", "Nm", "N0")


def channel_to_dict(ch: ChannelRealization) -> dict:
    def pairs(v):
        return [[float(x.real), float(x.imag)] for x in v]

    return {
        "M": ch.M,
        "g": pairs(ch.g),
        "h": pairs(ch.h),
        "z": pairs(ch.z),
        "Nm": [float(x) for x in ch.Nm],
        "N0": ch.N0,
    }


def channel_from_dict(doc) -> ChannelRealization:
    if not isinstance(doc, dict):
        raise ParseError("channel document must be a JSON object")
    for name in _FIELDS:
        if name not in doc:
            raise ParseError(f"channel file is missing field '{name}'", field=name)

    def complex_list(name):
        raw = doc[name]
        if not isinstance(raw, list):
            raise ParseError(f"field '{name}' must be a list of [re, im] pairs", field=name)
        out = []
        for i, pair in enumerate(raw):
            if (
                not isinstance(pair, (list, tuple))
                or len(pair) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)
            ):
                raise ParseError(f"field '{name}' entry {i} is not an [re, im] pair", field=name)
            out.append(complex(pair[0], pair[1]))
        return np.array(out, dtype=complex)

    M = doc["M"]
    if not isinstance(M, int) or isinstance(M, bool) or M < 1:
        raise ParseError("field 'M' must be a positive integer", field="M")
    g, h, z = complex_list("g"), complex_list("h"), complex_list("z")
    Nm = doc["Nm"]
    if isinstance(Nm, (int, float)) and not isinstance(Nm, bool):
        Nm = [float(Nm)] * M
    if not isinstance(Nm, list) or not all(isinstance(x, (int, float)) for x in Nm):
        raise ParseError("field 'Nm' must be a number or a list of numbers", field="Nm")
    N0 = doc["N0"]
    if not isinstance(N0, (int, float)) or isinstance(N0, bool):
        raise ParseError("field 'N0' must be a number", field="N0")
    for name, v in (("g", g), ("h", h), ("z", z), ("Nm", Nm)):
        if len(v) != M:
            raise ValidationError(f"field '{name}' has length {len(v)} but M = {M}")
    return ChannelRealization(g, h, z, np.array(Nm, dtype=float), float(N0))


def save_channel(ch: ChannelRealization, path) -> None:
    # json writes floats with repr(), the shortest exact round-trip form
    Path(path).write_text(json.dumps(channel_to_dict(ch), indent=2) + "\n")


def load_channel(path) -> ChannelRealization:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from exc
    return channel_from_dict(doc)
