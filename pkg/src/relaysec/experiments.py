"""Parameter sweeps over one fixed channel realization, written as CSV.

Every sweep draws a single realization (from a seed or a channel file) and
reuses it across the whole grid, so curves show how the designs respond to
power or relay count rather than to fading. Individual budgets are always
the equal split ``p_m = P_T / M``.

CSV columns::

    scenario, seed, M, Pt_dB, Pt, Ps, method, rate_bits, rank_ratio, status, iterations, wall_ms

Numbers carry 12 significant digits. Missing values are written as ``NA``;
``wall_ms`` is ``NA`` in reproducible mode so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .af import af_achievable, af_optimize, af_precompute
from .channel import ChannelRealization, ChannelStatistics, PowerConstraint, load_channel, sample_channel
from .conic import Status
from .df import df_individual_socp, df_individual_sdr, df_suboptimal, df_total_power
from .errors import ParseError, SolverError, ValidationError
from .robust import CsiUncertainty, robust_statistical, robust_worst_case

CSV_COLUMNS = (
    "scenario", "seed", "M", "Pt_dB", "Pt", "Ps", "method",
    "rate_bits", "rank_ratio", "status", "iterations", "wall_ms",
)


class Scenario(str, enum.Enum):
    DF_VS_PT = "DfVsPt"
    DF_VS_M = "DfVsM"
    AF_VS_PT_OVER_PS = "AfVsPtOverPs"
    ROBUST_VS_PT = "RobustVsPt"


SCENARIO_METHODS = {
    Scenario.DF_VS_PT: ("total", "sdr", "socp", "suboptimal"),
    Scenario.DF_VS_M: ("total", "sdr", "socp", "suboptimal"),
    Scenario.AF_VS_PT_OVER_PS: ("total", "total_achievable", "individual", "individual_achievable"),
    Scenario.ROBUST_VS_PT: ("nominal", "worstcase", "statistical"),
}


@dataclass(frozen=True)
class SweepSpec:
    """One sweep.

    ``grid`` holds ``P_T`` in dB for ``DfVsPt`` and ``RobustVsPt``, relay
    counts for ``DfVsM`` (at fixed ``Pt_dB``), and ``P_T / P_s`` in dB for
    ``AfVsPtOverPs`` (at fixed ``Ps``). In ``RobustVsPt`` the error
    variances are ``var_H_scale / P_T`` and ``var_Z_scale / P_T``, the
    worst-case bounds are ``eps_H_scale / sqrt(P_T)`` and
    ``eps_Z_scale / sqrt(P_T)``, and ``statistical`` expands into one
    method per entry of ``epsilons``.
    """

    scenario: Scenario
    grid: tuple
    methods: tuple
    seed: int = 0
    stats: ChannelStatistics = field(default_factory=ChannelStatistics)
    M: int = 5
    N0: float = 1.0
    Nm: float = 1.0
    Ps: float = 1.0
    Pt_dB: float = 10.0
    channel_file: str | None = None
    output: str | None = None
    N: int = 200
    epsilons: tuple = (0.9,)
    var_H_scale: float = 0.1
    var_Z_scale: float = 0.2
    eps_H_scale: float = 0.1
    eps_Z_scale: float = 0.2

    def __post_init__(self):
        try:
            scenario = Scenario(self.scenario)
        except ValueError:
            raise ValidationError(f"unknown scenario {self.scenario!r}") from None
        object.__setattr__(self, "scenario", scenario)
        try:
            grid = tuple(float(x) for x in self.grid)
            epsilons = tuple(float(e) for e in self.epsilons)
        except (TypeError, ValueError):
            raise ValidationError("grid and epsilons must hold numbers") from None
        if not grid or not all(math.isfinite(x) for x in grid):
            raise ValidationError("grid must be a nonempty list of finite numbers")
        if scenario is Scenario.DF_VS_M:
            if not all(x == int(x) and x >= 1 for x in grid):
                raise ValidationError("DfVsM grid entries must be positive integers")
            grid = tuple(int(x) for x in grid)
        object.__setattr__(self, "grid", grid)
        methods = tuple(self.methods)
        if not methods:
            raise ValidationError("methods must not be empty")
        bad = [m for m in methods if m not in SCENARIO_METHODS[scenario]]
        if bad:
            raise ValidationError(
                f"methods {bad} not valid for {scenario.value}; choose from {SCENARIO_METHODS[scenario]}"
            )
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "epsilons", epsilons)
        if scenario is Scenario.ROBUST_VS_PT and "statistical" in methods:
            if not self.epsilons or not all(0.5 < e < 1.0 for e in self.epsilons):
                raise ValidationError("epsilons must lie in (0.5, 1)")
        if not isinstance(self.stats, ChannelStatistics):
            raise ValidationError("stats must be a ChannelStatistics")
        if int(self.M) != self.M or self.M < 1:
            raise ValidationError("M must be a positive integer")
        for name in ("N0", "Nm", "Ps"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be positive")
        for name in ("var_H_scale", "var_Z_scale", "eps_H_scale", "eps_Z_scale"):
            if not getattr(self, name) >= 0:
                raise ValidationError(f"{name} must be nonnegative")
        if int(self.N) != self.N or self.N < 10:
            raise ValidationError("N must be an integer >= 10")
        if int(self.seed) != self.seed:
            raise ValidationError("seed must be an integer")


@dataclass
class SweepRow:
    scenario: str
    seed: int | None
    M: int
    Pt_dB: float
    Pt: float
    Ps: float | None
    method: str
    rate_bits: float
    rank_ratio: float
    status: str
    iterations: int
    wall_ms: float

    def csv_fields(self, reproducible: bool) -> list[str]:
        return [
            self.scenario, _fmt(self.seed), str(self.M), _fmt(self.Pt_dB), _fmt(self.Pt), _fmt(self.Ps),
            self.method, _fmt(self.rate_bits), _fmt(self.rank_ratio), self.status, str(self.iterations),
            "NA" if reproducible else _fmt(self.wall_ms),
        ]


def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    return "NA" if math.isnan(v) else format(v, ".12g")


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


# ------------------------------------------------------------------ spec files

_SPEC_KEYS = {f for f in SweepSpec.__dataclass_fields__}


def spec_from_dict(doc) -> SweepSpec:
    """Build a spec from a JSON-style mapping; ``stats`` is ``{sigma_g, sigma_h, sigma_z}``."""
    if not isinstance(doc, dict):
        raise ParseError("sweep spec must be a JSON object")
    unknown = sorted(set(doc) - _SPEC_KEYS)
    if unknown:
        raise ParseError(f"unknown sweep spec fields {unknown}", field=unknown[0])
    for name in ("scenario", "grid", "methods"):
        if name not in doc:
            raise ParseError(f"sweep spec is missing field '{name}'", field=name)
    kw = dict(doc)
    for name in ("grid", "methods", "epsilons"):
        if name in kw and not isinstance(kw[name], list):
            raise ParseError(f"field '{name}' must be a list", field=name)
        if name in kw:
            kw[name] = tuple(kw[name])
    if "stats" in kw:
        st = kw["stats"]
        if not isinstance(st, dict) or set(st) - {"sigma_g", "sigma_h", "sigma_z"}:
            raise ParseError("field 'stats' must map sigma_g/sigma_h/sigma_z to numbers", field="stats")
        kw["stats"] = ChannelStatistics(**st)
    try:
        return SweepSpec(**kw)
    except TypeError as exc:
        raise ParseError(f"malformed sweep spec: {exc}") from exc


def spec_to_dict(spec: SweepSpec) -> dict:
    doc = asdict(spec)
    doc["scenario"] = spec.scenario.value
    for name in ("grid", "methods", "epsilons"):
        doc[name] = list(doc[name])
    return doc


def load_spec(path) -> SweepSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from exc
    return spec_from_dict(doc)


# ------------------------------------------------------------------ named presets

# One named seed per figure-style scenario. Each realization was checked to
# give positive secrecy rates over its preset grid (fig4 only from M = 2 on:
# with a single relay the eavesdropper's link is the stronger one).
NAMED_SEEDS = {"fig2": 2, "fig3": 3, "fig4": 4, "fig5": 5, "fig6": 6}

_DF_METHODS = ("total", "sdr", "socp", "suboptimal")
_PT_GRID_DB = tuple(float(x) for x in range(-10, 36, 5))

PRESETS = {
    "fig2": SweepSpec(
        Scenario.DF_VS_PT, _PT_GRID_DB, _DF_METHODS, seed=NAMED_SEEDS["fig2"],
        stats=ChannelStatistics(sigma_g=1.0, sigma_h=3.0, sigma_z=1.0), M=5,
    ),
    "fig3": SweepSpec(
        Scenario.DF_VS_PT, _PT_GRID_DB, _DF_METHODS, seed=NAMED_SEEDS["fig3"],
        stats=ChannelStatistics(sigma_g=1.0, sigma_h=1.0, sigma_z=2.0), M=5,
    ),
    "fig4": SweepSpec(
        Scenario.DF_VS_M, tuple(range(1, 11)), _DF_METHODS, seed=NAMED_SEEDS["fig4"],
        stats=ChannelStatistics(sigma_g=1.0, sigma_h=1.0, sigma_z=2.0), M=10, Pt_dB=10.0,
    ),
    "fig5": SweepSpec(
        Scenario.AF_VS_PT_OVER_PS, (-10.0, -5.0, 0.0, 5.0, 10.0),
        SCENARIO_METHODS[Scenario.AF_VS_PT_OVER_PS], seed=NAMED_SEEDS["fig5"],
        stats=ChannelStatistics(sigma_g=10.0, sigma_h=2.0, sigma_z=2.0), M=10, Ps=10.0,
    ),
    "fig6": SweepSpec(
        Scenario.ROBUST_VS_PT, tuple(float(x) for x in range(0, 31, 5)), ("nominal", "statistical"),
        seed=NAMED_SEEDS["fig6"], stats=ChannelStatistics(sigma_g=1.0, sigma_h=1.0, sigma_z=2.0), M=5,
        epsilons=(0.7, 0.9, 0.95), var_H_scale=0.1, var_Z_scale=0.2,
    ),
}


def preset(name: str) -> SweepSpec:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


# ------------------------------------------------------------------ running


def sweep_channel(spec: SweepSpec) -> ChannelRealization:
    """The single realization a sweep uses (large enough for every grid point)."""
    if spec.channel_file is not None:
        ch = load_channel(spec.channel_file)
    else:
        M = max(spec.grid) if spec.scenario is Scenario.DF_VS_M else spec.M
        ch = sample_channel(int(M), spec.stats, Nm=spec.Nm, N0=spec.N0, seed=spec.seed)
    if spec.scenario is Scenario.DF_VS_M and max(spec.grid) > ch.M:
        raise ValidationError(f"grid needs {max(spec.grid)} relays but the channel has {ch.M}")
    return ch


def _timed(fn):
    start = time.perf_counter()
    try:
        out = fn()
        err = None
    except SolverError as exc:
        out, err = exc.report, exc
    return out, err, 1e3 * (time.perf_counter() - start)


def _status_of(res, err) -> str:
    if err is not None:
        return Status.NUMERICAL_FAILURE.value
    status = getattr(res, "status", None) or res.diagnostics.status
    return Status(status).value


def _df_rows(ch: ChannelRealization, P_T: float, methods) -> list[tuple]:
    M = ch.M
    p = np.full(M, P_T / M)
    calls = {
        "total": lambda: df_total_power(ch.h, ch.z, ch.N0, P_T),
        "sdr": lambda: df_individual_sdr(ch.h, ch.z, ch.N0, p),
        "socp": lambda: df_individual_socp(ch.h, ch.z, ch.N0, p),
        "suboptimal": lambda: df_suboptimal(ch.h, ch.z, ch.N0, p),
    }
    out = []
    for m in methods:
        res, err, ms = _timed(calls[m])
        if err is not None:
            out.append((m, math.nan, math.nan, _status_of(res, err), 0, ms))
            continue
        d = res.diagnostics
        out.append((m, res.second_hop_rate_bits, d.rank_ratio, d.status.value, d.iterations, ms))
    return out


def _af_rows(ch: ChannelRealization, Ps: float, P_T: float, methods, N: int) -> list[tuple]:
    data = af_precompute(ch, Ps)
    cons = {
        "total": PowerConstraint.total(P_T),
        "individual": PowerConstraint.individual(np.full(ch.M, P_T / ch.M)),
    }
    out = []
    for m in methods:
        kind, _, achievable = m.partition("_")
        c = cons[kind]
        if achievable:
            res, err, ms = _timed(lambda: af_achievable(data, c))
            out.append((m, res.rate_bits, 0.0, Status.OPTIMAL.value, 0, ms))
            continue
        res, err, ms = _timed(lambda: af_optimize(data, c, N=N))
        rate = res.rate_bits if res is not None else math.nan
        out.append((m, rate, res.rank_ratio if err is None else math.nan, _status_of(res, err),
                    res.iterations if res is not None else 0, ms))
    return out


def _robust_rows(ch: ChannelRealization, P_T: float, spec: SweepSpec) -> list[tuple]:
    M = ch.M
    c = PowerConstraint.individual(np.full(M, P_T / M))
    H = np.outer(ch.h, ch.h.conj())
    Z = np.outer(ch.z, ch.z.conj())
    out = []
    for m in spec.methods:
        if m == "nominal":
            jobs = [("nominal", lambda: df_individual_sdr(ch.h, ch.z, ch.N0, c.p))]
        elif m == "worstcase":
            unc = CsiUncertainty.worst_case(spec.eps_H_scale / math.sqrt(P_T), spec.eps_Z_scale / math.sqrt(P_T))
            jobs = [("worstcase", lambda unc=unc: robust_worst_case(H, Z, unc, ch.N0, c))]
        else:
            jobs = []
            for e in spec.epsilons:
                unc = CsiUncertainty.statistical(spec.var_H_scale / P_T, spec.var_Z_scale / P_T, e)
                jobs.append((f"statistical@{e:g}", lambda unc=unc: robust_statistical(H, Z, unc, ch.N0, c)))
        for label, fn in jobs:
            res, err, ms = _timed(fn)
            if err is not None:
                out.append((label, math.nan, math.nan, _status_of(res, err), 0, ms))
                continue
            rate = getattr(res, "rate_bits", None)
            if rate is None:
                rate = res.second_hop_rate_bits
            d = res.diagnostics
            out.append((label, rate, d.rank_ratio, d.status.value, d.iterations, ms))
    return out


def _grid_point(args) -> list[SweepRow]:
    spec, ch, index = args
    x = spec.grid[index]
    seed = None if spec.channel_file is not None else spec.seed
    Ps = None
    if spec.scenario is Scenario.DF_VS_M:
        ch = ch.subset(int(x))
        Pt_dB = spec.Pt_dB
        P_T = db_to_linear(Pt_dB)
        results = _df_rows(ch, P_T, spec.methods)
    elif spec.scenario is Scenario.DF_VS_PT:
        Pt_dB, P_T = x, db_to_linear(x)
        results = _df_rows(ch, P_T, spec.methods)
    elif spec.scenario is Scenario.AF_VS_PT_OVER_PS:
        Ps = spec.Ps
        P_T = Ps * db_to_linear(x)
        Pt_dB = 10.0 * math.log10(P_T)
        results = _af_rows(ch, Ps, P_T, spec.methods, spec.N)
    else:
        Pt_dB, P_T = x, db_to_linear(x)
        results = _robust_rows(ch, P_T, spec)
    return [
        SweepRow(spec.scenario.value, seed, ch.M, Pt_dB, P_T, Ps, m, rate, rr, status, it, ms)
        for m, rate, rr, status, it, ms in results
    ]


def run_sweep(spec: SweepSpec, jobs: int = 1, reproducible: bool = False, output=None) -> list[SweepRow]:
    """Evaluate every grid point and method; rows come back in grid order.

    Solver failures become rows with status ``NumericalFailure`` and the run
    continues. With ``jobs > 1`` grid points run in separate processes; the
    rows are identical to a sequential run. The CSV goes to ``output`` or,
    failing that, ``spec.output``.
    """
    if int(jobs) != jobs or jobs < 1:
        raise ValidationError("jobs must be a positive integer")
    ch = sweep_channel(spec)
    tasks = [(spec, ch, i) for i in range(len(spec.grid))]
    if jobs == 1 or len(tasks) == 1:
        chunks = [_grid_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            chunks = list(pool.map(_grid_point, tasks))
    rows = [r for chunk in chunks for r in chunk]
    path = output if output is not None else spec.output
    if path is not None:
        write_csv(rows, path, reproducible)
    return rows


def rows_to_csv(rows: list[SweepRow], reproducible: bool = False) -> str:
    buf = io.StringIO()
    if not reproducible:
        stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        buf.write(f"# generated {stamp}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow(r.csv_fields(reproducible))
    return buf.getvalue()


def write_csv(rows: list[SweepRow], path, reproducible: bool = False) -> None:
    Path(path).write_text(rows_to_csv(rows, reproducible))


def read_csv(path) -> list[dict]:
    """Rows of a sweep CSV as dicts of strings (the timestamp comment is skipped)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))

