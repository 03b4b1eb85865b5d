"""Command-line interface: ``relaysec <command> [options]``.

Exit codes: 0 on success, 1 on invalid input or usage, 2 on solver failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

import numpy as np

from .af import af_achievable, af_optimize, af_precompute, af_secrecy_rate
from .channel import (
    ChannelRealization, ChannelStatistics, PowerConstraint, channel_to_dict, load_channel, sample_channel,
)
from .df import df_individual_socp, df_individual_sdr, df_secrecy_rate, df_suboptimal, df_total_power
from .errors import SolverError, ValidationError
from .experiments import SweepRow, load_spec, preset, rows_to_csv, run_sweep, write_csv
from .robust import CsiUncertainty, robust_statistical, robust_worst_case

AGREEMENT_TOL = 1e-6


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *a, **kw):
        kw.setdefault("allow_abbrev", False)
        super().__init__(*a, **kw)

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _num(v) -> str:
    return format(float(v), ".12g")


def _cnum(v: complex) -> str:
    return f"{_num(v.real)}{'+' if v.imag >= 0 else '-'}{_num(abs(v.imag))}j"


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"expected a comma-separated list of numbers, got {text!r}") from None


# ------------------------------------------------------------------ inputs


def _stats(text: str | None) -> ChannelStatistics:
    if text is None:
        return ChannelStatistics()
    vals = _floats(text)
    if len(vals) != 3:
        raise ValidationError("--stats takes sigma_g,sigma_h,sigma_z")
    return ChannelStatistics(*vals)


def _channel(args) -> ChannelRealization:
    if args.channel is not None:
        if args.seed is not None or args.stats is not None:
            raise ValidationError("use either --channel or --seed/--stats, not both")
        ch = load_channel(args.channel)
        if args.n0 is not None:
            ch = dataclasses.replace(ch, N0=args.n0)
        return ch
    seed = 0 if args.seed is None else args.seed
    N0 = 1.0 if args.n0 is None else args.n0
    return sample_channel(args.m, _stats(args.stats), Nm=args.nm, N0=N0, seed=seed)


def _budgets(args, M: int, allow_both: bool = True) -> PowerConstraint:
    """``--p`` gives per-relay budgets, ``--pt`` alone splits it equally."""
    if args.p is not None:
        p = _floats(args.p)
        if len(p) == 1:
            p = p * M
        if len(p) != M:
            raise ValidationError(f"--p has {len(p)} entries but there are {M} relays")
        if args.pt is not None and allow_both:
            return PowerConstraint.both(args.pt, p)
        return PowerConstraint.individual(p)
    if args.pt is None:
        raise ValidationError("give --p or --pt")
    return PowerConstraint.individual(np.full(M, args.pt / M))


def _require(value, flag: str):
    if value is None:
        raise ValidationError(f"{flag} is required for this command")
    return value


# ------------------------------------------------------------------ output


def _report(name: str, rate: float, w: np.ndarray, check: float, extra: dict, caveat: str | None = None):
    print(f"method: {name}")
    print(f"rate_bits: {_num(rate)}")
    for k, v in extra.items():
        print(f"{k}: {v if isinstance(v, str) else _num(v)}")
    print(f"evaluated_rate_bits: {_num(check)}")
    for i, x in enumerate(w):
        print(f"w[{i}]: {_cnum(complex(x))}")
    if caveat:
        print(f"note: {caveat}")


def _caveat(rate, check, rank_ratio) -> str | None:
    if abs(rate - check) <= AGREEMENT_TOL * max(1.0, abs(rate)):
        return None
    return (
        f"the returned w achieves {_num(check)} bits, not the reported {_num(rate)}; "
        f"the relaxation is not rank one (rank_ratio={_num(rank_ratio)})"
    )


def _single_row(args, command, ch, P_T, Ps, method, rate, rank_ratio, status, iterations):
    if args.out is None:
        return
    seed = None if args.channel is not None else (0 if args.seed is None else args.seed)
    Pt_dB = 10.0 * math.log10(P_T) if P_T else math.nan
    row = SweepRow(command, seed, ch.M, Pt_dB, P_T, Ps, method, rate, rank_ratio, status, iterations, math.nan)
    write_csv([row], args.out, args.reproducible)


# ------------------------------------------------------------------ commands


def _cmd_df_total(args) -> int:
    ch = _channel(args)
    P_T = _require(args.pt, "--pt")
    res = df_total_power(ch.h, ch.z, ch.N0, P_T)
    check = df_secrecy_rate(res.w, ch.h, ch.z, ch.N0)
    rate = res.second_hop_rate_bits
    _report(res.method.value, rate, res.w, check, {}, _caveat(rate, check, 0.0))
    _single_row(args, "df-total", ch, P_T, None, "total", rate, 0.0, res.diagnostics.status.value, 0)
    return 0


def _cmd_df_individual(args) -> int:
    ch = _channel(args)
    c = _budgets(args, ch.M, allow_both=args.method != "suboptimal")
    if args.method == "sdr":
        res = df_individual_sdr(ch.h, ch.z, ch.N0, c.p, c.P_T)
    elif args.method == "socp":
        res = df_individual_socp(ch.h, ch.z, ch.N0, c.p, c.P_T)
    else:
        res = df_suboptimal(ch.h, ch.z, ch.N0, c.p)
    d = res.diagnostics
    rate = res.second_hop_rate_bits
    check = df_secrecy_rate(res.w, ch.h, ch.z, ch.N0)
    extra = {"status": d.status.value, "rank_ratio": d.rank_ratio}
    if args.method != "suboptimal":
        extra["t_max"] = d.t_max
    _report(res.method.value, rate, res.w, check, extra, _caveat(rate, check, d.rank_ratio))
    _single_row(args, "df-individual", ch, c.effective_power(), None, args.method, rate,
                d.rank_ratio, d.status.value, d.iterations)
    return 0


def _cmd_af(args) -> int:
    ch = _channel(args)
    Ps = _require(args.ps, "--ps")
    data = af_precompute(ch, Ps)
    if args.constraint == "total":
        c = PowerConstraint.total(_require(args.pt, "--pt"))
    else:
        c = _budgets(args, ch.M)
    if args.achievable_only:
        res = af_achievable(data, c)
        check = af_secrecy_rate(res.w, data)
        extra = {"t1": res.t1, "t2_l": res.t2_l}
        _report("AfAchievable", res.rate_bits, res.w, check, extra, _caveat(res.rate_bits, check, 0.0))
        _single_row(args, "af", ch, c.effective_power(), Ps, f"{args.constraint}_achievable",
                    res.rate_bits, 0.0, "Optimal", 0)
        return 0
    res = af_optimize(data, c, N=args.N)
    check = af_secrecy_rate(res.w, data)
    extra = {"status": res.status.value, "t1": res.t1_o, "t2": res.t2_o, "rank_ratio": res.rank_ratio,
             "feasibility_calls": res.feasibility_calls}
    _report("AfOptimize", res.rate_bits, res.w, check, extra, _caveat(res.rate_bits, check, res.rank_ratio))
    _single_row(args, "af", ch, c.effective_power(), Ps, args.constraint, res.rate_bits,
                res.rank_ratio, res.status.value, res.iterations)
    return 0


def _cmd_robust(args) -> int:
    ch = _channel(args)
    c = _budgets(args, ch.M)
    H = np.outer(ch.h, ch.h.conj())
    Z = np.outer(ch.z, ch.z.conj())
    extra = {}
    if args.mode == "worstcase":
        unc = CsiUncertainty.worst_case(args.eps_h, args.eps_z)
        res = robust_worst_case(H, Z, unc, ch.N0, c)
    else:
        unc = CsiUncertainty.statistical(args.var_h, args.var_z, _require(args.epsilon, "--epsilon"))
        res = robust_statistical(H, Z, unc, ch.N0, c, validate_trials=args.trials or None, validate_seed=args.trials_seed)
        if res.empirical_nonoutage is not None:
            extra["empirical_nonoutage"] = res.empirical_nonoutage
    d = res.diagnostics
    extra = {"status": d.status.value, "t_max": res.t_max, "rank_ratio": d.rank_ratio,
             "constraint_slack": res.constraint_slack, **extra}
    # the robust rate is a guarantee; on the nominal channel w should do at least as well
    check = df_secrecy_rate(res.w, ch.h, ch.z, ch.N0)
    caveat = None
    if check < res.rate_bits - AGREEMENT_TOL * max(1.0, res.rate_bits):
        caveat = _caveat(res.rate_bits, check, d.rank_ratio)
    _report(f"Robust{res.mode.value}", res.rate_bits, res.w, check, extra, caveat)
    _single_row(args, "robust", ch, c.effective_power(), None, args.mode, res.rate_bits,
                d.rank_ratio, d.status.value, d.iterations)
    return 0


def _cmd_sweep(args) -> int:
    if (args.spec is None) == (args.preset is None):
        raise ValidationError("give exactly one of --spec or --preset")
    spec = load_spec(args.spec) if args.spec is not None else preset(args.preset)
    out = args.out if args.out is not None else spec.output
    rows = run_sweep(spec, jobs=args.jobs, reproducible=args.reproducible, output=out)
    if out is None:
        sys.stdout.write(rows_to_csv(rows, args.reproducible))
    else:
        failed = sum(r.status == "NumericalFailure" for r in rows)
        print(f"wrote {len(rows)} rows to {out}" + (f" ({failed} solver failures)" if failed else ""))
    return 0


def _cmd_gen_channel(args) -> int:
    N0 = 1.0 if args.n0 is None else args.n0
    seed = 0 if args.seed is None else args.seed
    ch = sample_channel(args.m, _stats(args.stats), Nm=args.nm, N0=N0, seed=seed)
    text = json.dumps(channel_to_dict(ch), indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    src = common.add_argument_group("channel")
    src.add_argument("--channel", metavar="FILE", help="channel JSON file")
    src.add_argument("--seed", type=int, help="seed for a sampled channel (default 0)")
    src.add_argument("--stats", metavar="SG,SH,SZ", help="channel standard deviations (default 1,1,1)")
    src.add_argument("--m", type=int, default=5, help="relay count for a sampled channel (default 5)")
    src.add_argument("--nm", type=float, default=1.0, help="relay noise variance (default 1)")
    src.add_argument("--n0", type=float, help="destination/eavesdropper noise variance (default 1)")
    pw = common.add_argument_group("power")
    pw.add_argument("--pt", type=float, help="total relay power")
    pw.add_argument("--p", metavar="P1,P2,...", help="per-relay power budgets")
    pw.add_argument("--ps", type=float, help="source power")
    out = common.add_argument_group("output")
    out.add_argument("--out", metavar="FILE", help="write results to this file")
    out.add_argument("--reproducible", action="store_true", help="omit timestamps and wall times")

    parser = _Parser(prog="relaysec", description="Secrecy-rate beamforming designs for relay networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("df-total", parents=[common], help="decode-and-forward, total power (closed form)")
    p.set_defaults(func=_cmd_df_total)

    p = sub.add_parser("df-individual", parents=[common], help="decode-and-forward, per-relay power")
    p.add_argument("--method", choices=("sdr", "socp", "suboptimal"), default="sdr")
    p.set_defaults(func=_cmd_df_individual)

    p = sub.add_parser("af", parents=[common], help="amplify-and-forward")
    p.add_argument("--constraint", choices=("total", "individual"), default="total")
    p.add_argument("--achievable-only", action="store_true", help="skip the 2-D search")
    p.add_argument("--N", type=int, default=200, help="t1 grid resolution (default 200)")
    p.set_defaults(func=_cmd_af)

    p = sub.add_parser("robust", parents=[common], help="decode-and-forward with imperfect channel knowledge")
    p.add_argument("--mode", choices=("worstcase", "statistical"), required=True)
    p.add_argument("--eps-h", type=float, default=0.0, help="worst-case error bound on h h^H")
    p.add_argument("--eps-z", type=float, default=0.0, help="worst-case error bound on z z^H")
    p.add_argument("--var-h", type=float, default=0.0, help="error entry variance for h h^H")
    p.add_argument("--var-z", type=float, default=0.0, help="error entry variance for z z^H")
    p.add_argument("--epsilon", type=float, help="required non-outage probability (> 0.5)")
    p.add_argument("--trials", type=int, default=0, help="Monte Carlo trials to check non-outage")
    p.add_argument("--trials-seed", type=int, default=0)
    p.set_defaults(func=_cmd_robust)

    p = sub.add_parser("sweep", help="run a parameter sweep and write CSV")
    p.add_argument("--spec", metavar="FILE", help="sweep spec (JSON)")
    p.add_argument("--preset", help="named preset: fig2 ... fig6")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", metavar="FILE", help="CSV path (default: the spec file's output, else stdout)")
    p.add_argument("--reproducible", action="store_true", help="omit timestamps and wall times")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("gen-channel", parents=[common], help="sample a channel and write it as JSON")
    p.set_defaults(func=_cmd_gen_channel)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
