"""Command-line interface: ``gmikit {binary,quantizer,supernyq,simulate,table}``.

Every command prints one record as CSV (default) or JSON. Exit codes: 0
success, 2 usage or domain error, 3 numerical failure, 4 resource cap.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, quantizer, simlab, supernyq
from .errors import DomainError, GmiError, NumericalError, ResourceCapError
from .gmi_core import ChannelConfig, DistortionModel

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_CAP = 0, 2, 3, 4
MAX_GRID = 100_000

M2_NOTE = "M=2 optimum: K = 2.77251 at t1 = 0.61769 (not 2.7775)"
INF_NOTE = "L = inf not computed (out of scope)"


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

@dataclass
class OutputRecord:
    command: str
    parameters: dict
    rows: list
    summary: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        cols = self.columns
        if len(set(cols)) != len(cols):
            raise ValueError("duplicate column names")
        for r in self.rows:
            if list(r) != cols:
                raise ValueError("rows must share the same ordered columns")

    @property
    def columns(self) -> list:
        return list(self.rows[0]) if self.rows else []


def fmt(v) -> str:
    """Canonical text of one value: 9 significant digits for reals."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.9g" % float(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return ";".join(fmt(x) for x in v)
    return str(v)


def _json_value(v):
    if v is None or isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float("%.9g" % v) if math.isfinite(v) else None
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_json_value(x) for x in v]
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    return str(v)


def _csv_field(s: str) -> str:
    if any(c in s for c in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def render_csv(rec: OutputRecord) -> str:
    meta = json.dumps(_json_value(rec.parameters), sort_keys=True, separators=(",", ":"))
    lines = [f"# schema_version={rec.schema_version} command={rec.command} args={meta}"]
    if rec.summary:
        lines.append("# summary: " + " ".join(f"{k}={fmt(v)}" for k, v in rec.summary.items()))
    lines.append(",".join(rec.columns))
    for r in rec.rows:
        lines.append(",".join(_csv_field(fmt(v)) for v in r.values()))
    return "\n".join(lines) + "\n"


def render_json(rec: OutputRecord) -> str:
    doc = {
        "schema_version": rec.schema_version,
        "command": rec.command,
        "parameters": _json_value(rec.parameters),
        "summary": _json_value(rec.summary),
        "columns": rec.columns,
        "rows": [_json_value(list(r.values())) for r in rec.rows],
    }
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_RANGE_RE = re.compile(rf"^{_NUM}(?::{_NUM}){{0,2}}$")
RANGE_OPTIONS = ("--snr-db", "--snr")


def parse_range(text: str) -> list:
    """``lo:hi:step`` (inclusive), ``lo:hi`` (step 1) or a single value."""
    if not _RANGE_RE.match(text.strip()):
        raise argparse.ArgumentTypeError(f"malformed range {text!r}; expected lo:hi:step")
    parts = [float(p) for p in text.split(":")]
    if len(parts) == 1:
        return parts
    lo, hi = parts[0], parts[1]
    step = parts[2] if len(parts) == 3 else 1.0
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"range {text!r} needs lo <= hi and step > 0")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    if count > MAX_GRID:
        raise argparse.ArgumentTypeError(f"range {text!r} has more than {MAX_GRID} points")
    return [lo + i * step for i in range(count)]


def _int_list(text: str) -> list:
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    return vals


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _join_negative_ranges(argv: list) -> list:
    # "--snr-db -20:20:0.5" would otherwise be read as an unknown option
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in RANGE_OPTIONS and i + 1 < len(argv) and _RANGE_RE.match(argv[i + 1]):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def _snr_grid(args, default: str | None):
    """Linear SNR values and their dB labels."""
    if getattr(args, "snr", None) is not None:
        lin = args.snr
        if any(v <= 0 for v in lin):
            raise DomainError("linear SNR values must be positive")
        return [10.0 * math.log10(v) for v in lin], lin
    db = args.snr_db if getattr(args, "snr_db", None) is not None else (parse_range(default) if default else None)
    if db is None:
        return None, None
    return db, [10.0 ** (v / 10.0) for v in db]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_binary(args) -> OutputRecord:
    db, lin = _snr_grid(args, "-20:20:0.5")
    rows = []
    for d, s in zip(db, lin):
        cfg = ChannelConfig.from_snr(s)
        g = quantizer.binary_gmi(cfg)
        rows.append({"snr_db": d, "snr": s, "gmi_nats": g.gmi_nats, "gmi_bits": g.gmi_bits,
                     "capacity_bits": quantizer.binary_capacity(cfg)})
    asy = quantizer.asymptotics(2.0)
    summary = {"delta_factor": 2.0 / math.pi, "high_snr_limit_bits": asy.high_snr_limit_bits,
               "low_snr_slope_nats": asy.low_snr_slope_nats}
    return OutputRecord("binary", _params(args), rows, summary)


def _design(mode: str, m: int, tol: float, seed: int):
    """(KFactor, extra summary) for one quantizer design."""
    if mode == "uniform":
        alpha, k = quantizer.optimize_uniform(m, tol=tol)
        return k, {"alpha": alpha}
    if mode == "t-uniform":
        return quantizer.t_uniform_k(m), {}
    if mode == "optimal":
        _, k = quantizer.optimize_t(m, tol=tol, seed=seed)
        return k, {"t1": k.design.ts[0]}
    raise DomainError(f"unknown mode {mode!r}")


def cmd_quantizer(args) -> OutputRecord:
    if not 2 <= args.m <= 64:
        raise DomainError("m must lie in [2, 64]")
    k, extra = _design(args.mode, args.m, args.tol, args.seed)
    asy = quantizer.asymptotics(k)
    ts = k.design
    summary = {"m": args.m, "k": k.value, **extra,
               "high_snr_limit_bits": asy.high_snr_limit_bits,
               "high_snr_1st_order_coeff": asy.high_snr_1st_order_coeff,
               "low_snr_slope_nats": asy.low_snr_slope_nats,
               "low_snr_2nd_order_coeff": asy.low_snr_2nd_order_coeff}
    db, lin = _snr_grid(args, None)
    if db is not None:
        rows = []
        for d, s in zip(db, lin):
            g = quantizer.gmi_at_snr(k, ChannelConfig.from_snr(s))
            rows.append({"snr_db": d, "snr": s, "delta": g.delta, "gmi_nats": g.gmi_nats, "gmi_bits": g.gmi_bits})
        return OutputRecord("quantizer", _params(args), rows, summary)
    full = ts.full
    a = [float(v) for v in np.sqrt(-2.0 * np.log(np.where(full > 0, full, 1.0)))]
    a[-1] = math.inf
    rows = []
    for i in range(args.m):
        # thresholds normalized by sqrt(es + sigma2), i.e. for unit reference energy
        rows.append({"cell": i + 1, "t_upper": full[i], "t_lower": full[i + 1],
                     "alpha_lower": a[i], "alpha_upper": a[i + 1], "level": k.rs[i]})
    return OutputRecord("quantizer", _params(args), rows, summary)


def _supernyq_snr(values, convention: str):
    if convention == "nyquist":
        return [supernyq.nyquist_to_supernyq_snr(v) for v in values]
    return list(values)


def cmd_supernyq(args) -> OutputRecord:
    l = args.l
    supernyq._check_l(l, lo=2 if args.pulse == "optimal" else 1)
    if args.pulse == "sinc":
        asy = supernyq.sinc_asymptotics(l)
        pulse = supernyq.PulseSpec.sinc(l)
        summary = {"l": l, "quadratic_form": asy.quadratic_form, "high_snr_bits": asy.high_snr_bits,
                   "low_snr_slope": asy.low_snr_slope}
    else:
        pulse, slope = supernyq.optimize_pulse_low_snr(l)
        summary = {"l": l, "low_snr_slope": slope,
                   "sinc_low_snr_slope": supernyq.sinc_asymptotics(l).low_snr_slope}
    summary["snr_convention"] = args.snr_convention
    db, lin = _snr_grid(args, None)
    if db is None:
        rows = [{"index": int(i), "offset": i / l, "gamma": g}
                for i, g in zip(range(-l + 1, l), pulse.gammas)]
        return OutputRecord("supernyq", _params(args), rows, summary)
    native = _supernyq_snr(lin, args.snr_convention)
    rows = []
    for d, s, sn in zip(db, lin, native):
        if args.pulse == "sinc":
            g = supernyq.sinc_pulse_gmi(l, sn)
        else:
            g, _ = supernyq.supernyq_gmi(supernyq.general_correlations(pulse, l, sn))
        rows.append({"snr_db": d, "snr": s, "snr_native": sn, "delta": g.delta,
                     "gmi_nats": g.gmi_nats, "gmi_bits": g.gmi_bits})
    return OutputRecord("supernyq", _params(args), rows, summary)


def _sim_model(args):
    if args.model == "binary":
        return quantizer.QuantizerSpec.binary()
    if args.model == "quantizer":
        if not 2 <= args.m <= 64:
            raise DomainError("m must lie in [2, 64]")
        ts, _ = quantizer.optimize_t(args.m, tol=args.tol, seed=args.seed)
        return quantizer.alpha_from_t(ts)
    if args.model == "clipper":
        return DistortionModel.clipper(args.clip)
    if args.model == "supernyq":
        return simlab.SupernyqModel(args.l)
    raise DomainError(f"unknown model {args.model!r}")


def cmd_simulate(args) -> OutputRecord:
    if args.trials < 1:
        raise DomainError("trials must be positive")
    snr = args.snr_value if args.snr_value is not None else 10.0 ** (args.snr_db_value / 10.0)
    model = _sim_model(args)
    if args.model == "quantizer":
        # thresholds are designed for unit reference energy es + sigma2
        cfg = ChannelConfig(snr / (1.0 + snr), 1.0 / (1.0 + snr))
    else:
        cfg = ChannelConfig.from_snr(snr)
    gmi, _ = simlab.model_gmi(model, cfg)
    rate = args.rate_fraction * gmi.gmi_nats
    rows = []
    for n in args.n:
        sim = simlab.SimConfig(model, cfg, n, rate, args.trials, seed=args.seed, method=args.method,
                               isi_window=args.isi_window, workers=args.workers)
        res = simlab.run_nn_decoding(sim)
        rows.append({"n": n, "rate_nats": rate, "gmi_nats": gmi.gmi_nats, "method": res.method,
                     "block_errors": res.block_errors, "trials": res.trials, "error_rate": res.error_rate,
                     "ci95_low": res.wilson_ci95[0], "ci95_high": res.wilson_ci95[1],
                     "mean_error_probability": res.mean_error_probability})
    summary = {"snr": snr, "gmi_nats": gmi.gmi_nats, "gmi_bits": gmi.gmi_bits, "rate_fraction": args.rate_fraction}
    return OutputRecord("simulate", _params(args), rows, summary)


def cmd_table(args) -> OutputRecord:
    tid = args.id
    rows = []
    if tid in (1, 2, 3):
        for m in range(2, 9):
            if tid == 1:
                alpha, k = quantizer.optimize_uniform(m, tol=args.tol)
                rows.append({"m": m, "k": k.value, "alpha": alpha, "notes": ""})
            elif tid == 2:
                rows.append({"m": m, "k": quantizer.t_uniform_k(m).value, "notes": ""})
            else:
                ts, k = quantizer.optimize_t(m, tol=args.tol, seed=args.seed)
                rows.append({"m": m, "k": k.value, "t1": ts.ts[0], "notes": M2_NOTE if m == 2 else ""})
    elif tid == 4:
        for l in (1, 2, 4, 8, 16, 32):
            a = supernyq.sinc_asymptotics(l)
            rows.append({"l": l, "quadratic_form": a.quadratic_form, "high_snr_bits": a.high_snr_bits,
                         "low_snr_slope": a.low_snr_slope, "notes": ""})
        rows.append({"l": "inf", "quadratic_form": math.nan, "high_snr_bits": math.nan,
                     "low_snr_slope": math.nan, "notes": INF_NOTE})
    elif tid == 5:
        for l in (2, 4, 8, 16, 32):
            _, slope = supernyq.optimize_pulse_low_snr(l)
            rows.append({"l": l, "low_snr_slope": slope,
                         "sinc_low_snr_slope": supernyq.sinc_asymptotics(l).low_snr_slope, "notes": ""})
        rows.append({"l": "inf", "low_snr_slope": math.nan, "sinc_low_snr_slope": math.nan, "notes": INF_NOTE})
    else:
        raise DomainError(f"unknown table id {tid!r}")
    return OutputRecord("table", _params(args), rows)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

GLOBAL_DEFAULTS = {"format": "csv", "output": None, "seed": 0, "tol": 1e-9}


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda k: argparse.SUPPRESS) if suppress else GLOBAL_DEFAULTS.get
    p.add_argument("--format", choices=("csv", "json"), default=d("format"), help="output format (default csv)")
    p.add_argument("--output", metavar="PATH", default=d("output"), help="write to PATH instead of stdout")
    p.add_argument("--seed", type=_seed, default=d("seed"), help="unsigned 64-bit seed (default 0)")
    p.add_argument("--tol", type=_positive_float, default=d("tol"), help="optimizer argument tolerance")


def _add_snr(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--snr-db", type=parse_range, metavar="LO:HI:STEP", help="SNR grid in dB")
    g.add_argument("--snr", type=parse_range, metavar="LO:HI:STEP", help="SNR grid, linear")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmikit", description="GMI of distorted Gaussian channels.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_globals(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _add_globals(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("binary", parents=[common], help="binary quantization: GMI and capacity vs SNR")
    _add_snr(p)
    p.set_defaults(func=cmd_binary)

    p = sub.add_parser("quantizer", parents=[common], help="2M-level quantizer design and GMI")
    p.add_argument("--mode", choices=("uniform", "t-uniform", "optimal"), default="optimal")
    p.add_argument("--m", type=int, required=True, help="levels per sign, 2 <= m <= 64")
    _add_snr(p)
    p.set_defaults(func=cmd_quantizer)

    p = sub.add_parser("supernyq", parents=[common], help="super-Nyquist sampling with binary quantization")
    p.add_argument("--pulse", choices=("sinc", "optimal"), default="sinc")
    p.add_argument("--l", type=int, required=True, help="oversampling factor, 1 <= l <= 32")
    p.add_argument("--snr-convention", choices=("supernyq", "nyquist"), default="supernyq",
                   help="supernyq: snr = es/(sigma2/2) per sample; nyquist: snr = es/sigma2")
    _add_snr(p)
    p.set_defaults(func=cmd_supernyq)

    p = sub.add_parser("simulate", parents=[common], help="random-codebook nearest-neighbour decoding")
    p.add_argument("--model", choices=("binary", "quantizer", "clipper", "supernyq"), default="binary")
    p.add_argument("--m", type=int, default=4, help="levels per sign for --model quantizer (optimal design)")
    p.add_argument("--clip", type=_positive_float, default=1.0, help="clipping amplitude for --model clipper")
    p.add_argument("--l", type=int, default=2, help="oversampling factor for --model supernyq")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--snr-db", dest="snr_db_value", type=float, default=10.0)
    g.add_argument("--snr", dest="snr_value", type=_positive_float, default=None)
    p.add_argument("--n", type=_int_list, default=[512], help="block length(s), comma-separated")
    p.add_argument("--rate-fraction", type=_positive_float, default=0.8, help="rate as a fraction of the GMI")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--method", choices=("auto", "exhaustive", "conditional"), default="auto")
    p.add_argument("--isi-window", type=int, default=simlab.DEFAULT_ISI_WINDOW)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("table", parents=[common], help="recompute a results table")
    p.add_argument("--id", type=int, required=True, choices=(1, 2, 3, 4, 5))
    p.set_defaults(func=cmd_table)
    return parser


def _params(args) -> dict:
    skip = {"func", "output", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_negative_ranges(argv))
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        rec = args.func(args)
    except ResourceCapError as exc:
        print(f"gmikit: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except NumericalError as exc:
        print(f"gmikit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, GmiError) as exc:
        print(f"gmikit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = render_json(rec) if args.format == "json" else render_csv(rec)
    if args.output:
        with open(args.output, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
