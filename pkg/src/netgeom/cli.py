"""Command-line front end.

Every report starts with a header line carrying the version, the command
and every resolved setting, so a run can be repeated from its output alone.
Thread count is deliberately left out of the header: it never changes
results.

Exit codes: 0 success, 2 input or parse error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .dynamics import ExtendedState, TangentState, arc_length_to_time, geodesic_integrate, n_coords, speed_squared, tangent_dynamics
from .entropy import CHUNK, EntropyResult, McConfig, NumericalFailure, fixed_graph_entropy, sweep_er, sweep_powerlaw
from .experiments import (
    DatasetMissing,
    table_erg,
    table_heterogeneity,
    table_hubs,
    table_randomized,
    table_real,
    table_regular,
)
from .geometry import Box, DegenerateMetricError
from .graph import (
    Constant,
    GenerationError,
    Graph,
    GraphError,
    Jittered,
    assign_weights,
    gen_configuration_model,
    gen_powerlaw_sequence,
    gen_uniform_random_graph,
    gibbs_rg_entropy,
)
from .ingest import ParseError, read_graph, write_edge_list

THREADS_ENV = "NETGEOM_THREADS"
SWEEP_COLUMNS = ["n", "k", "k_over_n", "gamma", "s_tilde", "stderr", "reject_degenerate_frac",
                 "reject_overflow_frac", "samples", "reps"]
TABLE_COLUMNS = ["label", "n", "k", "h", "s_tilde", "stderr", "reference_s_tilde",
                 "reject_degenerate_frac", "reject_overflow_frac", "samples", "reps", "note"]


class InputError(ValueError):
    pass


def _float_pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'LO,HI', got {text!r}") from None
    return a, b


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def _add_mc_flags(p: argparse.ArgumentParser, reps_default: int | None = None):
    p.add_argument("--box", type=_float_pair, default=(0.5, 10.0), help="variance box a,b (default 0.5,10)")
    p.add_argument("--samples", type=int, default=100_000, help="Monte Carlo points per realization")
    p.add_argument("--reps", type=int, default=reps_default, help="realizations (default 1000, 100 with --quick)")
    p.add_argument("--quick", action="store_true", help="default reps to 100")
    p.add_argument("--protocol", choices=["faithful", "logdomain"], default="faithful")
    p.add_argument("--cutoff", type=float, default=1e308, help="overflow cutoff on sqrt(det g)")
    p.add_argument("--batches", type=int, default=100)
    p.add_argument("--regularizer", action="store_true", help="weight points by the log-det regularizer")
    p.add_argument("--null", choices=["paired", "exact"], default="paired",
                   help="null volume: estimated on the same samples (default) or closed form")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help=f"worker threads (default ${THREADS_ENV} or 1)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", "-o", default="-", help="output path, '-' for stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="netgeom", description="Geometric entropy of networks.")
    ap.add_argument("--version", action="version", version=f"netgeom {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random graph as an edge list")
    gen.add_argument("model", choices=["er", "config", "powerlaw"])
    gen.add_argument("--n", type=int, required=False)
    gen.add_argument("--k", type=int, help="edge count (er)")
    gen.add_argument("--degrees", type=_int_list, help="degree sequence (config)")
    gen.add_argument("--regular", type=int, help="d for a d-regular sequence (config)")
    gen.add_argument("--gamma", type=float, help="exponent (powerlaw)")
    gen.add_argument("--d-min", type=int, default=1)
    gen.add_argument("--d-max", type=int, default=None)
    gen.add_argument("--r", type=float, default=None, help="constant edge weight (default unit)")
    gen.add_argument("--jitter", type=float, default=None, help="weight variance; requires --r")
    _common(gen)

    ent = sub.add_parser("entropy", help="normalized entropy of one graph file")
    ent.add_argument("--input", required=True)
    ent.add_argument("--binarize", action="store_true")
    ent.add_argument("--weight", type=float, default=None, help="replace every edge weight by this value")
    _add_mc_flags(ent)
    _common(ent)

    sw = sub.add_parser("sweep", help="entropy sweeps over random-graph ensembles")
    swsub = sw.add_subparsers(dest="ensemble", required=True)
    swe = swsub.add_parser("er")
    swe.add_argument("--n", type=int, required=True)
    swe.add_argument("--r", type=float, default=0.2)
    swe.add_argument("--jitter", type=float, default=None, help="weight variance (Jittered scheme)")
    swe.add_argument("--ks", type=_int_list, default=None, help="edge counts (default 0..n(n-1)/2 step --k-step)")
    swe.add_argument("--k-step", type=int, default=10)
    _add_mc_flags(swe)
    _common(swe)
    swp = swsub.add_parser("powerlaw")
    swp.add_argument("--n", type=int, required=True)
    swp.add_argument("--gammas", type=_float_list, required=True)
    swp.add_argument("--k-over-n", type=_float_pair, default=(0.7, 0.85))
    swp.add_argument("--r", type=float, default=0.2)
    swp.add_argument("--jitter", type=float, default=None)
    _add_mc_flags(swp, reps_default=10)
    _common(swp)

    tb = sub.add_parser("table", help="reproduce a results table")
    tb.add_argument("name", choices=["regular", "hubs", "heterogeneity", "erg", "real", "randomized"])
    tb.add_argument("--data-dir", action="append", default=[], help="directory with real-network GML files")
    _add_mc_flags(tb)
    _common(tb)

    geo = sub.add_parser("geodesic", help="integrate a geodesic on the extended manifold")
    geo.add_argument("--n", type=int, required=True)
    geo.add_argument("--init", required=True, help="JSON file with 'zeta' and 'zeta_dot' lists")
    geo.add_argument("--smax", type=float, required=True)
    geo.add_argument("--tol", type=float, default=1e-9)
    geo.add_argument("--strict-pd", action="store_true")
    geo.add_argument("--max-step", type=float, default=None, help="default smax/100")
    _common(geo)

    gb = sub.add_parser("gibbs", help="Gibbs entropy of the G(n, k) ensemble")
    gb.add_argument("--n", type=int, required=True)
    gb.add_argument("--k", type=int, required=True)
    _common(gb)
    return ap


def _threads(args) -> int:
    if args.threads is not None:
        t = args.threads
    else:
        env = os.environ.get(THREADS_ENV, "1")
        try:
            t = int(env)
        except ValueError:
            raise InputError(f"${THREADS_ENV} must be an integer, got {env!r}") from None
    if t < 1:
        raise InputError("thread count must be positive")
    return t


def _mc_config(args) -> McConfig:
    reps = args.reps if args.reps is not None else (100 if args.quick else 1000)
    a, b = args.box
    return McConfig(box=Box(a, b, 0), samples=args.samples, realizations=reps, protocol=args.protocol,
                    overflow_cutoff=args.cutoff, seed=args.seed, batches=args.batches,
                    regularizer=args.regularizer, threads=_threads(args), reference=args.null)


def _scheme(r, jitter):
    if jitter is not None:
        return Jittered(r, jitter)
    return Constant(r)


def _header(args, resolved: dict) -> dict:
    skip = {"threads", "output", "format"}
    settings = {k: v for k, v in sorted(vars(args).items()) if k not in skip and k != "command"}
    settings.update(resolved)
    return {"version": __version__, "command": args.command, "settings": settings}


def _header_line(header: dict) -> str:
    parts = [f"netgeom {header['version']}", f"command={header['command']}"]
    for k, v in sorted(header["settings"].items()):
        parts.append(f"{k}={json.dumps(v, default=str, separators=(',', ':'))}")
    return "# " + " ".join(parts)


def _emit(out, args, header: dict, columns: list[str], rows: list[list]):
    if args.format == "json":
        out.write(json.dumps({"header": header, "columns": columns, "rows": rows}, default=str, indent=1))
        out.write("\n")
        return
    out.write(_header_line(header) + "\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(x) for x in r])


def _mc_resolved(cfg: McConfig) -> dict:
    return {"box": [cfg.box.a, cfg.box.b], "samples": cfg.samples, "reps": cfg.realizations,
            "protocol": cfg.protocol, "cutoff": cfg.overflow_cutoff, "batches": cfg.batches,
            "regularizer": cfg.regularizer, "null": cfg.reference, "seed": cfg.seed, "chunk": CHUNK}


def _sweep_row(n, k, gamma, res: EntropyResult, cfg: McConfig):
    return [n, k, (k / n) if k is not None else None, gamma, res.s_tilde, res.std_err,
            res.reject_degenerate_frac, res.reject_overflow_frac, cfg.samples, res.realizations]


def _cmd_gen(args):
    if args.n is None and args.degrees is None:
        raise InputError("--n is required")
    if args.model == "er":
        if args.k is None:
            raise InputError("gen er needs --k")
        g = gen_uniform_random_graph(args.n, args.k, args.seed)
    elif args.model == "config":
        if args.degrees is not None:
            ds = args.degrees
        elif args.regular is not None:
            ds = [args.regular] * args.n
        else:
            raise InputError("gen config needs --degrees or --regular")
        g = gen_configuration_model(ds, args.seed)
    else:
        if args.gamma is None:
            raise InputError("gen powerlaw needs --gamma")
        ds = gen_powerlaw_sequence(args.n, args.gamma, args.d_min, args.d_max, args.seed)
        g = gen_configuration_model(ds, args.seed)
    if args.r is not None:
        g = assign_weights(g, _scheme(args.r, args.jitter), args.seed)
    elif args.jitter is not None:
        raise InputError("--jitter requires --r")
    header = _header(args, {"seed": args.seed})
    return _header_line(header) + "\n" + write_edge_list(g)


def _cmd_entropy(args, out):
    res = read_graph(args.input, binarize=args.binarize)
    for w in res.warnings:
        logging.warning("%s: %s", args.input, w)
    g = res.graph
    if args.weight is not None:
        g = assign_weights(g, Constant(args.weight))
    cfg = _mc_config(args)
    er = fixed_graph_entropy(g, cfg)
    _emit(out, args, _header(args, _mc_resolved(cfg)), SWEEP_COLUMNS, [_sweep_row(g.n, g.k, None, er, cfg)])


def _cmd_sweep(args, out):
    cfg = _mc_config(args)
    scheme = _scheme(args.r, args.jitter)
    rows = []
    if args.ensemble == "er":
        m = args.n * (args.n - 1) // 2
        ks = args.ks if args.ks is not None else list(range(0, m + 1, args.k_step))
        for k, res in sweep_er(args.n, ks, scheme, cfg):
            rows.append(_sweep_row(args.n, k, None, res, cfg))
        resolved = {**_mc_resolved(cfg), "ks": ks}
    else:
        for gamma, res in sweep_powerlaw(args.n, args.gammas, scheme, tuple(args.k_over_n), cfg):
            rows.append(_sweep_row(args.n, res.mean_k, gamma, res, cfg))
        resolved = _mc_resolved(cfg)
    _emit(out, args, _header(args, resolved), SWEEP_COLUMNS, rows)


def _cmd_table(args, out):
    cfg = _mc_config(args)
    fn = {"regular": table_regular, "hubs": table_hubs, "heterogeneity": table_heterogeneity, "erg": table_erg}
    if args.name in fn:
        table = fn[args.name](cfg)
    elif args.name == "real":
        table = table_real(cfg, dirs=args.data_dir)
    else:
        table = table_randomized(cfg, dirs=args.data_dir)
    rows = []
    for t in table:
        r = t.result
        if r is None:
            rows.append([t.label, t.n, t.k, t.h, None, None, t.reference, None, None, cfg.samples, None, t.extra])
        else:
            rows.append([t.label, t.n, t.k, t.h, r.s_tilde, r.std_err, t.reference, r.reject_degenerate_frac,
                         r.reject_overflow_frac, cfg.samples, r.realizations, t.extra])
    _emit(out, args, _header(args, _mc_resolved(cfg)), TABLE_COLUMNS, rows)


def _cmd_geodesic(args, out):
    try:
        with open(args.init) as fh:
            init = json.load(fh)
        zeta, zeta_dot = init["zeta"], init["zeta_dot"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read initial state from {args.init}: {exc}") from None
    n = args.n
    m = n_coords(n)
    if len(zeta) != m or len(zeta_dot) != m:
        raise InputError(f"need {m} coordinates for n={n}")
    max_step = args.max_step if args.max_step is not None else args.smax / 100
    traj = geodesic_integrate(ExtendedState(zeta, zeta_dot), n, args.smax, args.tol, args.strict_pd, max_step)
    st = arc_length_to_time(traj) if len(traj) >= 2 else [(traj.states[0].s, 0.0)]
    running = [math.nan] * len(traj)
    if len(traj) >= 10:
        phi0 = TangentState(np.r_[1.0, np.zeros(m - 1)], np.zeros(m))
        phis, _ = tangent_dynamics(traj, phi0, n)
        s0 = traj.states[0].s
        for i, p in enumerate(phis[1:], start=1):
            running[i] = math.log(np.linalg.norm(p.vector)) / (traj.states[i].s - s0)
    cols = ["s", "t"] + [f"zeta_{i + 1}" for i in range(m)] + ["speed", "lambda_running"]
    rows = []
    for (s, t), state, lam in zip(st, traj.states, running):
        rows.append([s, t, *state.zeta.tolist(), math.sqrt(speed_squared(state.zeta, state.zeta_dot, n)), lam])
    header = _header(args, {"max_step": max_step, "boundary": traj.boundary, "status": traj.message})
    _emit(out, args, header, cols, rows)


def _cmd_gibbs(args, out):
    val = gibbs_rg_entropy(args.n, args.k)
    _emit(out, args, _header(args, {}), ["n", "k", "gibbs_entropy"], [[args.n, args.k, val]])


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    buf = io.StringIO()
    try:
        if args.command == "gen":
            buf.write(_cmd_gen(args))
        elif args.command == "entropy":
            _cmd_entropy(args, buf)
        elif args.command == "sweep":
            _cmd_sweep(args, buf)
        elif args.command == "table":
            _cmd_table(args, buf)
        elif args.command == "geodesic":
            _cmd_geodesic(args, buf)
        elif args.command == "gibbs":
            _cmd_gibbs(args, buf)
    except (NumericalFailure, DegenerateMetricError) as exc:
        print(f"netgeom: numerical failure: {exc}", file=stderr)
        return 3
    except (ParseError, GraphError, GenerationError, InputError, DatasetMissing, OSError, ValueError) as exc:
        print(f"netgeom: error: {exc}", file=stderr)
        return 2
    text = buf.getvalue()
    if args.output == "-":
        stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="netgeom: %(levelname)s: %(message)s")
    sys.exit(run())


if __name__ == "__main__":
    main()
