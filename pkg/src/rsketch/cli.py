"""Command-line interface.

Subcommands::

    rsketch gen     --kind random-regular --n 500 --d 8 --out g.edges
    rsketch sketch  g.edges --epsilon 0.25 --out g.sketch
    rsketch query   g.sketch --pairs pairs.txt [--exact --graph g.edges]
    rsketch trees   g.edges --delta 0.5 [--exact]
    rsketch dd      m.ddm [--alpha 1.0] [--delta 0.5 | --reff pairs.txt]

Every run writes a JSON manifest (command, resolved arguments, seed,
wall time, SHA-256 of outputs) next to its primary output, or to
``--manifest PATH``.  Randomized commands take ``--seed``; without it a
fresh seed is drawn and printed so the run stays reproducible.

Exit codes: 0 success, 2 invalid input, 3 request beyond capability,
4 failure to converge.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import io as rio
from .ddmatrix import certified_alpha, dd_effective_resistance_sketch, validate_dd
from .determinant import DetConfig, dd_det_approx, det_approx
from .errors import CapabilityError, ConvergenceError, ValidationError
from .graphs import GraphGeneratorSpec, generate
from .oracle import ORACLE_MAX_N, exact_effective_resistance, matrix_tree_log_count
from .sketch import build_sketch, compute_params, estimate_spectral_gap, query_batch

__all__ = ["main", "RunManifest"]

_EXIT_VALIDATION = 2
_EXIT_CAPABILITY = 3
_EXIT_CONVERGENCE = 4

# Below this estimated spectral gap the walk horizon (and with it sketch
# size and build time) blows up as 1/nu2; demand an explicit opt-in.
_NU2_FLOOR = 0.01


@dataclass
class RunManifest:
    """Reproducibility record written after every CLI run."""

    command: str
    arguments: dict
    seed: int | None
    started_utc: str
    wall_seconds: float = 0.0
    outputs: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    package: str = "rsketch"
    version: str = "0.1.0"

    def add_output(self, path: str | Path) -> None:
        data = Path(path).read_bytes()
        self.outputs.append({
            "path": str(path),
            "bytes": len(data),
            "sha256": hashlib.sha256(data).hexdigest(),
        })

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=1) + "\n", encoding="utf-8")


def _now_iso() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    seed = int.from_bytes(os.urandom(8), "little") >> 1
    print(f"seed not given; using generated seed {seed}", file=sys.stderr)
    return seed


def _manifest_path(args, default_anchor: str | Path) -> Path:
    if getattr(args, "manifest", None):
        return Path(args.manifest)
    return Path(f"{default_anchor}.manifest.json")


def _emit(args, human: str, payload: dict) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=1))
    else:
        print(human)


# =============================================================================
# Subcommands
# =============================================================================


def cmd_gen(args) -> int:
    seed = _resolve_seed(args)
    spec = GraphGeneratorSpec(kind=args.kind, n=args.n, d=args.d, p=args.p,
                              weight_low=args.weight_low, weight_high=args.weight_high)
    man = RunManifest(command="gen", arguments={
        "kind": args.kind, "n": args.n, "d": args.d, "p": args.p,
        "weight_low": args.weight_low, "weight_high": args.weight_high,
        "out": str(args.out)}, seed=seed, started_utc=_now_iso())
    t0 = time.perf_counter()
    g = generate(spec, seed)
    rio.write_edge_list(g, args.out, header=f"kind={args.kind} n={g.n} m={g.m} seed={seed}")
    man.wall_seconds = time.perf_counter() - t0
    man.add_output(args.out)
    man.results = {"n": g.n, "m": g.m, "total_weight": g.total_weight}
    man.write(_manifest_path(args, args.out))
    _emit(args, f"wrote {args.out}: n={g.n} m={g.m} seed={seed}",
          {"out": str(args.out), "n": g.n, "m": g.m, "seed": seed})
    return 0


def cmd_sketch(args) -> int:
    seed = _resolve_seed(args)
    g = rio.read_edge_list(args.graph)
    man = RunManifest(command="sketch", arguments={
        "graph": str(args.graph), "epsilon": args.epsilon, "nu2": args.nu2,
        "estimate_nu2": args.estimate_nu2, "force": args.force,
        "c_t0": args.c_t0, "c_s": args.c_s, "workers": args.workers,
        "format": args.format, "out": str(args.out)},
        seed=seed, started_utc=_now_iso())
    t0 = time.perf_counter()
    if args.nu2 is not None:
        nu2 = args.nu2
    else:
        nu2 = estimate_spectral_gap(g)
        if nu2 < _NU2_FLOOR and not args.force:
            raise ValidationError(
                f"estimated spectral gap {nu2:.3g} is below the floor "
                f"{_NU2_FLOOR}; the graph is a poor expander and the sketch "
                f"would be very large — rerun with --force to proceed anyway, "
                f"or supply --nu2 explicitly")
    params = compute_params(g.n, g.weight_ratio(), args.epsilon, nu2,
                            c_t0=args.c_t0, c_s=args.c_s)
    sk = build_sketch(g, params, seed, workers=args.workers)
    if args.format == "binary":
        rio.save_sketch_binary(sk, args.out)
    else:
        rio.save_sketch_json(sk, args.out)
    man.wall_seconds = time.perf_counter() - t0
    man.add_output(args.out)
    man.results = {
        "n": g.n, "nu2": nu2, "t0": params.t0, "s": params.s,
        "threshold": params.threshold, "entries": sk.entry_count(),
        "mean_entries_per_vertex": sk.entry_count() / g.n,
    }
    man.write(_manifest_path(args, args.out))
    _emit(args,
          f"sketch written to {args.out}: n={g.n} nu2={nu2:.4f} t0={params.t0} "
          f"s={params.s} entries={sk.entry_count()} "
          f"({sk.entry_count() / g.n:.1f}/vertex) in {man.wall_seconds:.1f}s",
          {"out": str(args.out), "seed": seed, **man.results})
    return 0


def _load_sketch_any(path: str | Path):
    head = Path(path).open("rb").read(4)
    if head == rio.SKETCH_MAGIC:
        return rio.load_sketch_binary(path)
    return rio.load_sketch_json(path)


def cmd_query(args) -> int:
    sk = _load_sketch_any(args.sketch)
    if args.pairs:
        pairs = rio.read_pairs(args.pairs)
    elif args.pair:
        pairs = np.asarray(args.pair, dtype=np.int64)
    else:
        raise ValidationError("provide --pairs FILE or at least one --pair U V")
    exact_mode = args.exact or args.graph is not None
    if args.exact and args.graph is None:
        raise ValidationError("--exact needs --graph FILE to compute the oracle column")
    man = RunManifest(command="query", arguments={
        "sketch": str(args.sketch), "pairs": str(args.pairs), "exact": exact_mode},
        seed=None, started_utc=_now_iso())
    t0 = time.perf_counter()
    est = query_batch(sk, pairs)
    man.wall_seconds = time.perf_counter() - t0

    records = []
    exact_vals = None
    if exact_mode:
        g = rio.read_edge_list(args.graph)
        exact_vals = [exact_effective_resistance(g, int(u), int(v)) for u, v in pairs]
    for i, (u, v) in enumerate(pairs):
        rec = {"u": int(u), "v": int(v), "resistance": float(est[i])}
        if exact_vals is not None:
            rec["exact"] = exact_vals[i]
            rec["rel_error"] = abs(est[i] - exact_vals[i]) / exact_vals[i] if exact_vals[i] else 0.0
        records.append(rec)
    man.results = {"pairs": len(records),
                   "mean_resistance": float(np.mean(est))}
    man.write(_manifest_path(args, f"{args.sketch}.query"))

    if args.json:
        print(json.dumps({"queries": records}, indent=1))
    else:
        for rec in records:
            line = f"{rec['u']} {rec['v']} {rec['resistance']:.6g}"
            if "exact" in rec:
                line += f"  exact={rec['exact']:.6g} rel_err={rec['rel_error']:.3%}"
            print(line)
    return 0


def _format_tree_count(log_value: float) -> dict:
    log10 = log_value / math.log(10.0)
    out = {"log_count": log_value, "log10_count": log10,
           "digits": int(math.floor(log10)) + 1 if log_value > 0 else 1}
    if log10 < 15:
        out["count"] = math.exp(log_value)
    return out


def cmd_trees(args) -> int:
    g = rio.read_edge_list(args.graph)
    if args.exact:
        man = RunManifest(command="trees", arguments={
            "graph": str(args.graph), "exact": True}, seed=None, started_utc=_now_iso())
        t0 = time.perf_counter()
        log_value = matrix_tree_log_count(g)
        man.wall_seconds = time.perf_counter() - t0
        info = _format_tree_count(log_value)
        man.results = info
        man.write(_manifest_path(args, f"{args.graph}.trees"))
        _emit(args, _tree_text(g, info, "exact"), {"mode": "exact", **info})
        return 0

    if args.delta is None:
        raise ValidationError("provide --delta for approximation or --exact")
    seed = _resolve_seed(args)
    man = RunManifest(command="trees", arguments={
        "graph": str(args.graph), "delta": args.delta, "workers": args.workers},
        seed=seed, started_utc=_now_iso())
    cfg = DetConfig(workers=args.workers)
    t0 = time.perf_counter()
    est = det_approx(g, args.delta, seed, config=cfg)
    man.wall_seconds = time.perf_counter() - t0
    info = _format_tree_count(est.log_value)
    man.results = {**info, "delta_budget_spent": est.delta_budget_spent,
                   "levels": len(est.trace)}
    man.write(_manifest_path(args, f"{args.graph}.trees"))
    _emit(args, _tree_text(g, info, f"delta={args.delta} seed={seed} "
                                    f"[{man.wall_seconds:.1f}s, {len(est.trace)} events]"),
          {"mode": "approx", "seed": seed, "trace_events": len(est.trace), **info})
    return 0


def _tree_text(g, info: dict, tag: str) -> str:
    line = (f"n={g.n} m={g.m}: log tree count = {info['log_count']:.6f} "
            f"(~{info['digits']} digits; {tag})")
    if "count" in info:
        line += f"\ncount ~= {info['count']:.6g}"
    return line


def cmd_dd(args) -> int:
    if args.delta is not None and args.reff is not None:
        raise ValidationError("choose one of --delta (determinant) or --reff (resistances)")
    m = rio.read_dd_matrix(args.matrix)
    alpha = args.alpha if args.alpha is not None else certified_alpha(m)
    validate_dd(m, min(alpha, 1e9) if math.isinf(alpha) else alpha)
    man = RunManifest(command="dd", arguments={
        "matrix": str(args.matrix), "alpha": None if math.isinf(alpha) else alpha,
        "delta": args.delta, "reff": str(args.reff) if args.reff else None,
        "epsilon": args.epsilon}, seed=None, started_utc=_now_iso())
    results: dict = {"n": m.n,
                     "certified_alpha": None if math.isinf(certified_alpha(m))
                     else certified_alpha(m)}
    payload: dict = dict(results)
    text = f"matrix ok: n={m.n}, certified alpha={results['certified_alpha']}"

    if args.delta is not None:
        seed = _resolve_seed(args)
        man.seed = seed
        t0 = time.perf_counter()
        est = dd_det_approx(m, args.delta, seed,
                            alpha=None if math.isinf(alpha) else alpha)
        man.wall_seconds = time.perf_counter() - t0
        results.update({"log_det": est.log_value,
                        "delta_budget_spent": est.delta_budget_spent})
        payload = dict(results)
        text += (f"\nlog det = {est.log_value:.6f} "
                 f"(delta={args.delta}, seed={seed}, {man.wall_seconds:.1f}s)")
    elif args.reff is not None:
        seed = _resolve_seed(args)
        man.seed = seed
        pairs = rio.read_pairs(args.reff)
        alpha_fin = min(alpha, 1e9) if math.isinf(alpha) else alpha
        t0 = time.perf_counter()
        sk, _walker = dd_effective_resistance_sketch(
            m, alpha_fin, args.epsilon, seed, workers=args.workers)
        est = query_batch(sk, pairs)
        man.wall_seconds = time.perf_counter() - t0
        records = [{"u": int(u), "v": int(v), "resistance": float(r)}
                   for (u, v), r in zip(pairs, est)]
        results.update({"pairs": len(records), "epsilon": args.epsilon,
                        "t0": sk.params.t0, "s": sk.params.s,
                        "mean_resistance": float(np.mean(est))})
        payload = {**dict(results), "resistances": records}
        text += "\n" + "\n".join(f"{r['u']} {r['v']} {r['resistance']:.6g}"
                                 for r in records)
    man.results = results
    man.write(_manifest_path(args, f"{args.matrix}.dd"))
    _emit(args, text, payload)
    return 0


# =============================================================================
# Parser and entry point
# =============================================================================


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rsketch",
        description="Walk-sketch effective resistances and spanning-tree counts")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a test graph")
    p.add_argument("--kind", required=True,
                   choices=["complete", "random-regular", "erdos-renyi", "dumbbell"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=None, help="degree (random-regular)")
    p.add_argument("--p", type=float, default=None, help="edge probability (erdos-renyi)")
    p.add_argument("--weight-low", type=float, default=1.0)
    p.add_argument("--weight-high", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sketch", help="build a resistance sketch for a graph")
    p.add_argument("graph")
    p.add_argument("--epsilon", type=float, required=True)
    gap = p.add_mutually_exclusive_group()
    gap.add_argument("--nu2", type=float, default=None,
                     help="normalized-Laplacian spectral gap, if known")
    gap.add_argument("--estimate-nu2", action="store_true",
                     help="estimate the gap by power iteration (also the "
                          "default when --nu2 is absent)")
    p.add_argument("--force", action="store_true",
                   help=f"build even when the estimated gap is below {_NU2_FLOOR}")
    p.add_argument("--c-t0", dest="c_t0", type=float, default=2.0)
    p.add_argument("--c-s", dest="c_s", type=float, default=4.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=["binary", "json"], default="binary")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sketch)

    p = sub.add_parser("query", help="query resistances from a sketch file")
    p.add_argument("sketch")
    p.add_argument("--pairs", default=None, help="file with 'u v' lines")
    p.add_argument("--pair", nargs=2, type=int, action="append", default=None,
                   metavar=("U", "V"))
    p.add_argument("--exact", action="store_true",
                   help="add oracle and relative-error columns (needs --graph)")
    p.add_argument("--graph", default=None,
                   help="edge list for the exact comparison column")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("trees", help="count spanning trees (log domain)")
    p.add_argument("graph")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--exact", action="store_true",
                   help=f"dense exact count (n <= {ORACLE_MAX_N})")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_trees)

    p = sub.add_parser("dd", help="validate a DD matrix / estimate its log det")
    p.add_argument("matrix")
    p.add_argument("--alpha", type=float, default=None,
                   help="dominance margin to validate (default: certified)")
    p.add_argument("--delta", type=float, default=None,
                   help="log-det accuracy target; omit to only validate")
    p.add_argument("--reff", default=None, metavar="PAIRS",
                   help="pairs file; print DD effective resistances instead "
                        "of a determinant")
    p.add_argument("--epsilon", type=float, default=0.5,
                   help="resistance accuracy for --reff")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_dd)

    for sp in sub.choices.values():
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--json", action="store_true", help="machine-readable stdout")
        sp.add_argument("--manifest", default=None, help="manifest path override")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_VALIDATION
    except CapabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CAPABILITY
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
