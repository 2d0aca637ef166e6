"""Command-line interface: ``smssvd {decompose,synth,compare,aic}``.

Every command writes its results plus ``manifest.json`` into ``--out``.
Exit codes: 0 success, 2 input error, 3 numerical failure, 4 empty result.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .engine import EngineConfig, smssvd
from .evaluation import aic_curve, compare_methods, parse_methods
from .io import (
    ParseError,
    dump_json,
    file_digest,
    read_ground_truth,
    read_labels,
    read_matrix,
    read_table,
    write_ground_truth,
    write_table,
)
from .selection import NULL_MODELS
from .synthetic import BIPLOT_MODES, InfeasibleSpec, SyntheticSpec, biplot_scenario, generate

log = logging.getLogger("smssvd")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_EMPTY = 0, 2, 3, 4

PRESETS = {"biplot-" + m.replace("_", "-"): m for m in BIPLOT_MODES}
DEFAULT_METHODS = "svd,smssvd,spc:c=2,spc:c=8,spc:c=32"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the clock so repeated runs are byte-identical
    try:
        t = int(os.environ["SOURCE_DATE_EPOCH"])
    except (KeyError, ValueError):
        t = time.time()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


class Run:
    """Collects what goes into ``manifest.json`` for one invocation."""

    def __init__(self, args, argv):
        self.out = Path(args.out)
        self.manifest = {
            "tool": "smssvd",
            "version": __version__,
            "command": args.command,
            "argv": list(argv),
            "seed": args.seed,
            "config": {},
            "inputs": {},
            "outputs": {},
            "started": _timestamp(),
        }

    def add_input(self, name, path):
        p = Path(path)
        if p.is_dir():
            files = sorted(q for q in p.iterdir() if q.is_file())
            self.manifest["inputs"][name] = {
                "path": str(path),
                "files": {q.name: file_digest(q) for q in files},
            }
        else:
            self.manifest["inputs"][name] = {"path": str(path), "blake2b_64": file_digest(p)}

    def prepare(self):
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise CliError(EXIT_INPUT, f"cannot create output directory {self.out}: {e}") from None

    def finish(self, status: str = "ok"):
        outs = sorted(p for p in self.out.iterdir() if p.is_file() and p.name != "manifest.json")
        self.manifest["outputs"] = {p.name: file_digest(p) for p in outs}
        self.manifest["status"] = status
        self.manifest["finished"] = _timestamp()
        dump_json(self.out / "manifest.json", self.manifest)


def _engine_config(args) -> EngineConfig:
    grid = None
    if args.keep_fractions:
        try:
            grid = tuple(float(x) for x in args.keep_fractions.split(","))
        except ValueError:
            raise CliError(EXIT_INPUT, f"--keep-fractions: cannot parse {args.keep_fractions!r}") from None
    try:
        return EngineConfig(max_components=args.max_components, min_score=args.min_score,
                            null_samples=args.null_samples, d_max=args.d_max,
                            keep_fraction_grid=grid, rank_tol=args.rank_tol, seed=args.seed,
                            fixed_d=args.fixed_d, null_model=args.null_model)
    except ValueError as e:
        raise CliError(EXIT_INPUT, str(e)) from None


def _run_numeric(fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except (np.linalg.LinAlgError, FloatingPointError, ValueError) as e:
        raise CliError(EXIT_NUMERIC, f"numerical failure: {e}") from None


def cmd_decompose(args, run: Run) -> int:
    X = read_matrix(args.input)
    run.add_input("matrix", args.input)
    if args.center_rows:
        X = X.center_rows()
    cfg = _engine_config(args)
    run.manifest["config"] = {"engine": cfg.to_dict(), "center_rows": args.center_rows}
    run.prepare()
    dec = _run_numeric(smssvd, X, cfg)

    cols = [f"c{i + 1}" for i in range(dec.total_d)]
    blocks = []
    for b in dec.blocks:
        blocks.append({
            "index": b.iteration_index,
            "d": b.d,
            "L": b.selection.L,
            "kept_variables": [X.variable_ids[i] for i in b.selection.kept_indices],
            "score": b.score_record.to_dict(),
            "sigma": [float(s) for s in b.sigma],
            "residual": b.residual,
        })
    dump_json(run.out / "blocks.json", {"stop_reason": dec.stop_reason,
                                         "total_d": dec.total_d, "blocks": blocks})
    if dec.total_d == 0:
        run.finish("empty")
        log.warning("empty decomposition: %s", dec.stop_reason)
        return EXIT_EMPTY
    write_table(run.out / "U.tsv", dec.U, X.variable_ids, cols, "variable")
    write_table(run.out / "V.tsv", dec.V, X.sample_ids, cols, "sample")
    write_table(run.out / "sigma.tsv", np.column_stack([dec.block_ids(), dec.sigma]),
                cols, ["block", "sigma"], "component")
    run.finish()
    if not args.quiet:
        print(f"{len(dec.blocks)} blocks, {dec.total_d} components ({dec.stop_reason})")
    return EXIT_OK


_SYNTH_FIELDS = ("N", "P", "L", "K", "d", "sigma", "noise_mode")


def cmd_synth(args, run: Run) -> int:
    custom = [f for f in _SYNTH_FIELDS if getattr(args, f) is not None] + (["overlap"] if args.overlap else [])
    try:
        if args.preset:
            if custom:
                raise CliError(EXIT_INPUT, f"--preset cannot be combined with --{custom[0]}")
            gt = biplot_scenario(PRESETS[args.preset], seed=args.seed)
        else:
            base = SyntheticSpec()
            spec = SyntheticSpec(
                N=args.N if args.N is not None else base.N,
                P=args.P if args.P is not None else base.P,
                L=args.L if args.L is not None else base.L,
                K=args.K if args.K is not None else base.K,
                d=args.d if args.d is not None else base.d,
                noise_sigma=args.sigma if args.sigma is not None else base.noise_sigma,
                seed=args.seed, disjoint=not args.overlap,
                noise_mode=args.noise_mode or base.noise_mode)
            gt = generate(spec)
    except InfeasibleSpec as e:
        raise CliError(EXIT_INPUT, f"infeasible spec: {e}") from None
    run.manifest["config"] = {"preset": args.preset, "spec": gt.spec.to_dict()}
    run.prepare()
    write_ground_truth(gt, run.out)
    run.finish()
    if not args.quiet:
        P, N = gt.X_noisy.shape
        print(f"wrote {gt.K} signals, X is {P} x {N}")
    return EXIT_OK


def cmd_compare(args, run: Run) -> int:
    truth = read_ground_truth(args.truth)
    run.add_input("truth", args.truth)
    try:
        methods = parse_methods(args.methods)
    except ValueError as e:
        raise CliError(EXIT_INPUT, str(e)) from None
    if not methods:
        raise CliError(EXIT_INPUT, "no methods given")
    P = truth.X_noisy.shape[0]
    for m in methods:
        if m.name == "spc" and not 1.0 <= m.resolve_c(P) <= np.sqrt(P) * (1 + 1e-12):
            raise CliError(EXIT_INPUT, f"{m.label}: c={m.resolve_c(P):g} outside [1, sqrt(P)]")
    cfg = _engine_config(args)
    run.manifest["config"] = {"engine": cfg.to_dict(), "methods": [m.label for m in methods],
                              "components": args.components}
    run.prepare()
    rows = _run_numeric(compare_methods, truth, methods, cfg, args.components)
    lines = ["method\tsignal\terr\tstrength\tflagged"]
    for r in rows:
        lines.append(f"{r.method}\t{r.signal}\t{r.err:.17g}\t{r.strength:.17g}\t"
                     f"{'true' if r.flagged else 'false'}")
    (run.out / "results.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    run.finish()
    if not args.quiet:
        for r in rows:
            print(f"{r.method:>14}  k={r.signal}  err={r.err:.3e}  strength={r.strength:.3e}"
                  + ("  (flagged)" if r.flagged else ""))
    return EXIT_OK


def _sample_coordinates(source):
    p = Path(source)
    if p.is_dir():
        V, sids, cols = read_table(p / "V.tsv")
        sig, comp, _ = read_table(p / "sigma.tsv")
        if tuple(comp) != tuple(cols):
            raise ParseError(p / "sigma.tsv", "components differ from V.tsv")
        return V * sig[:, 1], sids
    Z, sids, _ = read_table(p)
    return Z, sids


def cmd_aic(args, run: Run) -> int:
    Z, sids = _sample_coordinates(args.source)
    labels = read_labels(args.labels)
    run.add_input("coordinates", args.source)
    run.add_input("labels", args.labels)
    known = set(sids)
    for sid in labels:
        if sid not in known:
            raise CliError(EXIT_INPUT, f"unknown sample ID {sid!r} in {args.labels}")
    missing = [s for s in sids if s not in labels]
    if missing:
        raise CliError(EXIT_INPUT, f"sample ID {missing[0]!r} has no label")
    dims = args.dims if args.dims is not None else Z.shape[1]
    if not 1 <= dims <= Z.shape[1]:
        raise CliError(EXIT_INPUT, f"--dims {dims} outside [1, {Z.shape[1]}]")
    run.manifest["config"] = {"dims": dims}
    run.prepare()
    res = _run_numeric(aic_curve, Z, [labels[s] for s in sids], dims)
    table = np.array([[r.loglik, r.joint_loglik, r.n_params, r.aic, float(r.ridged)] for r in res])
    write_table(run.out / "aic.tsv", table, [str(r.dims) for r in res],
                ["loglik", "joint_loglik", "n_params", "aic", "ridged"], "dims")
    run.finish()
    if not args.quiet:
        best = min(res, key=lambda r: r.aic)
        for r in res:
            print(f"m={r.dims:<3d} aic={r.aic:.6g}" + ("  <- min" if r is best else ""))
    return EXIT_OK


def _nonneg_int(text):
    v = int(text)
    if v < 0 or v >= 2**64:
        raise argparse.ArgumentTypeError(f"{text} is not a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smssvd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    # global flags work before or after the subcommand; SUPPRESS keeps the
    # subparser from overwriting a value given before it
    def add_globals(p, suppress):
        dflt = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        p.add_argument("--seed", type=_nonneg_int, default=dflt(0), help="root seed (default 0)")
        p.add_argument("--out", default=dflt(None), help="output directory")
        p.add_argument("--quiet", action="store_true", default=dflt(False),
                       help="only report warnings and errors")

    add_globals(parser, False)
    common = argparse.ArgumentParser(add_help=False)
    add_globals(common, True)

    engine = argparse.ArgumentParser(add_help=False)
    g = engine.add_argument_group("decomposition")
    g.add_argument("--max-components", type=int, default=20,
                   help="total rank budget (default 20)")
    g.add_argument("--min-score", type=float, default=0.0,
                   help="stop when the best projection score is at most this (default 0)")
    g.add_argument("--null-samples", type=int, default=20,
                   help="null draws per iteration (default 20)")
    g.add_argument("--null-model", choices=NULL_MODELS, default="permutation",
                   help="null for the projection score (default permutation)")
    g.add_argument("--d-max", type=int, default=None,
                   help="largest block dimension searched (default min(N-1, 20))")
    g.add_argument("--fixed-d", type=int, default=None,
                   help="use this block dimension instead of searching")
    g.add_argument("--keep-fractions", default=None, help="comma-separated, e.g. 1,0.5,0.25")
    g.add_argument("--rank-tol", type=float, default=1e-10,
                   help="relative singular value cutoff for numerical rank")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[common, engine], help="run SMSSVD on a TSV matrix")
    p.add_argument("input", help="TSV matrix, variables x samples")
    p.add_argument("--center-rows", action="store_true", help="subtract each variable's mean")

    p = sub.add_parser("synth", parents=[common], help="generate planted signals")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--N", type=int)
    p.add_argument("--P", type=int)
    p.add_argument("--L", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--sigma", type=float, help="noise standard deviation")
    p.add_argument("--noise-mode", choices=("all", "off_support"))
    p.add_argument("--overlap", action="store_true", help="allow overlapping supports")

    p = sub.add_parser("compare", parents=[common, engine], help="score methods on ground truth")
    p.add_argument("truth", help="directory written by 'synth'")
    p.add_argument("--methods", default=DEFAULT_METHODS,
                   help="comma-separated: svd, smssvd, spc:c=8, spc:c=r0.04 (c = 0.04 sqrt(P)); "
                        "spc:c=2,8,32 expands to three SPC runs")
    p.add_argument("--components", type=int, default=None,
                   help="rank-1 components per method (default: total signal rank)")

    p = sub.add_parser("aic", parents=[common], help="AIC of a labelled sample representation")
    p.add_argument("source", help="coordinates TSV (samples x dims) or a 'decompose' output directory")
    p.add_argument("--labels", required=True, help="TSV: sample ID, label (no header)")
    p.add_argument("--dims", type=int, default=None)
    return parser


COMMANDS = {"decompose": cmd_decompose, "synth": cmd_synth, "compare": cmd_compare, "aic": cmd_aic}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr, force=True)
    if args.out is None:
        print("smssvd: error: --out is required", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args, Run(args, argv))
    except CliError as e:
        print(f"smssvd: error: {e}", file=sys.stderr)
        return e.code
    except (ParseError, OSError) as e:
        print(f"smssvd: error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
