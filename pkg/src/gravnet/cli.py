"""Command-line front end: measures | fit | synth | report.

Exit codes: 0 on success, 2 on user/input errors, 1 on internal errors.
Outputs are byte-deterministic for a fixed manifest: machine CSVs use
shortest round-trip float formatting, human tables fixed 6-significant-digit
formatting, and no timestamps are ever emitted.

Heavy numeric imports happen inside the subcommands so that
``--deterministic`` can pin BLAS/OpenMP thread counts first.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, field

__all__ = ["main", "main_entry", "RunManifest"]

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS")


@dataclass
class RunManifest:
    """Everything that determines a run's outputs, plus a hash over it."""

    subcommand: str
    inputs: dict[str, str]
    options: dict[str, object]
    outputs: dict[str, str]
    tool_version: str = ""
    config_hash: str = ""

    def finalize(self) -> "RunManifest":
        from . import __version__
        self.tool_version = __version__
        digest = hashlib.sha256()
        digest.update(self.subcommand.encode())
        for name in sorted(self.inputs):
            digest.update(name.encode())
            with open(self.inputs[name], "rb") as fh:
                digest.update(hashlib.sha256(fh.read()).digest())
        digest.update(json.dumps(self.options, sort_keys=True).encode())
        self.config_hash = digest.hexdigest()
        return self

    def write(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            json.dump(asdict(self), fh, sort_keys=True, indent=2)
            fh.write("\n")


def _load_panel(path: str):
    import pandas as pd

    from .errors import MissingColumn
    from .netcore import load_panel
    try:
        return load_panel(path)
    except FileNotFoundError:
        raise MissingColumn(f"{path}: no such file")
    except pd.errors.EmptyDataError:
        raise MissingColumn(f"{path}: empty input file")


def _measure_table(panel, alpha: float, cmb_method: str, cmb_scale: float):
    from .measures import measure_table
    from .netcore import build_networks
    _, C = build_networks(panel)
    return C, measure_table(C, alpha, cmb_method=cmb_method, cmb_scale=cmb_scale)


def _open_out(path: str | None):
    if path is None:
        return sys.stdout, False
    return open(path, "w", newline=""), True


def cmd_measures(args) -> int:
    from .measures import write_measure_csv
    panel = _load_panel(args.input)
    _, table = _measure_table(panel, args.alpha, args.cmb_method, args.cmb_scale)
    fh, close = _open_out(args.out)
    try:
        write_measure_csv(table, fh)
    finally:
        if close:
            fh.close()
    _maybe_manifest(args, inputs={"dyads": args.input},
                    options={"alpha": args.alpha, "cmb_method": args.cmb_method,
                             "cmb_scale": args.cmb_scale},
                    outputs={"measures": args.out or "-"})
    return 0


def cmd_fit(args) -> int:
    from .econ import fit_model, load_spec
    from .econ.modelspec import EquationSystem
    from .tables import render_fit_table, write_fit_csv

    panel = _load_panel(args.input)
    try:
        spec = load_spec(args.spec)
    except FileNotFoundError:
        from .errors import SpecError
        raise SpecError(f"{args.spec}: no such file")
    if args.alpha is not None:
        spec.alpha = args.alpha
    _, table = _measure_table(panel, spec.alpha, args.cmb_method, args.cmb_scale)
    fit = fit_model(panel, table, spec)

    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_fit_csv(fit, fh)
    sys.stdout.write(render_fit_table(fit))
    _maybe_manifest(args, inputs={"dyads": args.input, "spec": args.spec},
                    options={"alpha": spec.alpha, "cmb_method": args.cmb_method,
                             "cmb_scale": args.cmb_scale},
                    outputs={"fit": args.out or "-"})
    return 0


def cmd_synth(args) -> int:
    from .errors import ConfigInvalid
    from .netcore import write_panel
    from .synth import DGPConfig, generate, write_truth

    data = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigInvalid(f"{args.config}: no such file")
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"{args.config}: invalid JSON ({exc})")
    if args.seed is not None:
        data["seed"] = args.seed
    config = DGPConfig.from_dict(data)

    panel, truth = generate(config)
    write_panel(panel, args.out)
    if args.truth:
        write_truth(truth, args.truth)
    inputs = {"config": args.config} if args.config else {}
    _maybe_manifest(args, inputs=inputs,
                    options={"seed": config.seed, "n_countries": config.n_countries},
                    outputs={"dyads": args.out, "truth": args.truth or ""})
    return 0


def cmd_report(args) -> int:
    from .econ import correlations, summarize
    from .netcore import build_networks, classify_top_edges
    from .tables import render_matrix, write_matrix_csv, write_summary_csv

    panel = _load_panel(args.input)
    T, C = build_networks(panel)
    from .measures import measure_table
    table = measure_table(C, args.alpha, cmb_method=args.cmb_method,
                          cmb_scale=args.cmb_scale)

    summary = summarize(panel, table)
    corr = correlations(panel, table)
    edges = classify_top_edges(T, C, args.top_q)

    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, name + ".csv")
             for name in ("summary", "correlations", "top_edges")}
    with open(paths["summary"], "w", newline="") as fh:
        write_summary_csv(summary, fh)
    with open(paths["correlations"], "w", newline="") as fh:
        write_matrix_csv(corr, fh)
    with open(paths["top_edges"], "w", newline="") as fh:
        fh.write("origin,dest,class,trade_weight,control_weight\n")
        for e in edges:
            fh.write(f"{e.origin},{e.dest},{e.edge_class},"
                     f"{repr(e.trade_weight)},{repr(e.control_weight)}\n")

    buf = io.StringIO()
    buf.write("Summary statistics\n")
    write_summary_csv(summary, buf)
    buf.write("\nPairwise correlations\n")
    buf.write(render_matrix(corr))
    buf.write(f"\nTop edges (q = {args.top_q:g}): {len(edges)} edges -> "
              f"{paths['top_edges']}\n")
    sys.stdout.write(buf.getvalue())
    _maybe_manifest(args, inputs={"dyads": args.input},
                    options={"alpha": args.alpha, "top_q": args.top_q,
                             "cmb_method": args.cmb_method, "cmb_scale": args.cmb_scale},
                    outputs=paths)
    return 0


def _maybe_manifest(args, inputs, options, outputs) -> None:
    if getattr(args, "manifest", None):
        manifest = RunManifest(args.command, inputs, options, outputs).finalize()
        manifest.write(args.manifest)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gravnet",
        description="Corporate-control network measures and gravity-model "
                    "estimation over dyadic trade data.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_cmb=True):
        p.add_argument("--deterministic", action="store_true",
                       help="pin numeric libraries to one thread")
        p.add_argument("--manifest", metavar="PATH",
                       help="write a JSON run manifest (inputs, options, hash)")
        if with_cmb:
            p.add_argument("--cmb-scale", type=float, default=1.0,
                           help="multiply communicability values (default 1)")
            p.add_argument("--cmb-method", choices=("spectral", "series"),
                           default="spectral")

    p = sub.add_parser("measures", help="emit the per-dyad measure CSV")
    p.add_argument("--input", required=True, help="dyads CSV")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.add_argument("--alpha", type=float, default=1.0,
                   help="power on control counts in edge lengths (default 1)")
    common(p)
    p.set_defaults(func=cmd_measures)

    p = sub.add_parser("fit", help="estimate a model spec; prints the table")
    p.add_argument("--input", required=True, help="dyads CSV")
    p.add_argument("--spec", required=True, help="model spec file")
    p.add_argument("--out", help="machine CSV output path")
    p.add_argument("--alpha", type=float, default=None,
                   help="override the spec file's alpha")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("synth", help="generate a seeded synthetic panel")
    p.add_argument("--config", help="JSON generator config")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--out", required=True, help="output dyads CSV")
    p.add_argument("--truth", help="also write the ground-truth CSV here")
    common(p, with_cmb=False)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="summary stats, correlations, top edges")
    p.add_argument("--input", required=True, help="dyads CSV")
    p.add_argument("--out", help="output directory (default .)")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--top-q", type=float, default=0.025,
                   help="edge-classification quantile (default 0.025)")
    common(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.deterministic:
        for var in _THREAD_VARS:
            os.environ.setdefault(var, "1")
    from .errors import GravnetError
    try:
        return args.func(args)
    except GravnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
