"""Command-line workbench.

Subcommands: ``build-kernels``, ``validate``, ``fit``, ``sweep``, ``compare``
and ``export``.  Exit codes: 0 success, 1 usage error, 2 data or parse
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data_io import load_dataset, load_kernel_manifest, load_labels, save_kernel_bank, save_matrix_csv
from .errors import KernelError, NumericalError, ParseError
from .experiment import (FIGURES, METHODS, ExperimentConfig, export_figures, load_run, run_experiment,
                         save_run, write_comparison_table)
from .kernels import KernelSpec, build_kernel_bank, paper_recipe, validate_bank
from .metrics import evaluate
from .solver import SolveOptions, fit

log = logging.getLogger("repmkkm")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Raise instead of exiting with argparse's default status 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _recipe(value):
    if value == "paper":
        return paper_recipe()
    path = Path(value)
    try:
        specs = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read recipe ({exc.strerror})", path=path) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", path=path, line=exc.lineno) from exc
    try:
        return [KernelSpec(**spec) for spec in specs]
    except (TypeError, ValueError) as exc:
        raise ParseError(f"invalid kernel spec: {exc}", path=path) from exc


def _load_bank(args):
    """Bank and labels (or ``None``) from ``--data`` or ``--kernels``."""
    if args.data:
        X, truth = load_dataset(args.data, header=args.header)
        return build_kernel_bank(X, _recipe(args.recipe)), truth
    bank = load_kernel_manifest(args.kernels, strict=getattr(args, "strict", False))
    truth = load_labels(args.labels) if args.labels else None
    if truth is not None and truth.size != bank.n:
        raise ParseError(f"{truth.size} labels for {bank.n} samples", path=args.labels)
    return bank, truth


def _add_source(p, labels=True):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="feature CSV, integer label in the last column")
    src.add_argument("--kernels", help="kernel manifest (one kernel CSV per line)")
    p.add_argument("--header", action="store_true", help="skip the first row of --data")
    p.add_argument("--recipe", default="paper", help="'paper' or a JSON list of kernel specs")
    if labels:
        p.add_argument("--labels", help="label file for --kernels (one integer per line)")


def cmd_build_kernels(args):
    X, _ = load_dataset(args.data, header=args.header)
    bank = build_kernel_bank(X, _recipe(args.recipe))
    manifest = save_kernel_bank(bank, args.out)
    print(f"wrote {bank.m} kernels ({bank.n}x{bank.n}) and {manifest}")
    return EXIT_OK


def cmd_validate(args):
    bank, _ = _load_bank(args)
    report = validate_bank(bank, tol=args.tol)
    print(report.summary())
    flagged = report.flagged()
    print(f"{bank.m - len(flagged)}/{bank.m} kernels passed")
    if flagged and args.strict:
        return EXIT_DATA
    return EXIT_OK


def cmd_fit(args):
    bank, truth = _load_bank(args)
    k = args.k
    if k is None:
        if truth is None:
            raise UsageError("fit: error: --k is required when no labels are given")
        k = int(np.unique(truth).size)
    opts = SolveOptions(lam=args.lam, epsilon=args.epsilon, max_outer_iters=args.max_iters,
                        seed=args.seed, restarts=args.restarts)
    res = fit(bank, k, opts)
    summary = {
        "lambda": res.lam, "k": k, "m": bank.m, "n": bank.n, "iterations": res.iterations,
        "converged": res.converged, "objective": res.objective, "weights": res.w.tolist(),
        "selected_kernels": res.selected_kernels().tolist(),
        "kernels": [s.label for s in bank.specs],
    }
    if truth is not None:
        summary["metrics"] = evaluate(res.labels, truth).as_dict()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        np.savetxt(out / "labels.csv", res.labels, fmt="%d")
        save_matrix_csv(out / "Y.csv", res.Y)
        save_matrix_csv(out / "C.csv", res.C)
        save_matrix_csv(out / "weights.csv", res.w[:, None])
        with open(out / "trace.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "objective", "qp_kkt", "qp_iterations"])
            for rec in res.trace:
                writer.writerow([rec.iteration, f"{rec.objective:.17g}", f"{rec.qp_kkt:.3e}", rec.qp_iterations])
        (out / "summary.json").write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _config(args, default_methods):
    overrides = {"out": args.out, "seed": args.seed, "restarts": args.restarts}
    if args.methods:
        overrides["methods"] = [m.strip() for m in args.methods.split(",")]
    if args.lambdas:
        overrides["lambdas"] = [float(v) for v in args.lambdas.split(",")]
    config = ExperimentConfig.from_file(args.config, defaults={"methods": list(default_methods)}, **overrides)
    if config.out is None:
        raise UsageError(f"{args.command}: error: an output directory is required (--out or 'out' in config)")
    return config


def _run(config, table):
    records = run_experiment(config)
    out = save_run(records, config.out, config)
    export_figures(records, out / "figures")
    if table:
        write_comparison_table(records, out / "table.csv")
    for rec in records:
        lam = "" if rec.lam is None else f" lambda={rec.lam:g}"
        status = f"error: {rec.error}" if rec.error else (
            f"acc={100 * rec.acc:.2f} nmi={100 * rec.nmi:.2f} purity={100 * rec.purity:.2f}")
        print(f"{rec.method}{lam}: {status}{'  [best]' if rec.best else ''}")
    print(f"results in {out}")
    if records and all(rec.error for rec in records):
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_sweep(args):
    return _run(_config(args, ["Proposed"]), table=False)


def cmd_compare(args):
    return _run(_config(args, list(METHODS)), table=True)


def cmd_export(args):
    records = load_run(args.run)
    figures = FIGURES if args.figures == "all" else tuple(f.strip() for f in args.figures.split(","))
    unknown = [f for f in figures if f not in FIGURES]
    if unknown:
        raise UsageError(f"export: error: unknown figures {unknown}; choose from {list(FIGURES)} or 'all'")
    out = Path(args.out) if args.out else Path(args.run) / "figures"
    for path in export_figures(records, out, figures):
        print(path)
    if any(r.method != "Proposed" for r in records):
        print(write_comparison_table(records, out / "table.csv"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="repmkkm", description="Multiple kernel k-means with representative kernels.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-kernels", help="build and save a kernel bank from features")
    p.add_argument("--data", required=True)
    p.add_argument("--header", action="store_true")
    p.add_argument("--recipe", default="paper")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_kernels)

    p = sub.add_parser("validate", help="check symmetry, spectrum and diagonal of each kernel")
    _add_source(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--strict", action="store_true", help="exit 2 if any kernel is flagged")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fit", help="cluster with one lambda")
    _add_source(p)
    p.add_argument("--k", type=int)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    for name, func, help_ in (("sweep", cmd_sweep, "grid-search lambda for the proposed method"),
                              ("compare", cmd_compare, "run all methods and write a comparison table")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True)
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--restarts", type=int)
        p.add_argument("--methods", help="comma-separated subset of " + ",".join(METHODS))
        p.add_argument("--lambdas", help="comma-separated lambda values")
        p.set_defaults(func=func)

    p = sub.add_parser("export", help="write plot-ready CSVs from a saved run")
    p.add_argument("--run", required=True)
    p.add_argument("--figures", default="all", help="'all' or a comma list of " + ",".join(FIGURES))
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ParseError, KernelError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
