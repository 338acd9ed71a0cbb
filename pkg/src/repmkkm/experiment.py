"""Experiment orchestration: lambda sweeps, method comparison and exports.

A run directory holds ``records.csv`` (one row per method and lambda),
``summary.json``, and for every lambda of the proposed method the final
representation matrix (``y/``) and objective trace (``trace/``).  The
figure exports are plain CSV files meant for any external plotting tool.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from configparser import ConfigParser, Error as ConfigError
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import a_mkkm, mkkm_vanilla, sb_kkm
from .data_io import load_dataset, load_kernel_manifest, load_labels, save_matrix_csv
from .errors import ParseError
from .kernels import KernelBank, KernelSpec, build_kernel_bank, paper_recipe
from .metrics import evaluate
from .solver import SolveOptions, fit

log = logging.getLogger(__name__)

METHODS = ("SB-KKM", "A-MKKM", "MKKM", "Proposed")
PAPER_LAMBDAS = tuple(2.0**e for e in range(-15, 6))
SELECTED_THRESHOLD = 1e-3
FIGURES = ("sensitivity", "heatmap", "sparsity", "convergence")


@dataclass
class ExperimentConfig:
    data: str | None = None
    header: bool = False
    kernels: str | None = None
    labels: str | None = None
    name: str | None = None
    recipe: object = "paper"
    k: int | None = None
    lambdas: list = field(default_factory=lambda: list(PAPER_LAMBDAS))
    restarts: int = 20
    seed: int = 0
    methods: list = field(default_factory=lambda: ["Proposed"])
    out: str | None = None
    epsilon: float = 1e-6
    max_outer_iters: int = 100
    nmi_average: str = "geometric"
    strict: bool = False

    def __post_init__(self):
        if isinstance(self.lambdas, str):
            if self.lambdas != "paper":
                raise ValueError(f"unknown lambda grid {self.lambdas!r}")
            self.lambdas = list(PAPER_LAMBDAS)
        self.lambdas = [float(v) for v in self.lambdas]
        if not self.lambdas:
            raise ValueError("lambda grid is empty")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {list(METHODS)}")
        if (self.data is None) == (self.kernels is None):
            raise ValueError("exactly one of 'data' or 'kernels' must be given")
        if self.kernels is not None and self.labels is None:
            raise ValueError("'labels' is required with precomputed 'kernels'")

    @classmethod
    def from_file(cls, path, defaults=None, **overrides) -> "ExperimentConfig":
        """Read a ``.json`` config, or ``key = value`` lines otherwise.

        In the ``key = value`` form each value is decoded as a JSON literal
        when possible (``[1, 2]``, ``true``, ``0.5``) and kept as a string
        otherwise; an optional ``[experiment]`` header is accepted.

        ``defaults`` fill keys the file leaves out.  Keyword overrides that
        are not ``None`` replace file values, which is how CLI flags take
        precedence.  Relative data paths resolve
        against the config file's directory.
        """
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ParseError(f"cannot read config ({exc.strerror})", path=path) from exc
        if path.suffix.lower() == ".json":
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", path=path, line=exc.lineno) from exc
        else:
            raw = _parse_key_value(text, path)
        if not isinstance(raw, dict):
            raise ParseError("config must be a JSON object", path=path)
        raw = {**(defaults or {}), **raw, **{k: v for k, v in overrides.items() if v is not None}}
        for key in ("data", "kernels", "labels"):
            if raw.get(key) and not Path(raw[key]).is_absolute():
                raw[key] = str(path.parent / raw[key])
        known = set(cls.__dataclass_fields__)
        extra = sorted(set(raw) - known)
        if extra:
            raise ParseError(f"unknown config keys {extra}", path=path)
        try:
            return cls(**raw)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"invalid config: {exc}", path=path) from exc

    def kernel_recipe(self) -> list[KernelSpec]:
        if self.recipe == "paper":
            return paper_recipe()
        return [KernelSpec(**spec) for spec in self.recipe]

    def dataset_name(self) -> str:
        if self.name:
            return self.name
        return Path(self.data or self.kernels).stem


def _parse_key_value(text, path) -> dict:
    parser = ConfigParser(interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    parser.optionxform = str
    if not text.lstrip().startswith("["):
        text = "[experiment]\n" + text
    try:
        parser.read_string(text, source=str(path))
    except ConfigError as exc:
        line = getattr(exc, "lineno", None)
        raise ParseError(f"invalid config: {exc.message}", path=path, line=line) from exc
    raw = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            try:
                raw[key] = json.loads(value)
            except json.JSONDecodeError:
                raw[key] = value
    return raw


@dataclass
class RunRecord:
    method: str
    dataset: str
    lam: float | None
    seed: int
    acc: float
    nmi: float
    purity: float
    wall_time: float
    iterations: int
    converged: bool
    weights: list
    best: bool = False
    error: str | None = None
    result: object = field(default=None, repr=False, compare=False)

    CSV_FIELDS = ("method", "dataset", "lam", "seed", "acc", "nmi", "purity", "wall_time",
                  "iterations", "converged", "best", "n_selected", "weights", "error")

    @property
    def n_selected(self) -> int:
        return int(np.sum(np.asarray(self.weights) > SELECTED_THRESHOLD))

    def csv_row(self) -> dict:
        return {
            "method": self.method,
            "dataset": self.dataset,
            "lam": "" if self.lam is None else f"{self.lam:.17g}",
            "seed": self.seed,
            "acc": f"{self.acc:.17g}",
            "nmi": f"{self.nmi:.17g}",
            "purity": f"{self.purity:.17g}",
            "wall_time": f"{self.wall_time:.6f}",
            "iterations": self.iterations,
            "converged": int(self.converged),
            "best": int(self.best),
            "n_selected": self.n_selected,
            "weights": " ".join(f"{w:.17g}" for w in self.weights),
            "error": self.error or "",
        }

    def as_dict(self) -> dict:
        out = asdict(self)
        out.pop("result")
        out["n_selected"] = self.n_selected
        return out

    @classmethod
    def from_csv_row(cls, row: dict) -> "RunRecord":
        return cls(
            method=row["method"], dataset=row["dataset"],
            lam=float(row["lam"]) if row["lam"] else None,
            seed=int(row["seed"]), acc=float(row["acc"]), nmi=float(row["nmi"]),
            purity=float(row["purity"]), wall_time=float(row["wall_time"]),
            iterations=int(row["iterations"]), converged=bool(int(row["converged"])),
            weights=[float(w) for w in row["weights"].split()],
            best=bool(int(row["best"])), error=row["error"] or None)


@dataclass
class StoredResult:
    """The parts of a solve needed for the figure exports."""

    Y: np.ndarray
    w: np.ndarray
    objectives: np.ndarray


def load_problem(config: ExperimentConfig):
    """Return ``(bank, truth)`` for a config."""
    if config.data is not None:
        X, truth = load_dataset(config.data, header=config.header)
        bank = build_kernel_bank(X, config.kernel_recipe())
    else:
        bank = load_kernel_manifest(config.kernels, strict=config.strict)
        truth = load_labels(config.labels)
        if truth.size != bank.n:
            raise ParseError(f"{truth.size} labels for {bank.n} samples", path=config.labels)
    return bank, truth


def _failed(method, dataset, lam, seed, m, exc, elapsed):
    log.warning("%s (lambda=%s) failed: %s", method, lam, exc)
    return RunRecord(method, dataset, lam, seed, math.nan, math.nan, math.nan, elapsed, 0, False,
                     [math.nan] * m, error=f"{type(exc).__name__}: {exc}")


def run_methods(bank: KernelBank, truth, k: int, methods, lambdas, seed: int = 0,
                restarts: int = 20, epsilon: float = 1e-6, max_outer_iters: int = 100,
                nmi_average: str = "geometric", dataset: str = "dataset") -> list[RunRecord]:
    """Run every requested method; the proposed method once per lambda.

    Records are ordered by method (in :data:`METHODS` order) then lambda.
    The proposed-method row with the highest accuracy (first on ties) is
    marked ``best``.
    """
    records = []
    for method in [m for m in METHODS if m in methods]:
        grid = sorted(lambdas) if method == "Proposed" else [None]
        for lam in grid:
            start = time.perf_counter()
            try:
                if method == "Proposed":
                    opts = SolveOptions(lam=lam, epsilon=epsilon, max_outer_iters=max_outer_iters,
                                        seed=seed, restarts=restarts)
                    res = fit(bank, k, opts)
                    labels, w, its, conv = res.labels, res.w, res.iterations, res.converged
                    stored = StoredResult(res.Y, res.w, res.objectives)
                elif method == "MKKM":
                    opts = SolveOptions(epsilon=epsilon, max_outer_iters=max_outer_iters,
                                        seed=seed, restarts=restarts)
                    res = mkkm_vanilla(bank, k, opts)
                    labels, w, its, conv = res.labels, res.w, res.iterations, res.converged
                    stored = None
                elif method == "A-MKKM":
                    res = a_mkkm(bank, k, seed=seed, restarts=restarts)
                    labels, w, its, conv, stored = res.labels, res.w, 1, True, None
                else:
                    res = sb_kkm(bank, k, truth, seed=seed, restarts=restarts, nmi_average=nmi_average)
                    labels, w, its, conv, stored = res.labels, res.w, 1, True, None
                report = evaluate(labels, truth, nmi_average=nmi_average)
            except Exception as exc:  # one failed cell must not abort the sweep
                records.append(_failed(method, dataset, lam, seed, bank.m, exc, time.perf_counter() - start))
                continue
            records.append(RunRecord(method, dataset, lam, seed, report.acc, report.nmi, report.purity,
                                     time.perf_counter() - start, its, conv,
                                     [float(x) for x in w], result=stored))
    proposed = [r for r in records if r.method == "Proposed" and r.error is None]
    if proposed:
        max(proposed, key=lambda r: (r.acc, -proposed.index(r))).best = True
    return records


def run_experiment(config: ExperimentConfig) -> list[RunRecord]:
    bank, truth = load_problem(config)
    k = config.k or int(np.unique(truth).size)
    return run_methods(bank, truth, k, config.methods, config.lambdas, seed=config.seed,
                       restarts=config.restarts, epsilon=config.epsilon,
                       max_outer_iters=config.max_outer_iters, nmi_average=config.nmi_average,
                       dataset=config.dataset_name())


def _lam_tag(i: int) -> str:
    return f"lambda_{i:02d}"


def save_run(records, outdir, config: ExperimentConfig | None = None) -> Path:
    """Persist records, a JSON summary and per-lambda Y matrices and traces."""
    outdir = Path(outdir)
    (outdir / "y").mkdir(parents=True, exist_ok=True)
    (outdir / "trace").mkdir(exist_ok=True)
    with open(outdir / "records.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RunRecord.CSV_FIELDS)
        writer.writeheader()
        for rec in records:
            writer.writerow(rec.csv_row())
    results = []
    for i, rec in enumerate(r for r in records if r.method == "Proposed" and r.result is not None):
        tag = _lam_tag(i)
        save_matrix_csv(outdir / "y" / f"{tag}.csv", rec.result.Y)
        with open(outdir / "trace" / f"{tag}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "objective"])
            for t, f in enumerate(rec.result.objectives, start=1):
                writer.writerow([t, f"{f:.17g}"])
        results.append({"lam": rec.lam, "tag": tag})
    summary = {
        "records": [rec.as_dict() for rec in records],
        "proposed_results": results,
        "metric_names": ["acc", "nmi", "purity"],
    }
    if config is not None:
        cfg = asdict(config)
        summary["config"] = cfg
    best = [r for r in records if r.best]
    if best:
        summary["best_lambda"] = best[0].lam
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=_json_default))
    return outdir


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def load_run(rundir) -> list[RunRecord]:
    """Read back a run directory; proposed records regain a :class:`StoredResult`."""
    rundir = Path(rundir)
    path = rundir / "records.csv"
    try:
        with open(path, newline="") as fh:
            records = [RunRecord.from_csv_row(row) for row in csv.DictReader(fh)]
    except OSError as exc:
        raise ParseError(f"cannot read run records ({exc.strerror})", path=path) from exc
    except (KeyError, ValueError) as exc:
        raise ParseError(f"malformed run records ({exc})", path=path) from exc
    proposed = [r for r in records if r.method == "Proposed" and r.error is None]
    for i, rec in enumerate(proposed):
        tag = _lam_tag(i)
        ypath = rundir / "y" / f"{tag}.csv"
        tpath = rundir / "trace" / f"{tag}.csv"
        if ypath.exists() and tpath.exists():
            Y = np.atleast_2d(np.loadtxt(ypath, delimiter=","))
            objs = np.atleast_1d(np.loadtxt(tpath, delimiter=",", skiprows=1))
            objs = objs[:, 1] if objs.ndim == 2 else objs[1:2]
            rec.result = StoredResult(Y, np.asarray(rec.weights), objs)
    return records


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _fmt(x):
    return "" if x is None else f"{x:.17g}"


def export_figures(records, outdir, figures=FIGURES, solve_result=None) -> list[Path]:
    """Write plot-ready CSVs for the requested figures.

    * ``sensitivity.csv``: lambda against acc / nmi / purity.
    * ``y_heatmap.csv``: every ``Y[i, j]`` per lambda (long format).
    * ``sparsity.csv``: lambda against the number of kernels with weight
      above :data:`SELECTED_THRESHOLD`.
    * ``convergence.csv``: objective per outer iteration per lambda.

    ``solve_result`` (anything with ``Y``, ``w`` and ``objectives``) is used
    for the heatmap and convergence files when the records carry no results.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    proposed = sorted((r for r in records if r.method == "Proposed" and r.error is None),
                      key=lambda r: r.lam)
    with_results = [(r.lam, r.result) for r in proposed if r.result is not None]
    if not with_results and solve_result is not None:
        with_results = [(getattr(solve_result, "lam", None), solve_result)]
    written = []
    if "sensitivity" in figures:
        rows = [[_fmt(r.lam), _fmt(math.log2(r.lam)) if r.lam > 0 else "", _fmt(r.acc), _fmt(r.nmi),
                 _fmt(r.purity), int(r.best)] for r in proposed]
        written.append(_write_csv(outdir / "sensitivity.csv",
                                  ["lambda", "log2_lambda", "acc", "nmi", "purity", "best"], rows))
    if "heatmap" in figures:
        rows = []
        for lam, res in with_results:
            Y = np.asarray(res.Y)
            for i, j in np.ndindex(Y.shape):
                rows.append([_fmt(lam), i, j, _fmt(float(Y[i, j]))])
        written.append(_write_csv(outdir / "y_heatmap.csv", ["lambda", "i", "j", "y"], rows))
    if "sparsity" in figures:
        rows = [[_fmt(r.lam), r.n_selected] for r in proposed]
        written.append(_write_csv(outdir / "sparsity.csv", ["lambda", "selected_kernels"], rows))
    if "convergence" in figures:
        rows = []
        for lam, res in with_results:
            for t, f in enumerate(np.asarray(res.objectives), start=1):
                rows.append([_fmt(lam), t, _fmt(float(f))])
        written.append(_write_csv(outdir / "convergence.csv", ["lambda", "iteration", "objective"], rows))
    return written


def comparison_table(records) -> list[list]:
    """Rows shaped like the usual method-comparison table (values in percent).

    The proposed method contributes its ``best`` lambda row.
    """
    by_method = {}
    for rec in records:
        if rec.method == "Proposed" and not rec.best:
            continue
        by_method[(rec.dataset, rec.method)] = rec
    datasets = sorted({ds for ds, _ in by_method})
    methods = [m for m in METHODS if any(meth == m for _, meth in by_method)]
    rows = []
    for ds in datasets:
        for metric in ("acc", "nmi", "purity"):
            row = [ds, {"acc": "Acc", "nmi": "NMI", "purity": "Purity"}[metric]]
            for m in methods:
                rec = by_method.get((ds, m))
                row.append("" if rec is None else f"{100.0 * getattr(rec, metric):.2f}")
            rows.append(row)
    return [["Dataset", "Metric", *methods]] + rows


def write_comparison_table(records, path) -> Path:
    table = comparison_table(records)
    return _write_csv(path, table[0], table[1:])
