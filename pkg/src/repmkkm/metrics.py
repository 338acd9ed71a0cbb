"""External clustering metrics: accuracy, NMI and purity."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

NMI_AVERAGES = ("geometric", "max", "arithmetic")


def _check(pred, truth):
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise ValueError(f"label length mismatch: {pred.size} predicted vs {truth.size} true")
    if pred.size == 0:
        raise ValueError("empty label vectors")
    return pred, truth


def contingency_table(pred, truth) -> np.ndarray:
    """Counts with predicted clusters as rows and true classes as columns."""
    pred, truth = _check(pred, truth)
    _, p_idx = np.unique(pred, return_inverse=True)
    _, t_idx = np.unique(truth, return_inverse=True)
    table = np.zeros((p_idx.max() + 1, t_idx.max() + 1), dtype=np.int64)
    np.add.at(table, (p_idx, t_idx), 1)
    return table


def accuracy(pred, truth) -> float:
    """Fraction matched under the best one-to-one cluster-to-class mapping."""
    table = contingency_table(pred, truth)
    size = max(table.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: table.shape[0], : table.shape[1]] = table
    rows, cols = linear_sum_assignment(padded, maximize=True)
    return float(padded[rows, cols].sum() / table.sum())


def _entropy(counts) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(pred, truth, average: str = "geometric") -> float:
    """Normalized mutual information (natural log).

    ``average`` picks the normalizer: ``sqrt(H_p H_t)`` (geometric),
    ``max(H_p, H_t)`` or ``(H_p + H_t) / 2``.
    """
    if average not in NMI_AVERAGES:
        raise ValueError(f"unknown NMI normalization {average!r}")
    table = contingency_table(pred, truth).astype(float)
    n = table.sum()
    hp = _entropy(table.sum(axis=1))
    ht = _entropy(table.sum(axis=0))
    if hp == 0.0 and ht == 0.0:
        return 1.0
    if hp == 0.0 or ht == 0.0:
        return 0.0
    pij = table / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / n**2
    nz = pij > 0
    mi = float(np.sum(pij[nz] * np.log(pij[nz] / outer[nz])))
    if average == "geometric":
        denom = np.sqrt(hp * ht)
    elif average == "max":
        denom = max(hp, ht)
    else:
        denom = 0.5 * (hp + ht)
    return float(min(max(mi / denom, 0.0), 1.0))


def purity(pred, truth) -> float:
    table = contingency_table(pred, truth)
    return float(table.max(axis=1).sum() / table.sum())


@dataclass
class MetricReport:
    acc: float
    nmi: float
    purity: float
    nmi_average: str = "geometric"
    contingency: np.ndarray = field(default=None, repr=False)

    FIELDS = ("acc", "nmi", "purity")

    def as_dict(self, include_table: bool = False) -> dict:
        out = {"acc": self.acc, "nmi": self.nmi, "purity": self.purity, "nmi_average": self.nmi_average}
        if include_table and self.contingency is not None:
            out["contingency"] = np.asarray(self.contingency).tolist()
        return out

    def to_json(self, include_table: bool = True) -> str:
        return json.dumps(self.as_dict(include_table=include_table), sort_keys=True)

    def csv_row(self) -> list:
        return [f"{self.acc:.17g}", f"{self.nmi:.17g}", f"{self.purity:.17g}"]

    def percent(self) -> dict:
        return {k: 100.0 * getattr(self, k) for k in self.FIELDS}


def evaluate(pred, truth, nmi_average: str = "geometric") -> MetricReport:
    return MetricReport(
        acc=accuracy(pred, truth),
        nmi=nmi(pred, truth, average=nmi_average),
        purity=purity(pred, truth),
        nmi_average=nmi_average,
        contingency=contingency_table(pred, truth),
    )
