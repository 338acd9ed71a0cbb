"""Dense CSV datasets, kernel files and kernel manifests.

A dataset CSV has one sample per row with the integer class label in the last
column.  A manifest lists one kernel CSV per line (relative paths resolve
against the manifest's directory); a line may end with the token
``normalized`` to skip re-normalization.  Blank lines and ``#`` comments are
ignored.
"""
from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from .errors import KernelError, ParseError
from .kernels import KernelBank, KernelSpec, normalize_kernel, validate_bank

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.txt"


def _read_rows(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read file ({exc.strerror})", path=path) from exc
    rows = []
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        rows.append((lineno, [cell.strip() for cell in row]))
    if not rows:
        raise ParseError("file is empty", path=path)
    return rows


def _parse_float(cell, path, lineno):
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric cell {cell!r}", path=path, line=lineno) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite value {cell!r}", path=path, line=lineno)
    return value


def _parse_label(cell, path, lineno):
    if cell == "":
        raise ParseError("missing class label", path=path, line=lineno)
    try:
        return int(cell)
    except ValueError:
        pass
    value = _parse_float(cell, path, lineno)
    if value != int(value):
        raise ParseError(f"class label {cell!r} is not an integer", path=path, line=lineno)
    return int(value)


def remap_labels(labels) -> np.ndarray:
    """Map arbitrary labels to ``0..k-1`` in order of first occurrence."""
    mapping = {}
    out = np.empty(len(labels), dtype=np.int64)
    for i, lab in enumerate(labels):
        out[i] = mapping.setdefault(lab, len(mapping))
    return out


def load_dataset(path, header: bool = False):
    """Read features and labels; returns ``(X, labels)`` with labels remapped."""
    rows = _read_rows(path)
    if header:
        rows = rows[1:]
        if not rows:
            raise ParseError("file has a header but no data rows", path=path)
    width = len(rows[0][1])
    if width < 2:
        raise ParseError("need at least one feature column and a label column", path=path, line=rows[0][0])
    feats, labels = [], []
    for lineno, row in rows:
        if len(row) != width:
            raise ParseError(f"expected {width} columns, found {len(row)}", path=path, line=lineno)
        feats.append([_parse_float(c, path, lineno) for c in row[:-1]])
        labels.append(_parse_label(row[-1], path, lineno))
    return np.array(feats, dtype=float), remap_labels(labels)


def load_labels(path) -> np.ndarray:
    """One integer label per line (or the last column of each row)."""
    rows = _read_rows(path)
    return remap_labels([_parse_label(row[-1], path, lineno) for lineno, row in rows])


def load_kernel_csv(path) -> np.ndarray:
    rows = _read_rows(path)
    n = len(rows)
    G = np.empty((n, n))
    for r, (lineno, row) in enumerate(rows):
        if len(row) != n:
            raise ParseError(f"kernel must be square: {n} rows but {len(row)} columns", path=path, line=lineno)
        G[r] = [_parse_float(c, path, lineno) for c in row]
    return G


def save_matrix_csv(path, A) -> None:
    np.savetxt(path, np.atleast_2d(A), delimiter=",", fmt="%.17g")


def read_manifest(path):
    """Return ``[(kernel_path, prenormalized)]`` in file order."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read manifest ({exc.strerror})", path=path) from exc
    entries = []
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        prenormalized = False
        if len(parts) > 1 and parts[-1].lower() == "normalized":
            prenormalized = True
            parts = parts[:-1]
        kpath = Path(" ".join(parts))
        if not kpath.is_absolute():
            kpath = path.parent / kpath
        entries.append((kpath, prenormalized))
    if not entries:
        raise ParseError("manifest lists no kernel files", path=path)
    return entries


def load_kernel_manifest(path, strict: bool = False, tol: float = 1e-10) -> KernelBank:
    """Load a precomputed kernel bank in manifest order.

    Kernels not marked ``normalized`` go through :func:`normalize_kernel`.
    Validation problems are logged; with ``strict=True`` they raise
    :class:`KernelError`.
    """
    entries = read_manifest(path)
    grams, specs = [], []
    first = None
    for kpath, prenormalized in entries:
        G = load_kernel_csv(kpath)
        if first is None:
            first = (kpath, G.shape[0])
        elif G.shape[0] != first[1]:
            raise ParseError(
                f"kernel size mismatch: {first[0]} is {first[1]}x{first[1]} "
                f"but {kpath} is {G.shape[0]}x{G.shape[0]}", path=path)
        if not prenormalized:
            try:
                G = normalize_kernel(G)
            except KernelError as exc:
                raise KernelError(f"{kpath}: {exc}", index=len(grams)) from exc
        grams.append(G)
        specs.append(KernelSpec("precomputed", source=str(kpath)))
    bank = KernelBank(np.stack(grams), tuple(specs))
    report = validate_bank(bank, tol=tol)
    for check in report.flagged():
        msg = f"{specs[check.index].source}: {', '.join(check.flags)}"
        if strict:
            raise KernelError(msg, index=check.index)
        log.warning("kernel validation: %s", msg)
    return bank


def save_kernel_bank(bank: KernelBank, outdir) -> Path:
    """Write each kernel as CSV plus a manifest marking them normalized."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    width = max(2, len(str(bank.m - 1)))
    lines = []
    for p in range(bank.m):
        name = f"kernel_{p:0{width}d}.csv"
        save_matrix_csv(outdir / name, bank.grams[p])
        lines.append(f"{name} normalized  # {bank.specs[p].label}")
    manifest = outdir / MANIFEST_NAME
    manifest.write_text("\n".join(lines) + "\n")
    return manifest
