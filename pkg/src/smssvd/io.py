"""TSV matrices, label files and ground-truth directories.

Matrix files are UTF-8, tab separated. The first line holds a corner cell
followed by the column IDs; every further line holds a row ID followed by
one number per column. Numbers use ``.`` as decimal point regardless of
locale and are written with 17 significant digits, which round-trips
IEEE doubles exactly.
"""
from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

import numpy as np

from .linalg import DataMatrix, svd_truncated
from .synthetic import GroundTruth, Signal, SyntheticSpec

_NUMBER = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")


class ParseError(ValueError):
    """Malformed input file; ``row`` and ``column`` are 1-based file positions."""

    def __init__(self, path, message, row=None, column=None):
        self.path = str(path)
        self.row = row
        self.column = column
        where = ""
        if row is not None:
            where = f", row {row}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{self.path}{where}: {message}")


def file_digest(path) -> str:
    """64-bit BLAKE2b content hash as 16 hex digits."""
    h = hashlib.blake2b(digest_size=8)
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _lines(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ParseError(path, "file not found") from None
    except UnicodeDecodeError as e:
        raise ParseError(path, f"not valid UTF-8 ({e.reason})") from None
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    return lines


def _parse_number(cell, path, row, col):
    s = cell.strip()
    if not _NUMBER.match(s):
        raise ParseError(path, f"cannot parse {cell!r} as a number", row, col)
    return float(s)


def read_table(path):
    """Read a labelled numeric table.

    Returns
    -------
    values : ndarray, shape (rows, columns)
    row_ids, column_ids : tuple of str
    """
    lines = _lines(path)
    if not lines:
        raise ParseError(path, "empty file")
    header = lines[0].split("\t")
    col_ids = tuple(c.strip() for c in header[1:])
    if not col_ids:
        raise ParseError(path, "header has no column IDs", 1)
    seen = {}
    for j, c in enumerate(col_ids):
        if not c:
            raise ParseError(path, "empty column ID", 1, j + 2)
        if c in seen:
            raise ParseError(path, f"duplicate column ID {c!r}", 1, j + 2)
        seen[c] = j
    n = len(col_ids)
    rows, row_ids, seen_rows = [], [], set()
    for i, line in enumerate(lines[1:], start=2):
        cells = line.split("\t")
        if len(cells) != n + 1:
            raise ParseError(path, f"expected {n + 1} fields, found {len(cells)}", i)
        rid = cells[0].strip()
        if not rid:
            raise ParseError(path, "empty row ID", i, 1)
        if rid in seen_rows:
            raise ParseError(path, f"duplicate row ID {rid!r}", i, 1)
        seen_rows.add(rid)
        rows.append([_parse_number(c, path, i, j) for j, c in enumerate(cells[1:], start=2)])
        row_ids.append(rid)
    if not rows:
        raise ParseError(path, "no data rows")
    values = np.array(rows, dtype=float)
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        # overflow such as 1e999 parses to inf
        r, c = bad[0]
        raise ParseError(path, "non-finite value", int(r) + 2, int(c) + 2)
    return values, tuple(row_ids), col_ids


def read_matrix(path) -> DataMatrix:
    """Read a variables x samples matrix (header = sample IDs)."""
    values, vids, sids = read_table(path)
    return DataMatrix(values, vids, sids)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_table(path, values, row_ids, column_ids, corner: str = "id") -> None:
    A = np.asarray(values, dtype=float)
    if A.ndim != 2 or A.shape != (len(row_ids), len(column_ids)):
        raise ValueError(f"shape {A.shape} does not match {len(row_ids)} x {len(column_ids)} IDs")
    out = ["\t".join([corner, *column_ids])]
    for rid, row in zip(row_ids, A):
        out.append("\t".join([rid, *map(_fmt, row)]))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def write_matrix(path, X: DataMatrix, corner: str = "variable") -> None:
    write_table(path, X.values, X.variable_ids, X.sample_ids, corner)


def read_labels(path) -> dict[str, str]:
    """Two-column TSV without header: sample ID, label."""
    labels: dict[str, str] = {}
    for i, line in enumerate(_lines(path), start=1):
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) != 2:
            raise ParseError(path, f"expected 2 fields, found {len(cells)}", i)
        sid, lab = cells[0].strip(), cells[1].strip()
        if not sid or not lab:
            raise ParseError(path, "empty sample ID or label", i)
        if sid in labels:
            raise ParseError(path, f"duplicate sample ID {sid!r}", i, 1)
        labels[sid] = lab
    if not labels:
        raise ParseError(path, "no labels")
    return labels


def dump_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_ground_truth(gt: GroundTruth, directory) -> list[str]:
    """Write ``X.tsv``, ``Y_k.tsv``, ``support_k.txt`` and ``spec.json``.

    ``k`` is 1-based. Returns the written file names.
    """
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    data = gt.data()
    write_matrix(d / "X.tsv", data)
    names = ["X.tsv"]
    for k, s in enumerate(gt.signals, start=1):
        write_matrix(d / f"Y_{k}.tsv", DataMatrix(s.Y, data.variable_ids, data.sample_ids))
        (d / f"support_{k}.txt").write_text(
            "".join(data.variable_ids[i] + "\n" for i in s.support), encoding="utf-8")
        names += [f"Y_{k}.tsv", f"support_{k}.txt"]
    spec = gt.spec.to_dict() if gt.spec is not None else {}
    dump_json(d / "spec.json", {"spec": spec, "label": gt.label, "K": gt.K})
    names.append("spec.json")
    return names


def read_ground_truth(directory) -> GroundTruth:
    """Inverse of :func:`write_ground_truth`.

    Signal factors are recovered by a truncated SVD of each ``Y_k`` at the
    rank recorded in ``spec.json``.
    """
    d = Path(directory)
    if not d.is_dir():
        raise ParseError(d, "ground-truth directory not found")
    meta_path = d / "spec.json"
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ParseError(meta_path, "file not found") from None
    except json.JSONDecodeError as e:
        raise ParseError(meta_path, f"invalid JSON: {e.msg}", e.lineno, e.colno) from None
    try:
        spec = SyntheticSpec.from_dict(meta["spec"]) if meta.get("spec") else None
        K = int(meta["K"])
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(meta_path, f"bad metadata: {e}") from None
    X = read_matrix(d / "X.tsv")
    index = {v: i for i, v in enumerate(X.variable_ids)}
    signals = []
    for k in range(1, K + 1):
        Y = read_matrix(d / f"Y_{k}.tsv")
        if Y.variable_ids != X.variable_ids or Y.sample_ids != X.sample_ids:
            raise ParseError(d / f"Y_{k}.tsv", "IDs differ from X.tsv")
        sup_path = d / f"support_{k}.txt"
        sup = []
        for i, line in enumerate(_lines(sup_path), start=1):
            vid = line.strip()
            if vid not in index:
                raise ParseError(sup_path, f"unknown variable ID {vid!r}", i)
            sup.append(index[vid])
        rank = spec.d if spec is not None else None
        if rank is None:
            s = np.linalg.svd(Y.values, compute_uv=False)
            rank = int(np.count_nonzero(s > 1e-10 * s[0])) if s[0] > 0 else 1
        f = svd_truncated(Y.values, rank)
        signals.append(Signal(f.U, f.sigma, f.V, np.array(sorted(sup), dtype=int)))
    X_clean = sum((s.Y for s in signals), np.zeros(X.shape))
    return GroundTruth(tuple(signals), X_clean, X.values, spec, meta.get("label", ""))


__all__ = [
    "ParseError",
    "file_digest",
    "read_table",
    "read_matrix",
    "write_table",
    "write_matrix",
    "read_labels",
    "dump_json",
    "write_ground_truth",
    "read_ground_truth",
]
