"""File formats: feature/target CSV, ground-truth JSON, ranking TSV.

All floats are written with ``repr`` (shortest round-trip decimal), so
parsing recovers the exact double. Writes are atomic: content goes to a
temp file in the target directory and is renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .data import DataMatrix
from .simulate import CausalAssignment

RANKING_COLUMNS = ("rank", "feature", "score", "method", "heads", "seed", "config_digest")


def fmt(value: float) -> str:
    return repr(float(value))


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_matrix_csv(path: str, X) -> None:
    values = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    buf = io.StringIO()
    buf.write(",".join(f"f{j}" for j in range(values.shape[1])) + "\n")
    for row in values:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    atomic_write_text(path, buf.getvalue())


def read_matrix_csv(path: str) -> np.ndarray:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != len(header):
        raise ValueError(f"malformed feature CSV {path!r}")
    return arr


def write_target_csv(path: str, y, task: str = "regression") -> None:
    values = np.asarray(y.values if hasattr(y, "values") else y)
    buf = io.StringIO()
    buf.write("y\n")
    for v in values:
        buf.write((str(int(v)) if task == "classification" else fmt(v)) + "\n")
    atomic_write_text(path, buf.getvalue())


def read_target_csv(path: str) -> np.ndarray:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != ["y"]:
            raise ValueError(f"target CSV must have a single 'y' column, got {header}")
        return np.array([float(row[0]) for row in reader if row])


def write_truth_json(path: str, assignment: CausalAssignment) -> None:
    atomic_write_text(path, json.dumps(assignment.to_dict(), indent=2) + "\n")


def read_truth_json(path: str) -> CausalAssignment:
    with open(path) as handle:
        return CausalAssignment.from_dict(json.load(handle))


def write_json(path: str, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path: str):
    with open(path) as handle:
        return json.load(handle)


# ---------------------------------------------------------------------------
# Ranking files


def heads_field(heads) -> str:
    return "|".join(str(h) for h in heads) if heads else "-"


def parse_heads(text: str) -> tuple[int, ...]:
    if text == "-":
        return ()
    return tuple(int(p) for p in text.split("|"))


def write_ranking_tsv(path: str, records) -> None:
    buf = io.StringIO()
    buf.write("\t".join(RANKING_COLUMNS) + "\n")
    for r in records:
        buf.write(
            "\t".join(
                (
                    str(r.rank),
                    str(r.feature),
                    fmt(r.score),
                    r.method,
                    heads_field(r.heads),
                    str(r.seed),
                    r.config_digest,
                )
            )
            + "\n"
        )
    atomic_write_text(path, buf.getvalue())


def read_ranking_tsv(path: str):
    from .pipeline import RankingRecord

    records = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle, delimiter="\t")
        header = next(reader)
        if tuple(header) != RANKING_COLUMNS:
            raise ValueError(f"unexpected ranking columns {header}")
        for row in reader:
            if not row:
                continue
            records.append(
                RankingRecord(
                    rank=int(row[0]),
                    feature=int(row[1]),
                    score=float(row[2]),
                    method=row[3],
                    heads=parse_heads(row[4]),
                    seed=int(row[5]),
                    config_digest=row[6],
                )
            )
    return records
