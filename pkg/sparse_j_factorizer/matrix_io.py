"""Serialization of sparse matrices, factor metadata and mixing schedules.

JSON is lossless (entries carry exact numerator/denominator pairs, 0-based
indices). Matrix Market coordinate files go through scipy.io and are for
interoperability: values are written as doubles with 17 significant digits and
read back as the exact rational value of that double, so only dyadic entries
survive unchanged.
"""

from __future__ import annotations

import io
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, BinaryIO, TextIO

from scipy import sparse
from scipy.io import mmread, mmwrite

from sparse_j_factorizer.errors import MatrixFormatError
from sparse_j_factorizer.matrix import d_max, nnz, to_csr
from sparse_j_factorizer.models import (
    IntraMethod,
    MixingRound,
    MixingSchedule,
    Phase,
    Phase2Method,
    SparseMatrix,
)
from sparse_j_factorizer.partition import parse_partition

logger = logging.getLogger(__name__)

FORMATS = ("json", "mtx")
MANIFEST_NAME = "manifest.json"
MM_PRECISION = 17


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def to_json_dict(a: SparseMatrix) -> dict[str, Any]:
    return {
        "rows": a.rows,
        "cols": a.cols,
        "entries": [
            {"row": i, "col": j, "num": v.numerator, "den": v.denominator}
            for i, j, v in a.items()
        ],
    }


def from_json_dict(data: dict[str, Any]) -> SparseMatrix:
    try:
        rows, cols = int(data["rows"]), int(data["cols"])
        items = [
            (int(e["row"]), int(e["col"]), Fraction(int(e["num"]), int(e["den"])))
            for e in data["entries"]
        ]
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise MatrixFormatError(f"malformed matrix JSON: {exc}") from exc

    seen: set[tuple[int, int]] = set()
    for i, j, _ in items:
        if (i, j) in seen:
            raise MatrixFormatError(f"duplicate entry ({i}, {j}) in matrix JSON")
        seen.add((i, j))
    try:
        return SparseMatrix(rows, cols, {(i, j): v for i, j, v in items})
    except ValueError as exc:
        raise MatrixFormatError(str(exc)) from exc


def write_json(a: SparseMatrix, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_json_dict(a), indent=1) + "\n", encoding="utf-8")


def read_json(path: str | Path) -> SparseMatrix:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MatrixFormatError(f"{path}: not valid JSON ({exc})") from exc
    return from_json_dict(data)


# ---------------------------------------------------------------------------
# Matrix Market
# ---------------------------------------------------------------------------


def _write_mm(a: SparseMatrix, target: str | Path | BinaryIO) -> None:
    mmwrite(target, to_csr(a), precision=MM_PRECISION, symmetry="general")


def _read_mm(source: str | Path | TextIO) -> SparseMatrix:
    try:
        mat = mmread(source)
    except (ValueError, RuntimeError, TypeError, IndexError, OverflowError) as exc:
        raise MatrixFormatError(f"malformed Matrix Market data: {exc}") from exc
    if not sparse.issparse(mat):
        raise MatrixFormatError("only Matrix Market coordinate files are supported")

    coo = mat.tocoo()
    rows, cols = coo.shape
    items = [
        (int(i), int(j), Fraction(float(v)))
        for i, j, v in zip(coo.row, coo.col, coo.data)
    ]
    if len({(i, j) for i, j, _ in items}) != len(items):
        raise MatrixFormatError("duplicate entries in Matrix Market data")
    try:
        return SparseMatrix.from_items(rows, cols, items)
    except ValueError as exc:
        raise MatrixFormatError(str(exc)) from exc


def to_matrix_market(a: SparseMatrix) -> str:
    buffer = io.BytesIO()
    _write_mm(a, buffer)
    return buffer.getvalue().decode("utf-8")


def from_matrix_market(text: str) -> SparseMatrix:
    return _read_mm(io.StringIO(text))


def write_matrix(a: SparseMatrix, path: str | Path, fmt: str = "json") -> Path:
    """Write ``a`` to ``path`` with the extension for ``fmt`` appended if missing."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    path = Path(path)
    if path.suffix != f".{fmt}":
        path = path.with_name(f"{path.name}.{fmt}")
    if fmt == "json":
        write_json(a, path)
    else:
        _write_mm(a, path)
    logger.debug("wrote %s (%d nonzeros)", path, nnz(a))
    return path


def read_matrix(path: str | Path) -> SparseMatrix:
    """Read a matrix, choosing the parser from the file extension."""
    path = Path(path)
    if path.suffix == ".mtx":
        return from_matrix_market(path.read_text(encoding="utf-8"))
    return read_json(path)


def write_metadata(metadata: dict[str, Any], path: str | Path) -> None:
    Path(path).write_text(json.dumps(metadata, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------


def write_schedule(schedule: MixingSchedule, directory: str | Path, fmt: str = "mtx") -> Path:
    """Write one file per round plus ``manifest.json``; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    entries = []
    for index, rnd in enumerate(schedule.rounds, start=1):
        stem = f"round_{index:03d}_{rnd.phase.value}_{rnd.label}"
        written = write_matrix(rnd.matrix, directory / stem, fmt)
        entries.append(
            {
                "index": index,
                "file": written.name,
                "phase": rnd.phase.value,
                "label": rnd.label,
                "nnz": nnz(rnd.matrix),
                "d_max": d_max(rnd.matrix),
            }
        )

    manifest = {
        "partition": schedule.partition.to_text(),
        "n": schedule.n,
        "phase2": schedule.phase2.value,
        "intra": schedule.intra.value,
        "format": fmt,
        "rounds": entries,
    }
    manifest_path = directory / MANIFEST_NAME
    write_metadata(manifest, manifest_path)
    logger.info("wrote %d rounds to %s", len(entries), directory)
    return manifest_path


def read_schedule(directory: str | Path) -> MixingSchedule:
    directory = Path(directory)
    try:
        manifest = json.loads((directory / MANIFEST_NAME).read_text(encoding="utf-8"))
        partition = parse_partition(manifest["partition"])
        rounds = tuple(
            MixingRound(
                matrix=read_matrix(directory / entry["file"]),
                phase=Phase(entry["phase"]),
                label=entry["label"],
            )
            for entry in manifest["rounds"]
        )
        return MixingSchedule(
            rounds=rounds,
            n=partition.n,
            partition=partition,
            phase2=Phase2Method(manifest["phase2"]),
            intra=IntraMethod(manifest["intra"]),
        )
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise MatrixFormatError(f"malformed schedule manifest in {directory}: {exc}") from exc
