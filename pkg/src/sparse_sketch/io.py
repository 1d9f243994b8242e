"""File formats: datasets, dense maps, embedding CSVs, reports, params JSON.

Dataset text format, one vector per line::

    id<TAB>idx:value idx:value ...

`#`-prefixed lines are comments; a `# d: N` directive pins the ambient
dimension (otherwise it is inferred as max index + 1). The JSON Lines
variant holds one object per line: {"id": "...", "coords": {"idx": value}}
with an optional "d" field.

All writers emit a `# config: {...}` echo line first so any output file is
reproducible from its own header.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError
from .vectors import Dataset, SparseVector


def _format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def config_line(config: dict) -> str:
    return "# config: " + json.dumps(config, sort_keys=True, separators=(", ", ": "))


def parse_dataset_text(lines: Iterable[str], dim: int | None = None) -> Dataset:
    items: list[tuple[str, list[tuple[int, float]]]] = []
    max_index = -1
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if body.startswith("d:"):
                try:
                    dim = int(body[2:].strip())
                except ValueError:
                    raise ParseError(f"bad dimension directive {stripped!r}", lineno)
            continue
        parts = line.split("\t")
        if len(parts) != 2 and not (len(parts) == 1 and " " not in parts[0]):
            # allow "id" alone for the zero vector
            if len(parts) != 2:
                raise ParseError("expected 'id<TAB>idx:value ...'", lineno)
        vec_id = parts[0]
        pairs: list[tuple[int, float]] = []
        if len(parts) == 2 and parts[1].strip():
            for tok in parts[1].split():
                if ":" not in tok:
                    raise ParseError(f"bad entry {tok!r}, expected idx:value", lineno)
                idx_s, val_s = tok.split(":", 1)
                try:
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise ParseError(f"bad entry {tok!r}", lineno)
                if idx < 0:
                    raise ParseError(f"negative index {idx}", lineno)
                pairs.append((idx, val))
                max_index = max(max_index, idx)
        items.append((vec_id, pairs))
    if dim is None:
        dim = max_index + 1 if max_index >= 0 else 1
    vectors = []
    for lineno_id, (vec_id, pairs) in enumerate(items):
        try:
            vectors.append((vec_id, SparseVector.from_pairs(pairs, dim)))
        except ValueError as e:
            raise ParseError(f"vector {vec_id!r}: {e}")
    return Dataset.from_items(vectors, dim)


def parse_dataset_jsonl(lines: Iterable[str], dim: int | None = None) -> Dataset:
    records = []
    max_index = -1
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as e:
            raise ParseError(f"bad JSON: {e}", lineno)
        if "id" not in obj or "coords" not in obj:
            raise ParseError("record needs 'id' and 'coords'", lineno)
        if "d" in obj:
            dim = int(obj["d"])
        pairs = []
        for k, v in obj["coords"].items():
            try:
                idx = int(k)
            except ValueError:
                raise ParseError(f"bad coordinate index {k!r}", lineno)
            pairs.append((idx, float(v)))
            max_index = max(max_index, idx)
        records.append((str(obj["id"]), pairs))
    if dim is None:
        dim = max_index + 1 if max_index >= 0 else 1
    return Dataset.from_items(
        [(i, SparseVector.from_pairs(p, dim)) for i, p in records], dim
    )


def read_dataset(path: str, dim: int | None = None) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    if path.endswith(".jsonl"):
        return parse_dataset_jsonl(lines, dim)
    return parse_dataset_text(lines, dim)


def write_dataset_text(path: str, dataset: Dataset) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# d: {dataset.dim}\n")
        for vec_id, vec in dataset:
            entries = " ".join(f"{i}:{_format_value(v)}" for i, v in vec.items())
            fh.write(f"{vec_id}\t{entries}\n")


def write_report(path: str, config: dict, header: Sequence[str],
                 rows: Iterable[Sequence], trailers: Sequence[str] = ()) -> None:
    """CSV report with a config echo line on top and optional comment trailers."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(config_line(config) + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_value(c) for c in row) + "\n")
        for t in trailers:
            fh.write(f"# {t}\n")


def write_embedding_csv(path: str, config: dict, ids: Sequence[str],
                        rows: Iterable[np.ndarray], width: int) -> None:
    header = ["id"] + [f"v{i}" for i in range(width)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(config_line(config) + "\n")
        fh.write(",".join(header) + "\n")
        for vec_id, row in zip(ids, rows):
            fh.write(vec_id + "," + ",".join(repr(float(v)) for v in row) + "\n")


def read_embedding_csv(path: str) -> tuple[list[str], np.ndarray]:
    ids: list[str] = []
    rows: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            cells = stripped.split(",")
            if cells[0] == "id":
                continue
            ids.append(cells[0])
            try:
                rows.append([float(c) for c in cells[1:]])
            except ValueError as e:
                raise ParseError(str(e), lineno)
    return ids, np.asarray(rows, dtype=np.float64)


def write_dense_map_csv(path: str, matrix: np.ndarray) -> None:
    """Dense map file: an `m,d` header then m rows of d values."""
    m, d = matrix.shape
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{m},{d}\n")
        for row in matrix:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_dense_map_csv(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        try:
            m_s, d_s = header.split(",")
            m, d = int(m_s), int(d_s)
        except ValueError:
            raise ParseError(f"bad dense-map header {header!r}", 1)
        rows = []
        for lineno, line in enumerate(fh, start=2):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                row = [float(c) for c in stripped.split(",")]
            except ValueError as e:
                raise ParseError(str(e), lineno)
            if len(row) != d:
                raise ParseError(f"expected {d} values, got {len(row)}", lineno)
            rows.append(row)
    if len(rows) != m:
        raise ParseError(f"expected {m} rows, got {len(rows)}")
    return np.asarray(rows, dtype=np.float64)


def write_json(path: str, obj: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def default_params_path(output_path: str) -> str:
    root, _ = os.path.splitext(output_path)
    return root + ".params.json"
