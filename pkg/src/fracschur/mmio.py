"""File formats: MatrixMarket matrices, JSON layout sidecars, vector files.

Matrices travel as MatrixMarket "coordinate real general" with 1-based
indices, written with 17 significant digits so float64 values round-trip
bit-exactly. The layout sidecar is a small JSON document describing the six
block ranges, the spatial dimension, and the per-fracture-cell contact
states. Vectors are plain text, one decimal float per line.
"""

from __future__ import annotations

import json

import numpy as np
import scipy.sparse as sp

from .errors import SparseFormatError
from .sparse import BlockLayout, ensure_canonical, from_triplets

_BANNER = "%%MatrixMarket"


def write_matrix_market(A, path) -> None:
    """Write canonical CSR to MatrixMarket coordinate real general."""
    A = ensure_canonical(A)
    n_rows, n_cols = A.shape
    coo = A.tocoo()
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{n_rows} {n_cols} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")


def read_matrix_market(path) -> sp.csr_matrix:
    """Read a MatrixMarket coordinate real general file.

    Rejects array-format files, non-real fields, unsupported symmetries,
    malformed size lines, and out-of-range 1-based indices.
    """
    with open(path) as fh:
        banner = fh.readline()
        tokens = banner.split()
        if len(tokens) != 5 or tokens[0] != _BANNER or tokens[1].lower() != "matrix":
            raise SparseFormatError(f"malformed MatrixMarket banner: {banner.strip()!r}")
        layout_kind, field, symmetry = (t.lower() for t in tokens[2:5])
        if layout_kind != "coordinate":
            raise SparseFormatError(
                f"unsupported MatrixMarket format {layout_kind!r} (coordinate only)"
            )
        if field != "real":
            raise SparseFormatError(f"unsupported MatrixMarket field {field!r} (real only)")
        if symmetry != "general":
            raise SparseFormatError(
                f"unsupported MatrixMarket symmetry {symmetry!r} (general only)"
            )
        size_line = fh.readline()
        while size_line and size_line.lstrip().startswith("%"):
            size_line = fh.readline()
        parts = size_line.split()
        if len(parts) != 3:
            raise SparseFormatError(f"malformed size line: {size_line.strip()!r}")
        try:
            n_rows, n_cols, nnz = (int(p) for p in parts)
        except ValueError as exc:
            raise SparseFormatError(f"malformed size line: {size_line.strip()!r}") from exc
        if n_rows < 0 or n_cols < 0 or nnz < 0:
            raise SparseFormatError(f"negative sizes in size line: {size_line.strip()!r}")
        entries = []
        for lineno, line in enumerate(fh, start=3):
            line = line.strip()
            if not line or line.startswith("%"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise SparseFormatError(f"malformed entry at line {lineno}: {line!r}")
            try:
                i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as exc:
                raise SparseFormatError(
                    f"malformed entry at line {lineno}: {line!r}"
                ) from exc
            if not (1 <= i <= n_rows and 1 <= j <= n_cols):
                raise SparseFormatError(
                    f"index ({i}, {j}) at line {lineno} outside "
                    f"{n_rows}x{n_cols} matrix"
                )
            entries.append((i - 1, j - 1, v))
    if len(entries) != nnz:
        raise SparseFormatError(
            f"size line promises {nnz} entries, file holds {len(entries)}"
        )
    return from_triplets(entries, n_rows, n_cols)


def write_layout(layout: BlockLayout, path) -> None:
    with open(path, "w") as fh:
        json.dump(layout.to_json_dict(), fh, indent=2)
        fh.write("\n")


def read_layout(path) -> BlockLayout:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SparseFormatError(f"layout sidecar is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SparseFormatError("layout sidecar must be a JSON object")
    return BlockLayout.from_json_dict(doc)


def write_vector(x, path) -> None:
    x = np.asarray(x, dtype=np.float64)
    with open(path, "w") as fh:
        for v in x:
            fh.write(f"{v:.17g}\n")


def read_vector(path) -> np.ndarray:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError as exc:
                raise SparseFormatError(
                    f"bad vector entry at line {lineno}: {line!r}"
                ) from exc
    return np.asarray(values, dtype=np.float64)
