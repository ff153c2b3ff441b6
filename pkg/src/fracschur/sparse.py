"""Canonical CSR kernels, six-block partitioning, and permutations.

Every matrix handled by this library is a ``scipy.sparse.csr_matrix`` in
canonical form: float64 values, column indices sorted within each row,
duplicate entries summed at construction time. One storage format keeps the
factorization and multigrid kernels simple and makes every reduction order
fixed, so repeated runs produce bit-identical results.

The six block rows/columns are, in order: contact traction, interface
displacement, displacement, interface fluxes, pressure, temperature.
Block ids are 1-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError, SparseFormatError

BLOCK_NAMES = (
    "contact",
    "interface_displacement",
    "displacement",
    "interface_flux",
    "pressure",
    "temperature",
)

N_BLOCKS = 6

STATE_TAGS = ("stick", "slide", "open")


def ensure_canonical(A) -> sp.csr_matrix:
    """Return ``A`` as canonical CSR: float64, sorted indices, summed duplicates."""
    A = sp.csr_matrix(A, dtype=np.float64, copy=False)
    A.sum_duplicates()
    A.sort_indices()
    return A


def from_triplets(entries, n_rows, n_cols) -> sp.csr_matrix:
    """Build a canonical CSR matrix from (row, col, value) triplets.

    Duplicate positions are summed. Out-of-range indices raise
    :class:`SparseFormatError` naming the first offending entry.
    """
    if n_rows < 0 or n_cols < 0:
        raise SparseFormatError(f"negative matrix shape ({n_rows}, {n_cols})")
    entries = list(entries)
    if not entries:
        return sp.csr_matrix((n_rows, n_cols), dtype=np.float64)
    rows = np.fromiter((e[0] for e in entries), dtype=np.int64, count=len(entries))
    cols = np.fromiter((e[1] for e in entries), dtype=np.int64, count=len(entries))
    vals = np.fromiter((e[2] for e in entries), dtype=np.float64, count=len(entries))
    bad = np.flatnonzero((rows < 0) | (rows >= n_rows) | (cols < 0) | (cols >= n_cols))
    if bad.size:
        k = int(bad[0])
        raise SparseFormatError(
            f"entry {k} = ({rows[k]}, {cols[k]}, {vals[k]}) out of range for "
            f"shape ({n_rows}, {n_cols})",
            detail=(int(rows[k]), int(cols[k]), float(vals[k])),
        )
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n_rows, n_cols)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def spmv(A, x) -> np.ndarray:
    """Matrix-vector product y = A x with a fixed per-row summation order."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != A.shape[1]:
        raise DimensionMismatchError(
            f"spmv: matrix is {A.shape[0]}x{A.shape[1]}, vector has length {x.shape}"
        )
    return A @ x


def matmul(A, B) -> sp.csr_matrix:
    """Exact sparse product A B in canonical CSR form."""
    if A.shape[1] != B.shape[0]:
        raise DimensionMismatchError(
            f"matmul: inner dimensions disagree ({A.shape} times {B.shape})"
        )
    return ensure_canonical(A @ B)


@dataclass(frozen=True, eq=False)
class Permutation:
    """Bijection on [0, n) stored both ways.

    ``forward[i]`` is the destination position of old index ``i``;
    ``inverse[j]`` is the old index found at new position ``j``.
    """

    forward: np.ndarray
    inverse: np.ndarray

    @classmethod
    def from_forward(cls, forward) -> "Permutation":
        forward = np.asarray(forward, dtype=np.int64)
        n = forward.shape[0]
        inverse = np.empty(n, dtype=np.int64)
        seen = np.zeros(n, dtype=bool)
        if n and (forward.min() < 0 or forward.max() >= n):
            raise SparseFormatError("permutation image out of range")
        inverse[forward] = np.arange(n, dtype=np.int64)
        seen[forward] = True
        if not seen.all():
            raise SparseFormatError("permutation is not a bijection")
        return cls(forward=forward, inverse=inverse)

    @property
    def n(self) -> int:
        return self.forward.shape[0]

    def apply(self, x) -> np.ndarray:
        """Reorder a vector: result[forward[i]] = x[i]."""
        x = np.asarray(x)
        if x.shape[0] != self.n:
            raise DimensionMismatchError("permutation length mismatch")
        return x[self.inverse]

    def unapply(self, y) -> np.ndarray:
        """Inverse reordering: result[i] = y[forward[i]]."""
        y = np.asarray(y)
        if y.shape[0] != self.n:
            raise DimensionMismatchError("permutation length mismatch")
        return y[self.forward]

    def permute_matrix(self, A) -> sp.csr_matrix:
        """Symmetric reordering: result[forward[i], forward[j]] = A[i, j]."""
        if A.shape[0] != self.n or A.shape[1] != self.n:
            raise DimensionMismatchError("permutation/matrix size mismatch")
        return ensure_canonical(A[self.inverse, :][:, self.inverse])


@dataclass(frozen=True, eq=False)
class BlockLayout:
    """Row/column partitioning of the six-block system.

    ``block_ranges`` holds six half-open (start, end) ranges covering [0, n)
    contiguously, in the fixed block order of :data:`BLOCK_NAMES`. ``dim`` is
    the spatial dimension and equals the cell block size of blocks 1-3.
    ``states`` carries one contact-state tag per fracture cell. ``sides`` is
    the number of interface sides per fracture cell declared by the
    generator, so that len(block 2) = sides * len(block 1).

    ``intersection_cells`` counts trailing pressure/temperature cells that
    belong to fracture intersections and receive no fixed-stress
    stabilization. ``row_scale``/``col_scale`` are optional diagonal
    equation/variable scalings carried by the sidecar; ``fs_scale`` is the
    per-cell rho*V/dt aggregate used by the stabilization (None defers to
    material parameters or 1.0 for ingested systems).
    """

    dim: int
    block_ranges: tuple
    fracture_cells: int
    states: tuple
    sides: int = 2
    intersection_cells: int = 0
    fs_scale: float | None = None
    row_scale: np.ndarray | None = None
    col_scale: np.ndarray | None = None

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise SparseFormatError(f"dim must be 2 or 3, got {self.dim}")
        if len(self.block_ranges) != N_BLOCKS:
            raise SparseFormatError(
                f"expected {N_BLOCKS} block ranges, got {len(self.block_ranges)}"
            )
        pos = 0
        for name, (start, end) in zip(BLOCK_NAMES, self.block_ranges):
            if start != pos or end < start:
                raise SparseFormatError(
                    f"block '{name}' range ({start}, {end}) not contiguous at {pos}"
                )
            pos = end
        for bid in (1, 2, 3):
            if self.block_length(bid) % self.dim:
                raise SparseFormatError(
                    f"block {bid} length {self.block_length(bid)} not divisible "
                    f"by cell size {self.dim}"
                )
        if self.block_length(2) != self.sides * self.block_length(1):
            raise SparseFormatError(
                "interface-displacement block must be sides x contact block "
                f"({self.block_length(2)} != {self.sides} * {self.block_length(1)})"
            )
        if self.fracture_cells != self.block_length(1) // self.dim:
            raise SparseFormatError(
                f"fracture_cells {self.fracture_cells} disagrees with contact "
                f"block ({self.block_length(1)} dofs / cell size {self.dim})"
            )
        if len(self.states) != self.fracture_cells:
            raise SparseFormatError(
                f"{len(self.states)} states for {self.fracture_cells} fracture cells"
            )
        for k, tag in enumerate(self.states):
            if tag not in STATE_TAGS:
                raise SparseFormatError(f"state {k} has unknown tag {tag!r}")
        if not 0 <= self.intersection_cells <= self.block_length(5):
            raise SparseFormatError("intersection_cells out of range")

    @property
    def n(self) -> int:
        return self.block_ranges[-1][1]

    def block_range(self, bid: int):
        if not 1 <= bid <= N_BLOCKS:
            raise ValueError(f"block id must be in 1..{N_BLOCKS}, got {bid}")
        return self.block_ranges[bid - 1]

    def block_slice(self, bid: int) -> slice:
        start, end = self.block_range(bid)
        return slice(start, end)

    def block_length(self, bid: int) -> int:
        start, end = self.block_range(bid)
        return end - start

    @property
    def cells_per_block(self):
        """Cell counts for the three mechanics blocks (1, 2, 3)."""
        return tuple(self.block_length(b) // self.dim for b in (1, 2, 3))

    @property
    def pressure_cells(self) -> int:
        return self.block_length(5)

    def pressure_cell_kinds(self) -> np.ndarray:
        """Per pressure-cell kind: 0 = matrix, 1 = fracture, 2 = intersection.

        Pressure cells are ordered matrix, fracture, intersection; the same
        ordering holds for temperature cells.
        """
        n_p = self.pressure_cells
        n_frac = self.fracture_cells
        n_x = self.intersection_cells
        n_matrix = n_p - n_frac - n_x
        if n_matrix < 0:
            raise SparseFormatError("pressure block shorter than fracture cells")
        kinds = np.zeros(n_p, dtype=np.int64)
        kinds[n_matrix : n_matrix + n_frac] = 1
        kinds[n_matrix + n_frac :] = 2
        return kinds

    def to_json_dict(self) -> dict:
        doc = {
            "dim": self.dim,
            "blocks": [
                {"name": name, "start": int(start), "end": int(end)}
                for name, (start, end) in zip(BLOCK_NAMES, self.block_ranges)
            ],
            "fracture_cells": int(self.fracture_cells),
            "states": list(self.states),
        }
        if self.sides != 2:
            doc["sides"] = int(self.sides)
        if self.intersection_cells:
            doc["intersection_cells"] = int(self.intersection_cells)
        if self.fs_scale is not None:
            doc["fs_scale"] = float(self.fs_scale)
        if self.row_scale is not None:
            doc["row_scale"] = [float(v) for v in self.row_scale]
        if self.col_scale is not None:
            doc["col_scale"] = [float(v) for v in self.col_scale]
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "BlockLayout":
        try:
            dim = int(doc["dim"])
            blocks = doc["blocks"]
            fracture_cells = int(doc["fracture_cells"])
            states = tuple(doc["states"])
        except (KeyError, TypeError) as exc:
            raise SparseFormatError(f"layout document missing field: {exc}") from exc
        if len(blocks) != N_BLOCKS:
            raise SparseFormatError(f"layout needs {N_BLOCKS} blocks, got {len(blocks)}")
        ranges = []
        for want, entry in zip(BLOCK_NAMES, blocks):
            name = entry.get("name")
            if name != want:
                raise SparseFormatError(
                    f"layout block name {name!r} out of order (expected {want!r})"
                )
            ranges.append((int(entry["start"]), int(entry["end"])))
        row_scale = doc.get("row_scale")
        col_scale = doc.get("col_scale")
        return cls(
            dim=dim,
            block_ranges=tuple(ranges),
            fracture_cells=fracture_cells,
            states=states,
            sides=int(doc.get("sides", 2)),
            intersection_cells=int(doc.get("intersection_cells", 0)),
            fs_scale=(None if doc.get("fs_scale") is None else float(doc["fs_scale"])),
            row_scale=(None if row_scale is None else np.asarray(row_scale, dtype=np.float64)),
            col_scale=(None if col_scale is None else np.asarray(col_scale, dtype=np.float64)),
        )


@dataclass(frozen=True, eq=False)
class TrailingView:
    """Index view of the trailing blocks ``first_block``..6 of a layout.

    The Schur cascade works on progressively smaller systems that keep the
    tail of the six-block partitioning: blocks 2-6 after contact elimination,
    blocks 4-6 after mechanics, blocks 5-6 after the interface fluxes. A view
    translates 1-based block ids into local row ranges of those systems.
    """

    layout: BlockLayout
    first_block: int

    def __post_init__(self):
        if not 1 <= self.first_block <= N_BLOCKS:
            raise ValueError(f"first_block {self.first_block} outside 1..{N_BLOCKS}")

    @property
    def offset(self) -> int:
        return self.layout.block_range(self.first_block)[0]

    @property
    def n(self) -> int:
        return self.layout.n - self.offset

    def block_range(self, i: int) -> tuple:
        if i < self.first_block:
            raise ValueError(
                f"block {i} was eliminated; this view starts at block {self.first_block}"
            )
        start, end = self.layout.block_range(i)
        return start - self.offset, end - self.offset

    def block_slice(self, i: int) -> slice:
        start, end = self.block_range(i)
        return slice(start, end)

    def extract(self, A, i: int, j: int) -> sp.csr_matrix:
        return ensure_canonical(A[self.block_slice(i), self.block_slice(j)])


def extract_block(A, layout: BlockLayout, i: int, j: int) -> sp.csr_matrix:
    """Extract the (i, j) submatrix of the six-block grid, local indices.

    Block ids are 1-based. Reassembling all 36 blocks reproduces ``A``.
    """
    rows = layout.block_slice(i)
    cols = layout.block_slice(j)
    return ensure_canonical(A[rows, cols])


def block_grid(A, layout: BlockLayout) -> dict:
    """All 36 blocks keyed by 1-based (i, j)."""
    return {
        (i, j): extract_block(A, layout, i, j)
        for i in range(1, N_BLOCKS + 1)
        for j in range(1, N_BLOCKS + 1)
    }


def assemble_blocks(blocks: dict, layout: BlockLayout) -> sp.csr_matrix:
    """Inverse of :func:`block_grid`: stitch a 6x6 grid of blocks together."""
    grid = [
        [blocks[(i, j)] for j in range(1, N_BLOCKS + 1)]
        for i in range(1, N_BLOCKS + 1)
    ]
    return ensure_canonical(sp.bmat(grid, format="csr"))


def block_diag_csr(cells: np.ndarray) -> sp.csr_matrix:
    """CSR matrix with dense square cell blocks on the diagonal.

    ``cells`` has shape (n_cells, k, k). Used for D22^-1, regularized
    contact inverses, and the right transform's coupling block.
    """
    cells = np.ascontiguousarray(cells, dtype=np.float64)
    n_cells, k, k2 = cells.shape
    if k != k2:
        raise DimensionMismatchError("cell blocks must be square")
    n = n_cells * k
    indptr = np.arange(0, n * k + 1, k, dtype=np.int64)
    indices = np.repeat(np.arange(n_cells, dtype=np.int64) * k, k * k)
    indices = indices + np.tile(np.arange(k, dtype=np.int64), n_cells * k)
    data = cells.reshape(-1)
    return sp.csr_matrix((data, indices, indptr), shape=(n, n))
