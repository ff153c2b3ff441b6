"""Sequential numba kernels behind the incomplete factorizations and smoothers.

Everything here is deliberately single-threaded with fixed loop order, so
factorizations, triangular solves, and relaxation sweeps are bit-reproducible
run to run. CSR inputs must be canonical (sorted column indices) and carry a
``diag`` array with the storage position of each diagonal entry.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def ilu0_factor_kernel(indptr, indices, data, diag):
    """In-place ILU(0) on the pattern of A; returns the failing row or -1.

    On exit ``data`` holds L (unit diagonal, implicit) strictly below the
    diagonal and U on and above it, both on the original sparsity pattern.
    """
    n = indptr.shape[0] - 1
    for i in range(n):
        for kp in range(indptr[i], diag[i]):
            k = indices[kp]
            piv = data[diag[k]]
            if piv == 0.0:
                return k
            lik = data[kp] / piv
            data[kp] = lik
            # subtract lik * (row k upper part) from row i, matching columns
            jp = diag[k] + 1
            ip = kp + 1
            i_end = indptr[i + 1]
            k_end = indptr[k + 1]
            while jp < k_end and ip < i_end:
                col_k = indices[jp]
                col_i = indices[ip]
                if col_k == col_i:
                    data[ip] -= lik * data[jp]
                    jp += 1
                    ip += 1
                elif col_k < col_i:
                    jp += 1
                else:
                    ip += 1
        if data[diag[i]] == 0.0:
            return i
    return -1


@numba.njit(cache=True)
def lu_solve_kernel(indptr, indices, data, diag, b):
    """Solve LU x = b for combined ILU(0) storage."""
    n = indptr.shape[0] - 1
    x = b.copy()
    for i in range(n):
        s = 0.0
        for p in range(indptr[i], diag[i]):
            s += data[p] * x[indices[p]]
        x[i] -= s
    for i in range(n - 1, -1, -1):
        s = 0.0
        for p in range(diag[i] + 1, indptr[i + 1]):
            s += data[p] * x[indices[p]]
        x[i] = (x[i] - s) / data[diag[i]]
    return x


@numba.njit(cache=True)
def _small_inv(a):
    """Dense inverse by Gaussian elimination with partial pivoting.

    Returns (inverse, ok). ok is False only at an exactly zero pivot.
    """
    k = a.shape[0]
    work = a.copy()
    inv = np.eye(k)
    for col in range(k):
        piv_row = col
        piv_val = abs(work[col, col])
        for r in range(col + 1, k):
            if abs(work[r, col]) > piv_val:
                piv_val = abs(work[r, col])
                piv_row = r
        if work[piv_row, col] == 0.0:
            return inv, False
        if piv_row != col:
            for c in range(k):
                work[col, c], work[piv_row, c] = work[piv_row, c], work[col, c]
                inv[col, c], inv[piv_row, c] = inv[piv_row, c], inv[col, c]
        piv = work[col, col]
        for c in range(k):
            work[col, c] /= piv
            inv[col, c] /= piv
        for r in range(k):
            if r != col and work[r, col] != 0.0:
                f = work[r, col]
                for c in range(k):
                    work[r, c] -= f * work[col, c]
                    inv[r, c] -= f * inv[col, c]
    return inv, True


@numba.njit(cache=True)
def block_ilu0_factor_kernel(indptr, indices, blocks, diag, inv_diag):
    """Block ILU(0) over dense cell blocks; returns failing cell or -1.

    ``blocks`` has shape (nnzb, k, k). L blocks (strictly below the block
    diagonal) hold L_IK = A_IK * inv(U_KK); ``inv_diag`` receives the
    inverses of the final diagonal blocks.
    """
    n = indptr.shape[0] - 1
    for i in range(n):
        for kp in range(indptr[i], diag[i]):
            k = indices[kp]
            lik = blocks[kp] @ inv_diag[k]
            blocks[kp] = lik
            jp = diag[k] + 1
            ip = kp + 1
            i_end = indptr[i + 1]
            k_end = indptr[k + 1]
            while jp < k_end and ip < i_end:
                col_k = indices[jp]
                col_i = indices[ip]
                if col_k == col_i:
                    blocks[ip] = blocks[ip] - lik @ blocks[jp]
                    jp += 1
                    ip += 1
                elif col_k < col_i:
                    jp += 1
                else:
                    ip += 1
        inv, ok = _small_inv(blocks[diag[i]])
        if not ok:
            return i
        inv_diag[i] = inv
    return -1


@numba.njit(cache=True)
def block_lu_solve_kernel(indptr, indices, blocks, diag, inv_diag, b, k):
    """Solve block LU x = b; ``b`` has length n_cells * k."""
    n = indptr.shape[0] - 1
    x = b.copy()
    for i in range(n):
        acc = np.zeros(k)
        for p in range(indptr[i], diag[i]):
            j = indices[p]
            acc += blocks[p] @ x[j * k : (j + 1) * k]
        x[i * k : (i + 1) * k] -= acc
    for i in range(n - 1, -1, -1):
        acc = np.zeros(k)
        for p in range(diag[i] + 1, indptr[i + 1]):
            j = indices[p]
            acc += blocks[p] @ x[j * k : (j + 1) * k]
        x[i * k : (i + 1) * k] = inv_diag[i] @ (x[i * k : (i + 1) * k] - acc)
    return x


@numba.njit(cache=True)
def sor_sweep_kernel(indptr, indices, data, diag, x, b, omega, forward):
    """One in-place SOR sweep; ``forward`` selects the traversal direction."""
    n = indptr.shape[0] - 1
    if forward:
        start, stop, step = 0, n, 1
    else:
        start, stop, step = n - 1, -1, -1
    for i in range(start, stop, step):
        s = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j != i:
                s += data[p] * x[j]
        x[i] += omega * ((b[i] - s) / data[diag[i]] - x[i])


@numba.njit(cache=True)
def rs_cf_split_kernel(s_indptr, s_indices, st_indptr, st_indices):
    """Ruge-Stuben first-pass splitting over a strength graph S and its
    transpose. Returns int8 marks: 1 fine, 2 coarse. Deterministic: the
    highest influence count wins, ties break toward the lowest index."""
    n = s_indptr.shape[0] - 1
    marks = np.zeros(n, np.int8)
    lam = np.empty(n, np.int64)
    for i in range(n):
        lam[i] = st_indptr[i + 1] - st_indptr[i]
    n_assigned = 0
    while n_assigned < n:
        best = -1
        best_lam = -1
        for i in range(n):
            if marks[i] == 0 and lam[i] > best_lam:
                best = i
                best_lam = lam[i]
        if best_lam <= 0:
            # nothing left influences an unassigned node; keep the rest coarse
            # (they have no coarse neighbor to interpolate from)
            for i in range(n):
                if marks[i] == 0:
                    marks[i] = 2
                    n_assigned += 1
            break
        marks[best] = 2
        n_assigned += 1
        for p in range(st_indptr[best], st_indptr[best + 1]):
            j = st_indices[p]
            if marks[j] == 0:
                marks[j] = 1
                n_assigned += 1
                for q in range(s_indptr[j], s_indptr[j + 1]):
                    k = s_indices[q]
                    if marks[k] == 0:
                        lam[k] += 1
        for p in range(s_indptr[best], s_indptr[best + 1]):
            j = s_indices[p]
            if marks[j] == 0 and lam[j] > 0:
                lam[j] -= 1
    return marks


@numba.njit(cache=True)
def direct_interp_kernel(a_indptr, a_indices, a_data, s_indptr, s_indices,
                         s_data, marks, coarse_index):
    """Direct interpolation weights. Coarse rows get a unit entry; fine rows
    spread the row sum over strong coarse neighbors, with positive and
    negative couplings balanced separately. A sign class without a strong
    coarse neighbor is lumped into the diagonal."""
    n = a_indptr.shape[0] - 1
    indptr = np.zeros(n + 1, np.int64)
    for i in range(n):
        if marks[i] == 2:
            indptr[i + 1] = 1
        else:
            c = 0
            for p in range(s_indptr[i], s_indptr[i + 1]):
                if marks[s_indices[p]] == 2:
                    c += 1
            indptr[i + 1] = c
    for i in range(n):
        indptr[i + 1] += indptr[i]
    nnz = indptr[n]
    indices = np.empty(nnz, np.int64)
    data = np.empty(nnz, np.float64)
    for i in range(n):
        pos = indptr[i]
        if marks[i] == 2:
            indices[pos] = coarse_index[i]
            data[pos] = 1.0
            continue
        neigh_neg = 0.0
        neigh_pos = 0.0
        diag = 0.0
        for p in range(a_indptr[i], a_indptr[i + 1]):
            j = a_indices[p]
            v = a_data[p]
            if j == i:
                diag = v
            elif v < 0.0:
                neigh_neg += v
            else:
                neigh_pos += v
        coarse_neg = 0.0
        coarse_pos = 0.0
        for p in range(s_indptr[i], s_indptr[i + 1]):
            if marks[s_indices[p]] == 2:
                v = s_data[p]
                if v < 0.0:
                    coarse_neg += v
                else:
                    coarse_pos += v
        if coarse_neg == 0.0:
            diag += neigh_neg
            alpha = 0.0
        else:
            alpha = neigh_neg / coarse_neg
        if coarse_pos == 0.0:
            diag += neigh_pos
            beta = 0.0
        else:
            beta = neigh_pos / coarse_pos
        for p in range(s_indptr[i], s_indptr[i + 1]):
            j = s_indices[p]
            if marks[j] == 2:
                v = s_data[p]
                if diag == 0.0:
                    w = 0.0
                elif v < 0.0:
                    w = -alpha * v / diag
                else:
                    w = -beta * v / diag
                indices[pos] = coarse_index[j]
                data[pos] = w
                pos += 1
    return indptr, indices, data
