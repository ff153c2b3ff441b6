"""Restarted GMRES and flexible GMRES, right-preconditioned.

One Arnoldi driver serves both: modified Gram-Schmidt with a single
reorthogonalization pass when cancellation eats more than half of a new
basis vector's norm, Givens rotations for the running least-squares
residual estimate, and true-residual verification at every restart boundary
so an optimistic estimate can never declare false convergence.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError, NonFiniteOperatorError

_REORTH_DROP = 0.5
_BREAKDOWN = 1e-14


@dataclass(frozen=True)
class KrylovConfig:
    restart: int = 30
    max_iters: int = 120
    rtol: float = 1e-12
    flexible: bool = False
    inner_rtol: float = 1e-5

    def __post_init__(self):
        if self.restart < 1:
            raise ValueError(f"restart must be at least 1, got {self.restart}")
        if not 0.0 < self.rtol < 1.0:
            raise ValueError(f"rtol must lie in (0, 1), got {self.rtol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")

    def to_json_dict(self) -> dict:
        return {
            "restart": self.restart,
            "max_iters": self.max_iters,
            "rtol": self.rtol,
            "flexible": self.flexible,
            "inner_rtol": self.inner_rtol,
        }


@dataclass
class SolveReport:
    """Outcome of one linear solve."""

    converged: bool
    iterations: int
    residual_history: np.ndarray
    final_relative_residual: float
    config: dict = field(default_factory=dict)
    coefficients: dict | None = None
    timings: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "residual_history": [float(v) for v in self.residual_history],
            "final_relative_residual": float(self.final_relative_residual),
            "config": self.config,
            "coefficients": self.coefficients,
            "timings": self.timings,
            "extra": self.extra,
        }


def _as_operator(A, what: str):
    if callable(A):
        return A
    if sp.issparse(A) or isinstance(A, np.ndarray):
        return lambda v: A @ v
    raise TypeError(f"{what} must be a matrix or a callable, got {type(A)!r}")


def _checked(y: np.ndarray, where: str) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise NonFiniteOperatorError(
            f"{where} produced non-finite entries", where=where
        )
    return y


def _gmres_driver(A, M, b, cfg: KrylovConfig, flexible: bool):
    op = _as_operator(A, "operator")
    prec = None if M is None else _as_operator(M, "preconditioner")
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[0]
    t0 = time.perf_counter()

    def finish(x, history, iterations, true_rel):
        return x, SolveReport(
            converged=bool(true_rel <= cfg.rtol),
            iterations=iterations,
            residual_history=np.asarray(history, dtype=np.float64),
            final_relative_residual=float(true_rel),
            config=cfg.to_json_dict(),
            timings={"solve_ms": (time.perf_counter() - t0) * 1e3},
        )

    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return finish(np.zeros(n), [0.0], 0, 0.0)

    x = np.zeros(n)
    history = [norm_b]
    iterations = 0

    while True:
        r = b - _checked(op(x), "operator") if iterations else b.copy()
        beta = float(np.linalg.norm(r))
        true_rel = beta / norm_b
        if true_rel <= cfg.rtol or iterations >= cfg.max_iters:
            return finish(x, history, iterations, true_rel)

        m = min(cfg.restart, cfg.max_iters - iterations)
        V = np.zeros((m + 1, n))
        Z = np.zeros((m, n)) if flexible else None
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        j_used = 0
        breakdown = False

        for j in range(m):
            z = V[j] if prec is None else _checked(prec(V[j]), "preconditioner")
            if flexible:
                Z[j] = z
            w = _checked(op(z), "operator")
            norm_before = float(np.linalg.norm(w))
            for i in range(j + 1):
                H[i, j] = float(V[i] @ w)
                w -= H[i, j] * V[i]
            norm_after = float(np.linalg.norm(w))
            if norm_after < _REORTH_DROP * norm_before:
                # severe cancellation: one more orthogonalization pass
                for i in range(j + 1):
                    correction = float(V[i] @ w)
                    H[i, j] += correction
                    w -= correction * V[i]
                norm_after = float(np.linalg.norm(w))
            H[j + 1, j] = norm_after
            iterations += 1
            j_used = j + 1

            if norm_after <= _BREAKDOWN * max(norm_before, 1.0):
                breakdown = True
            else:
                V[j + 1] = w / norm_after

            # apply the accumulated Givens rotations, then a new one
            for i in range(j):
                h_i = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = h_i
            denom = float(np.hypot(H[j, j], H[j + 1, j]))
            if denom == 0.0:
                cs[j], sn[j] = 1.0, 0.0
            else:
                cs[j] = H[j, j] / denom
                sn[j] = H[j + 1, j] / denom
            H[j, j] = cs[j] * H[j, j] + sn[j] * H[j + 1, j]
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            history.append(abs(float(g[j + 1])))

            if breakdown or abs(g[j + 1]) / norm_b <= cfg.rtol:
                break

        # solve the small triangular system and expand the correction
        k = j_used
        y = np.zeros(k)
        for i in range(k - 1, -1, -1):
            s = g[i] - H[i, i + 1 : k] @ y[i + 1 : k]
            y[i] = s / H[i, i] if H[i, i] != 0.0 else 0.0
        if flexible:
            x = x + Z[:k].T @ y
        else:
            combo = V[:k].T @ y
            x = x + (combo if prec is None else _checked(prec(combo), "preconditioner"))


def gmres(A, M, b, cfg: KrylovConfig | None = None):
    """Right-preconditioned restarted GMRES.

    Solves A M^-1 y = b with x = M^-1 y accumulated implicitly; ``M`` is a
    fixed linear operator (matrix or callable) or None. Returns
    (x, SolveReport). Convergence is judged on the true residual
    ||b - A x|| / ||b|| at restart boundaries.
    """
    cfg = cfg or KrylovConfig()
    return _gmres_driver(A, M, b, cfg, flexible=False)


def fgmres(A, M, b, cfg: KrylovConfig | None = None):
    """Flexible GMRES: the preconditioner may change between iterations.

    Stores the preconditioned basis explicitly, so ``M`` may be an inner
    iterative solve. With a fixed ``M`` the iterates match :func:`gmres`.
    """
    cfg = cfg or KrylovConfig(flexible=True)
    return _gmres_driver(A, M, b, cfg, flexible=True)
