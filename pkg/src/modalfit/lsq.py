"""Coefficient matrices and the weighted linear least-squares solve.

Column layouts
--------------
unstructured  ``[1/(xi-l_1) .. 1/(xi-l_r) | -h/(xi-l_1) .. -h/(xi-l_r)]``
so1           ``[w_j/((xi-l_j+)(xi-l_j-)) for j | -h/(xi-l_1+), -h/(xi-l_1-), ...]``
so2           ``[w_j/((xi-l_j+)(xi-l_j-)) for j | -w_j h/((xi-l_j+)(xi-l_j-)) for j]``
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .exceptions import RealnessError, SupportPointError
from .types import FrequencySampleSet, PolePairSet, PoleSet

WEIGHT_BOUNDS = (1e-8, 1e8)
RANK_COND_LIMIT = 1e14


def _cauchy(points: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    diff = points[:, None] - nodes[None, :]
    if np.any(diff == 0):
        i, j = np.argwhere(diff == 0)[0]
        raise SupportPointError(f"sampling point {points[i]} coincides with expansion point {nodes[j]}")
    return 1.0 / diff


def _pair_columns(samples: FrequencySampleSet, pairs: PolePairSet) -> np.ndarray:
    xi = samples.points
    return pairs.omega[None, :] * _cauchy(xi, pairs.lambda_plus) * _cauchy(xi, pairs.lambda_minus)


def assemble_unstructured(samples: FrequencySampleSet, poles: PoleSet) -> np.ndarray:
    C = _cauchy(samples.points, poles.lambdas)
    return np.hstack([C, -samples.values[:, None] * C])


def assemble_so1(samples: FrequencySampleSet, pairs: PolePairSet) -> np.ndarray:
    C = _cauchy(samples.points, pairs.points)
    return np.hstack([_pair_columns(samples, pairs), -samples.values[:, None] * C])


def assemble_so2(samples: FrequencySampleSet, pairs: PolePairSet) -> np.ndarray:
    P = _pair_columns(samples, pairs)
    return np.hstack([P, -samples.values[:, None] * P])


def update_weights(den_eval: Callable, samples: FrequencySampleSet) -> tuple[np.ndarray, int]:
    """Return ``1/|d(xi_i)|`` clipped into ``WEIGHT_BOUNDS`` and the number of clipped entries."""
    mag = np.abs(np.asarray(den_eval(samples.points), dtype=complex).reshape(-1))
    with np.errstate(divide="ignore"):
        raw = np.where(np.isfinite(mag), 1.0 / mag, 0.0)
    lo, hi = WEIGHT_BOUNDS
    clipped = int(np.count_nonzero((raw < lo) | (raw > hi)))
    return np.clip(raw, lo, hi), clipped


@dataclass(frozen=True)
class WeightedLS:
    """The problem ``min ||diag(weights) (A x - h)||_2``."""

    A: np.ndarray
    h: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=complex)
        h = np.asarray(self.h, dtype=complex).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[0] != h.size or w.size != h.size:
            raise ValueError("inconsistent least-squares dimensions")
        if A.shape[0] < A.shape[1]:
            raise ValueError(f"underdetermined system: {A.shape[0]} rows < {A.shape[1]} unknowns")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be positive and finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class LSSolution:
    x: np.ndarray
    residual: float
    cond: float
    rank_deficient: bool


def _conjugate_blocks(nodes: np.ndarray) -> np.ndarray:
    """Map real parameters onto coefficients shared by conjugate nodes."""
    m = nodes.size
    cols = []
    done = np.zeros(m, dtype=bool)
    for j, lam in enumerate(nodes):
        if done[j]:
            continue
        if lam.imag == 0:
            col = np.zeros(m, dtype=complex)
            col[j] = 1
            cols.append(col)
            done[j] = True
            continue
        partners = [k for k in range(m) if not done[k] and k != j and nodes[k] == lam.conjugate()]
        if not partners:
            raise RealnessError(f"expansion point {lam} has no conjugate partner")
        k = partners[0]
        re = np.zeros(m, dtype=complex)
        im = np.zeros(m, dtype=complex)
        re[j] = re[k] = 1
        im[j], im[k] = 1j, -1j
        cols += [re, im]
        done[j] = done[k] = True
    return np.column_stack(cols)


def real_basis_unstructured(poles: PoleSet) -> np.ndarray:
    """``x = T y`` with ``y`` real, tying the weights of conjugate poles together."""
    T = _conjugate_blocks(poles.lambdas)
    return scipy.linalg.block_diag(T, T)


def real_basis_so1(pairs: PolePairSet) -> np.ndarray:
    r = len(pairs)
    return scipy.linalg.block_diag(np.eye(r), _conjugate_blocks(pairs.points))


def real_basis_so2(pairs: PolePairSet) -> np.ndarray:
    return np.eye(2 * len(pairs))


def _lstsq_equilibrated(B: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float, bool]:
    norms = np.linalg.norm(B, axis=0)
    norms[norms == 0] = 1.0
    Bs = B / norms
    Q, R, perm = scipy.linalg.qr(Bs, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    cond = np.inf if diag[-1] == 0 else float(diag[0] / diag[-1])
    if cond > RANK_COND_LIMIT:
        z = scipy.linalg.lstsq(Bs, y, cond=1.0 / RANK_COND_LIMIT)[0]
        return z / norms, cond, True
    z = np.empty(B.shape[1], dtype=np.result_type(B, y))
    z[perm] = scipy.linalg.solve_triangular(R, Q.conj().T @ y)
    return z / norms, cond, False


def solve_weighted_ls(
    problem: WeightedLS, enforce_realness: bool = False, real_basis: np.ndarray | None = None
) -> LSSolution:
    """Minimize ``||Delta (A x - h)||_2``.

    With ``enforce_realness`` the unknowns are ``x = T y`` for real ``y``
    (``T`` defaults to the identity) and real and imaginary parts of every row
    are stacked into one real problem. Columns are equilibrated to unit 2-norm
    and the system is factored by column-pivoted QR; when the estimated
    condition number exceeds ``RANK_COND_LIMIT`` the minimum-norm solution is
    returned and flagged.
    """
    W = problem.weights[:, None] * problem.A
    y = problem.weights * problem.h
    if enforce_realness:
        T = np.eye(W.shape[1]) if real_basis is None else np.asarray(real_basis, dtype=complex)
        B = W @ T
        Br = np.vstack([B.real, B.imag])
        yr = np.concatenate([y.real, y.imag])
        if Br.shape[0] < Br.shape[1]:
            raise ValueError("too few rows for the real parametrization")
        z, cond, deficient = _lstsq_equilibrated(Br, yr)
        x = T @ z
    else:
        x, cond, deficient = _lstsq_equilibrated(W, y)
    x = np.asarray(x, dtype=complex)
    residual = float(np.linalg.norm(W @ x - y))
    return LSSolution(x, residual, cond, deficient)
