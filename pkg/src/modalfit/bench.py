"""Synthetic modally damped truth systems and exact frequency samples.

Truth systems are spring-mass chains with Rayleigh damping ``E = alpha M + beta K``,
which is modally damped by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import ResonanceError, StructureError
from .types import FrequencySampleSet, SecondOrderModel

RESONANCE_COND = 1e15


@dataclass(frozen=True)
class DenseSecondOrderSystem:
    """``M q'' + E q' + K q = Bu u``, ``y = Cp q``."""

    M: np.ndarray
    E: np.ndarray
    K: np.ndarray
    Bu: np.ndarray
    Cp: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.M).shape[0]
        for name in ("M", "E", "K"):
            mat = np.array(getattr(self, name), dtype=float)
            if mat.shape != (n, n):
                raise ValueError(f"{name} must be {n}x{n}")
            object.__setattr__(self, name, mat)
        for name in ("Bu", "Cp"):
            vec = np.array(getattr(self, name), dtype=float).reshape(-1)
            if vec.size != n:
                raise ValueError(f"{name} must have length {n}")
            object.__setattr__(self, name, vec)

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def modal_damping_defect(self) -> float:
        """Relative size of ``E M^-1 K - K M^-1 E``."""
        Minv = np.linalg.inv(self.M)
        lhs = self.E @ Minv @ self.K
        rhs = self.K @ Minv @ self.E
        scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs), np.finfo(float).tiny)
        return float(np.linalg.norm(lhs - rhs) / scale)


@dataclass(frozen=True)
class ModalDecomposition:
    omega: np.ndarray
    psi: np.ndarray
    residues: np.ndarray
    X: np.ndarray
    Y: np.ndarray

    def to_model(self) -> SecondOrderModel:
        return SecondOrderModel(self.omega, self.psi, self.residues)


def make_rayleigh_chain(n: int, alpha: float = 0.0, beta: float = 0.0,
                        m0: float = 1.0, k0: float = 1.0) -> DenseSecondOrderSystem:
    """Fixed-fixed chain of ``n`` equal masses, driven at the first mass and observed at the last."""
    if n < 1:
        raise ValueError("chain needs at least one mass")
    if m0 <= 0 or k0 <= 0 or alpha < 0 or beta < 0:
        raise ValueError("masses and stiffnesses must be positive, damping nonnegative")
    M = m0 * np.eye(n)
    K = k0 * (2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1))
    E = alpha * M + beta * K
    Bu = np.zeros(n)
    Cp = np.zeros(n)
    Bu[0] = 1.0
    Cp[-1] = 1.0
    return DenseSecondOrderSystem(M, E, K, Bu, Cp)


def sample_dense(system: DenseSecondOrderSystem, points, conj_close: bool = False) -> FrequencySampleSet:
    """Evaluate ``Cp (s^2 M + s E + K)^-1 Bu`` by a dense solve at every point."""
    pts = np.asarray(points, dtype=complex).reshape(-1)
    values = np.empty(pts.size, dtype=complex)
    for i, s in enumerate(pts):
        Z = s * s * system.M + s * system.E + system.K
        if np.linalg.cond(Z) > RESONANCE_COND:
            raise ResonanceError(complex(s))
        values[i] = system.Cp @ np.linalg.solve(Z, system.Bu)
    samples = FrequencySampleSet(pts, values)
    return samples.close_under_conjugation() if conj_close else samples


def modal_decompose(system: DenseSecondOrderSystem, tol: float = 1e-8) -> ModalDecomposition:
    """Simultaneous diagonalization of ``(M, E, K)``.

    Eigenvectors of ``K X = M X Omega^2`` are scaled so that ``X^T M X = Omega^-1``
    and ``X^T K X = Omega``; then ``X^T E X = 2 Psi`` and the modal residues are
    ``(Cp X)_j (X^T Bu)_j``.
    """
    evals, V = scipy.linalg.eigh(system.K, system.M)
    if np.any(evals <= 0):
        raise StructureError("stiffness pencil is not positive definite")
    omega = np.sqrt(evals)
    X = V / np.sqrt(omega)[None, :]
    D = X.T @ system.E @ X
    off = D - np.diag(np.diag(D))
    scale = max(np.abs(np.diag(D)).max(), np.finfo(float).tiny)
    if np.abs(off).max() > tol * scale:
        raise StructureError("damping matrix is not modally diagonalizable")
    psi = 0.5 * np.diag(D)
    residues = (system.Cp @ X) * (X.T @ system.Bu)
    return ModalDecomposition(omega, psi, residues, X, X.copy())


def make_point_grid(f_lo: float, f_hi: float, count: int, spacing: str = "linear") -> np.ndarray:
    """Points ``i*omega`` on the positive imaginary axis, endpoints included."""
    if count < 2 or not f_lo < f_hi or f_lo < 0:
        raise ValueError("need 0 <= f_lo < f_hi and count >= 2")
    if spacing == "linear":
        omega = np.linspace(f_lo, f_hi, count)
    elif spacing == "log":
        if f_lo <= 0:
            raise ValueError("log spacing needs f_lo > 0")
        omega = np.geomspace(f_lo, f_hi, count)
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    return 1j * omega


def add_noise(samples: FrequencySampleSet, level: float, seed: int = 0) -> FrequencySampleSet:
    """Multiply each value by ``1 + level * g`` with ``g`` standard complex Gaussian.

    Conjugate-closed input stays closed: noise is drawn for one member of each
    conjugate pair and mirrored onto the other.
    """
    rng = np.random.default_rng(seed)
    pts = samples.points
    index = {z: i for i, z in enumerate(pts.tolist())}
    factor = np.ones(pts.size, dtype=complex)
    done = np.zeros(pts.size, dtype=bool)
    for i, z in enumerate(pts.tolist()):
        if done[i]:
            continue
        g = complex(rng.standard_normal(), rng.standard_normal()) / np.sqrt(2.0)
        factor[i] = 1.0 + level * g
        done[i] = True
        k = index.get(z.conjugate())
        if samples.conjugate_closed and k is not None and not done[k]:
            factor[k] = np.conj(factor[i])
            done[k] = True
        elif samples.conjugate_closed and k == i:
            factor[i] = factor[i].real
    return FrequencySampleSet(pts, samples.values * factor)
