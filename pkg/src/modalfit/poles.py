"""Relocation of expansion points: denominator zeros, stabilization and pairing."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .exceptions import PairingError, SingularMassError
from .types import (
    FullyStructuredBarycentric,
    PartialStructuredBarycentric,
    PolePair,
    PolePairSet,
    PoleSet,
    pair_from_lambdas,
)

SNAP_REAL = 1e-10
CONJ_MATCH_TOL = 1e-8


def _real_realization(lambdas: np.ndarray, weights: np.ndarray):
    """Real ``(A, b, c)`` with ``c^T (sI - A)^-1 b = sum_j w_j / (s - l_j)``.

    Returns ``None`` unless every complex node has its exact conjugate with the
    conjugated weight and every real node carries a real weight.
    """
    m = lambdas.size
    used = np.zeros(m, dtype=bool)
    blocks, bs, cs = [], [], []
    for j in range(m):
        if used[j]:
            continue
        lam, w = lambdas[j], weights[j]
        if lam.imag == 0:
            if w.imag != 0:
                return None
            blocks.append(np.array([[lam.real]]))
            bs.append([1.0])
            cs.append([w.real])
            used[j] = True
            continue
        match = [k for k in range(m) if not used[k] and k != j
                 and lambdas[k] == lam.conjugate() and weights[k] == w.conjugate()]
        if not match:
            return None
        used[j] = used[match[0]] = True
        a, beta = lam.real, lam.imag
        blocks.append(np.array([[a, beta], [-beta, a]]))
        bs.append([2.0, 0.0])
        cs.append([w.real, w.imag])
    A = scipy.linalg.block_diag(*blocks)
    return A, np.concatenate(bs), np.concatenate(cs)


def zeros_unstructured(lambdas, den_weights) -> np.ndarray:
    """Zeros of ``d(s) = 1 + sum_j w_j / (s - l_j)``.

    These are the eigenvalues of ``diag(l) - w 1^T``. Conjugate-symmetric data
    goes through an equivalent real matrix so the zeros come out exactly
    conjugate-closed.
    """
    nodes = lambdas.lambdas if isinstance(lambdas, PoleSet) else np.asarray(lambdas, dtype=complex)
    weights = np.asarray(den_weights, dtype=complex).reshape(-1)
    if nodes.size != weights.size:
        raise ValueError("need one weight per expansion point")
    if len(set(nodes.tolist())) != nodes.size:
        raise ValueError("expansion points must be mutually distinct")
    real = _real_realization(nodes, weights)
    if real is not None:
        A, b, c = real
        return scipy.linalg.eigvals(A - np.outer(b, c))
    return scipy.linalg.eigvals(np.diag(nodes) - np.outer(weights, np.ones(nodes.size)))


def zeros_so1(form: PartialStructuredBarycentric) -> np.ndarray:
    return zeros_unstructured(form.pairs.points, form.den_weights)


def quadratic_pencil(form: FullyStructuredBarycentric) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(M, E, K + g 1^T)`` whose quadratic eigenvalues are the denominator zeros."""
    omega = form.pairs.omega
    if np.any(omega == 0):
        raise SingularMassError("a pole pair has zero natural frequency")
    g = form.den_residues
    r = omega.size
    M = np.diag(1.0 / omega)
    E = np.diag(2.0 * form.pairs.psi)
    K = np.diag(omega) + np.outer(g, np.ones(r))
    if not (np.any(M.imag) or np.any(E.imag) or np.any(K.imag)):
        M, E, K = M.real, E.real, K.real
    return M, E, K


def zeros_so2(form: FullyStructuredBarycentric) -> np.ndarray:
    """Eigenvalues of ``l^2 M + l E + (K + g 1^T)`` via the first companion form."""
    M, E, K = quadratic_pencil(form)
    r = M.shape[0]
    Minv = np.diag(1.0 / np.diag(M))
    L = np.block([[np.zeros((r, r)), np.eye(r)], [-Minv @ K, -Minv @ E]])
    return scipy.linalg.eigvals(L)


def stabilize(points) -> np.ndarray:
    """Reflect right half-plane points; nudge imaginary-axis points to the left."""
    pts = np.array(points, dtype=complex).reshape(-1)
    re, im = pts.real.copy(), pts.imag
    re = np.where(re > 0, -re, re)
    re = np.where(re == 0, -1e-8 * np.maximum(1.0, np.abs(im)), re)
    return re + 1j * im


def _snap(points: np.ndarray) -> np.ndarray:
    small = np.abs(points.imag) < SNAP_REAL * np.abs(points)
    return np.where(small, points.real + 0j, points)


def conjugate_symmetrize(points) -> np.ndarray:
    """Snap near-real points to the real axis and make complex points exact conjugate pairs.

    Output order: real points ascending by magnitude, then ``z, conj(z)`` with
    ``Im z > 0``.
    """
    pts = _snap(np.asarray(points, dtype=complex).reshape(-1))
    reals = sorted((z for z in pts.tolist() if z.imag == 0), key=lambda z: (abs(z), z.real))
    cplx = []
    for z, _ in _match_conjugates(pts):
        cplx += [z, z.conjugate()]
    return np.array(reals + cplx, dtype=complex)


def _match_conjugates(pts: np.ndarray) -> list[tuple[complex, complex]]:
    upper = [z for z in pts.tolist() if z.imag > 0]
    lower = [z for z in pts.tolist() if z.imag < 0]
    if len(upper) != len(lower):
        raise PairingError("points are not closed under conjugation")
    out = []
    for z in upper:
        dist = [abs(w - z.conjugate()) for w in lower]
        k = int(np.argmin(dist))
        if dist[k] > CONJ_MATCH_TOL * max(1.0, abs(z)):
            raise PairingError(f"no conjugate partner for {z}")
        lower.pop(k)
        out.append((z, z.conjugate()))
    return out


def _zip_reals(reals: list[complex]) -> list[tuple[complex, complex]]:
    # smallest magnitude (lambda+) with largest magnitude (lambda-), moving inward
    ordered = sorted(reals, key=lambda z: (abs(z), z.real))
    half = len(ordered) // 2
    return [(ordered[i], ordered[-1 - i]) for i in range(half)]


def _greedy_pairs(pool: list[complex]) -> list[tuple[complex, complex]]:
    candidates = sorted(
        ((abs(pool[a] - pool[b].conjugate()), a, b)
         for a in range(len(pool)) for b in range(a + 1, len(pool))),
        key=lambda t: t[0],
    )
    taken: set[int] = set()
    out = []
    for _, a, b in candidates:
        if a in taken or b in taken:
            continue
        taken |= {a, b}
        za, zb = pool[a], pool[b]
        out.append((za, zb) if za.imag >= zb.imag else (zb, za))
    return out


def _canonical(pairs: list[PolePair]) -> PolePairSet:
    pairs = sorted(pairs, key=lambda p: (abs(p.omega), p.psi.real, -p.lambda_plus.imag,
                                         p.lambda_plus.real))
    return PolePairSet(tuple(pairs))


def split_pairs(points, realness: bool = True) -> PolePairSet:
    """Group ``2r`` points into ``r`` pole pairs.

    Complex points are paired with their conjugates, the member with positive
    imaginary part becoming ``lambda_plus``. Real points are sorted by
    magnitude and the i-th smallest is paired with the i-th largest. Without
    ``realness`` complex points are paired greedily by the distance
    ``|a - conj(b)|``. Output pairs are sorted by natural frequency.
    """
    pts = _snap(np.asarray(points, dtype=complex).reshape(-1))
    if pts.size % 2:
        raise PairingError("need an even number of points")
    reals = [z for z in pts.tolist() if z.imag == 0]
    upper = [z for z in pts.tolist() if z.imag > 0]
    lower = [z for z in pts.tolist() if z.imag < 0]
    raw: list[tuple[complex, complex]] = []
    if realness:
        if len(reals) % 2:
            raise PairingError("odd number of real points")
        raw += _match_conjugates(pts)
        raw += _zip_reals(reals)
    else:
        pool = upper + lower
        if len(reals) % 2:
            extra = max(reals, key=lambda z: (abs(z), z.real))
            reals.remove(extra)
            pool.append(extra)
        raw += _zip_reals(reals)
        raw += _greedy_pairs(pool)
    return _canonical([pair_from_lambdas(a, b) for a, b in raw])
