import numpy as np
import pytest

from modalfit import bench
from modalfit.types import FrequencySampleSet, SecondOrderModel, FirstOrderModel


def random_second_order(rng, r, w_lo=1.0, w_hi=10.0, psi_hi=0.2):
    omega = np.sort(rng.uniform(w_lo, w_hi, r))
    psi = rng.uniform(0.01, psi_hi, r)
    b = rng.uniform(0.5, 2.0, r) * rng.choice([-1.0, 1.0], r)
    return SecondOrderModel(omega, psi, b)


def random_first_order(rng, pairs):
    """Stable conjugate-closed pole-residue model with ``2*pairs`` poles."""
    im = np.sort(rng.uniform(1.0, 10.0, pairs))
    re = -rng.uniform(0.05, 0.5, pairs) * im
    lam = re + 1j * im
    res = rng.normal(size=pairs) + 1j * rng.normal(size=pairs)
    return FirstOrderModel(np.concatenate([lam, lam.conj()]), np.concatenate([res, res.conj()]))


def axis_samples(evaluate, f_lo, f_hi, count, conj_close=True):
    pts = bench.make_point_grid(f_lo, f_hi, count)
    samples = FrequencySampleSet(pts, np.asarray(evaluate(pts)))
    return samples.close_under_conjugation() if conj_close else samples


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# independent oracles for denominator zeros

def companion_zeros_unstructured(lam, weights):
    """Roots of ``prod(s - l) + sum_j w_j prod_{k != j}(s - l_k)`` via numpy's companion matrix."""
    import numpy.polynomial.polynomial as P

    poly = P.polyfromroots(lam)
    for j, w in enumerate(weights):
        poly = P.polyadd(poly, w * P.polyfromroots(np.delete(lam, j)))
    return np.roots(poly[::-1])


def pencil(M, E, K):
    return lambda z: z * z * M + z * E + K


def det_grid_zeros(M, E, K, radius, samples=128):
    """Roots of ``det(z^2 M + z E + K)`` from its values on a circle (discrete Fourier interpolation)."""
    theta = 2 * np.pi * np.arange(samples) / samples
    z = radius * np.exp(1j * theta)
    vals = np.array([np.linalg.det(pencil(M, E, K)(zz)) for zz in z])
    coeffs = np.fft.fft(vals) / samples / radius ** np.arange(samples)
    degree = 2 * M.shape[0]
    return np.roots(coeffs[: degree + 1][::-1])


def match_error(a, b):
    """Largest distance after optimally matching two point sets, relative to their scale."""
    from scipy.optimize import linear_sum_assignment

    cost = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max() / max(1.0, np.abs(b).max()))
