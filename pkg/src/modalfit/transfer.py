"""Evaluation of barycentric forms, pole-residue models and pointwise errors.

All evaluators accept a scalar or an array of points and return the same
shape. Barycentric quotients are evaluated directly, never through expanded
polynomials.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .exceptions import NotRepresentableError, PoleEvaluationError, SupportPointError
from .types import (
    FirstOrderModel,
    FrequencySampleSet,
    FullyStructuredBarycentric,
    PartialStructuredBarycentric,
    SecondOrderModel,
    UnstructuredBarycentric,
)

DENOMINATOR_FLOOR = 1e-300


def _points(s) -> tuple[np.ndarray, bool]:
    arr = np.asarray(s, dtype=complex)
    return arr.reshape(-1), arr.ndim == 0


def _shape_out(values: np.ndarray, scalar: bool):
    return complex(values[0]) if scalar else values


def _cauchy(s: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    diff = s[:, None] - nodes[None, :]
    if np.any(diff == 0):
        i, j = np.argwhere(diff == 0)[0]
        raise SupportPointError(f"evaluation point {s[i]} coincides with expansion point {nodes[j]}")
    return 1.0 / diff


def _pair_kernel(s: np.ndarray, lambda_plus: np.ndarray, lambda_minus: np.ndarray,
                 omega: np.ndarray) -> np.ndarray:
    # omega_j / ((s - lambda_j^+)(s - lambda_j^-))
    return omega[None, :] * _cauchy(s, lambda_plus) * _cauchy(s, lambda_minus)


def _quotient(num: np.ndarray, den: np.ndarray, s: np.ndarray) -> np.ndarray:
    tiny = np.abs(den) <= DENOMINATOR_FLOOR
    if np.any(tiny):
        raise PoleEvaluationError(f"approximant has a pole at s = {s[np.argmax(tiny)]}")
    return num / den


def eval_unstructured(form: UnstructuredBarycentric, s):
    pts, scalar = _points(s)
    C = _cauchy(pts, form.poles.lambdas)
    return _shape_out(_quotient(C @ form.num_weights, 1.0 + C @ form.den_weights, pts), scalar)


def num_unstructured(form: UnstructuredBarycentric, s):
    pts, scalar = _points(s)
    return _shape_out(_cauchy(pts, form.poles.lambdas) @ form.num_weights, scalar)


def num_structured(form, s):
    """Structured numerator shared by the partially and fully structured forms."""
    pts, scalar = _points(s)
    pairs = form.pairs
    kernel = _pair_kernel(pts, pairs.lambda_plus, pairs.lambda_minus, pairs.omega)
    return _shape_out(kernel @ form.num_residues, scalar)


def den_unstructured(form: UnstructuredBarycentric, s):
    pts, scalar = _points(s)
    return _shape_out(1.0 + _cauchy(pts, form.poles.lambdas) @ form.den_weights, scalar)


def eval_partial(form: PartialStructuredBarycentric, s):
    pts, scalar = _points(s)
    pairs = form.pairs
    num = _pair_kernel(pts, pairs.lambda_plus, pairs.lambda_minus, pairs.omega) @ form.num_residues
    den = den_partial(form, pts)
    return _shape_out(_quotient(num, den, pts), scalar)


def den_partial(form: PartialStructuredBarycentric, s):
    pts, scalar = _points(s)
    den = 1.0 + _cauchy(pts, form.pairs.points) @ form.den_weights
    return _shape_out(den, scalar)


def eval_full(form: FullyStructuredBarycentric, s):
    pts, scalar = _points(s)
    pairs = form.pairs
    kernel = _pair_kernel(pts, pairs.lambda_plus, pairs.lambda_minus, pairs.omega)
    num = kernel @ form.num_residues
    den = 1.0 + kernel @ form.den_residues
    return _shape_out(_quotient(num, den, pts), scalar)


def den_full(form: FullyStructuredBarycentric, s):
    pts, scalar = _points(s)
    pairs = form.pairs
    kernel = _pair_kernel(pts, pairs.lambda_plus, pairs.lambda_minus, pairs.omega)
    return _shape_out(1.0 + kernel @ form.den_residues, scalar)


def eval_second_order(model: SecondOrderModel, s):
    """``sum_j omega_j b_j / (s^2 + 2 psi_j omega_j s + omega_j^2)``."""
    pts, scalar = _points(s)
    w, z = model.omega, model.psi
    quad = pts[:, None] ** 2 + 2.0 * (z * w)[None, :] * pts[:, None] + (w * w)[None, :]
    if np.any(quad == 0):
        i = np.argwhere(quad == 0)[0][0]
        raise PoleEvaluationError(f"s = {pts[i]} is a pole of the model")
    return _shape_out((w * model.b / quad) @ model.c, scalar)


def eval_first_order(model: FirstOrderModel, s):
    pts, scalar = _points(s)
    diff = pts[:, None] - model.a[None, :]
    if np.any(diff == 0):
        i = np.argwhere(diff == 0)[0][0]
        raise PoleEvaluationError(f"s = {pts[i]} is a pole of the model")
    return _shape_out((model.b / diff) @ model.c, scalar)


def expand_to_first_order(model: SecondOrderModel) -> FirstOrderModel:
    """Split every mode into two simple poles with residues ``+-omega b / (l+ - l-)``."""
    poles, residues = [], []
    for pair, b in zip(model.pairs(), model.b):
        gap = pair.lambda_plus - pair.lambda_minus
        if gap == 0:
            raise NotRepresentableError(
                f"critically damped mode omega={pair.omega.real} needs a double pole"
            )
        res = pair.omega * b / gap
        poles += [pair.lambda_plus, pair.lambda_minus]
        residues += [res, -res]
    return FirstOrderModel(np.array(poles), np.array(residues))


def pointwise_relative_error(
    evaluate: Callable, samples: FrequencySampleSet, absolute_fallback: bool = False
) -> np.ndarray:
    """``|H_hat(xi_i) - h_i| / |h_i|`` for every sample.

    Zero measurements raise ``ZeroDivisionError`` unless ``absolute_fallback``
    is set, in which case the absolute error is used for those points.
    """
    approx = np.asarray(evaluate(samples.points), dtype=complex).reshape(-1)
    scale = np.abs(samples.values)
    tiny = scale < DENOMINATOR_FLOOR
    if np.any(tiny):
        if not absolute_fallback:
            raise ZeroDivisionError("relative error undefined for zero measurements")
        scale = np.where(tiny, 1.0, scale)
    return np.abs(approx - samples.values) / scale


def eval_model(model, s):
    """Evaluate a second-order or first-order pole-residue model."""
    if isinstance(model, SecondOrderModel):
        return eval_second_order(model, s)
    if isinstance(model, FirstOrderModel):
        return eval_first_order(model, s)
    raise TypeError(f"cannot evaluate {type(model).__name__}")
