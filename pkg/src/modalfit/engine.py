"""Fixed-point iterations for unstructured and structured vector fitting.

Each iteration solves a weighted linear least-squares problem for the
barycentric weights, moves the expansion points to the zeros of the fitted
denominator and reweights the rows by ``1/|d(xi)|``. The fit has converged once
the denominator weights vanish, so the denominator is one and the numerator is
the model.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import lsq, poles, transfer
from .exceptions import RealnessError
from .types import (
    FirstOrderModel,
    FitReport,
    FrequencySampleSet,
    FullyStructuredBarycentric,
    InitStrategy,
    IterationConfig,
    IterationRecord,
    PartialStructuredBarycentric,
    PolePairSet,
    PoleSet,
    SecondOrderModel,
    Termination,
    UnstructuredBarycentric,
)

logger = logging.getLogger(__name__)

INIT_DAMPING = 1e-2
REALNESS_TOL = 1e-8


def _omega_grid(strategy: InitStrategy, count: int, f_lo: float, f_hi: float) -> np.ndarray:
    lo = max(f_lo, f_hi * 1e-4)
    log = strategy is InitStrategy.LOGSPACE_IMAG
    if count == 1:
        return np.array([np.sqrt(lo * f_hi) if log else 0.5 * (lo + f_hi)])
    return np.geomspace(lo, f_hi, count) if log else np.linspace(lo, f_hi, count)


def init_poles(strategy, r: int, freq_range, user: PolePairSet | None = None) -> PolePairSet:
    """Initial pole pairs ``(-alpha + i) w`` and their conjugates with ``w`` spread over the range."""
    strategy = InitStrategy(strategy)
    if r < 1:
        raise ValueError("order must be at least one")
    if strategy is InitStrategy.VF_WARM:
        raise ValueError("vf_warm needs data; use warm_start_pairs")
    if strategy is InitStrategy.USER_SUPPLIED:
        if user is None or len(user) != r:
            raise ValueError(f"user-supplied initialization needs exactly {r} pole pairs")
        return user
    f_lo, f_hi = map(float, freq_range)
    if not 0 <= f_lo < f_hi:
        raise ValueError("frequency range must satisfy 0 <= f_lo < f_hi")
    w = _omega_grid(strategy, r, f_lo, f_hi)
    lp = (-INIT_DAMPING + 1j) * w
    return PolePairSet.from_lambdas(lp, lp.conj())


def init_pole_set(strategy, r: int, freq_range, user: PoleSet | None = None) -> PoleSet:
    """Initial poles for unstructured fitting: ``r // 2`` conjugate pairs plus one real pole if ``r`` is odd."""
    strategy = InitStrategy(strategy)
    if r < 1:
        raise ValueError("order must be at least one")
    if strategy is InitStrategy.VF_WARM:
        strategy = InitStrategy.LOGSPACE_IMAG
    if strategy is InitStrategy.USER_SUPPLIED:
        if user is None or len(user) != r:
            raise ValueError(f"user-supplied initialization needs exactly {r} poles")
        return user
    f_lo, f_hi = map(float, freq_range)
    if not 0 <= f_lo < f_hi:
        raise ValueError("frequency range must satisfy 0 <= f_lo < f_hi")
    pts = []
    if r // 2:
        pts = list(init_poles(strategy, r // 2, freq_range).points)
    if r % 2:
        pts.append(-complex(_omega_grid(strategy, 1, f_lo, f_hi)[0]))
    return PoleSet(np.array(pts))


def frequency_range(samples: FrequencySampleSet) -> tuple[float, float]:
    """Smallest and largest ``|Im xi|`` of the data."""
    w = np.abs(samples.points.imag)
    return float(w.min()), float(w.max())


def realize_second_order(pairs: PolePairSet, residues) -> SecondOrderModel:
    """Diagonal realization ``M = diag(1/w)``, ``E = diag(2 psi)``, ``K = diag(w)``, ``b = residues``."""
    res = np.asarray(residues, dtype=complex).reshape(-1)
    omega, psi = pairs.omega, pairs.psi
    for name, vals in (("omega", omega), ("psi", psi), ("residues", res)):
        if np.any(np.abs(vals.imag) > REALNESS_TOL * np.maximum(1.0, np.abs(vals))):
            raise RealnessError(f"{name} is not real: {vals}")
    return SecondOrderModel(omega.real, psi.real, res.real)


@dataclass(frozen=True)
class _Method:
    min_rows: Callable[[int], int]
    assemble: Callable
    real_basis: Callable
    build: Callable
    num: Callable
    den: Callable
    den_weights: Callable
    model: Callable
    relocate: Callable
    points: Callable


def _relocate_pairs(zeros: np.ndarray, config: IterationConfig) -> PolePairSet:
    if config.enforce_stability:
        zeros = poles.stabilize(zeros)
    return poles.split_pairs(zeros, realness=config.enforce_realness)


def _relocate_vf(form: UnstructuredBarycentric, config: IterationConfig) -> PoleSet:
    zeros = poles.zeros_unstructured(form.poles, form.den_weights)
    if config.enforce_stability:
        zeros = poles.stabilize(zeros)
    if config.enforce_realness:
        zeros = poles.conjugate_symmetrize(zeros)
    return PoleSet(zeros)


def _build_vf(nodes: PoleSet, x: np.ndarray) -> UnstructuredBarycentric:
    r = len(nodes)
    return UnstructuredBarycentric(nodes, x[:r], x[r:])


def _build_so1(nodes: PolePairSet, x: np.ndarray) -> PartialStructuredBarycentric:
    r = len(nodes)
    return PartialStructuredBarycentric(nodes, x[:r], x[r::2], x[r + 1::2])


def _build_so2(nodes: PolePairSet, x: np.ndarray) -> FullyStructuredBarycentric:
    r = len(nodes)
    return FullyStructuredBarycentric(nodes, x[:r], x[r:])


VF = _Method(
    min_rows=lambda r: 2 * r,
    assemble=lsq.assemble_unstructured,
    real_basis=lsq.real_basis_unstructured,
    build=_build_vf,
    num=transfer.num_unstructured,
    den=transfer.den_unstructured,
    den_weights=lambda f: f.den_weights,
    model=lambda f: FirstOrderModel(f.poles.lambdas, f.num_weights),
    relocate=_relocate_vf,
    points=lambda nodes: nodes.lambdas,
)

SOVF1 = _Method(
    min_rows=lambda r: 3 * r,
    assemble=lsq.assemble_so1,
    real_basis=lsq.real_basis_so1,
    build=_build_so1,
    num=transfer.num_structured,
    den=transfer.den_partial,
    den_weights=lambda f: f.den_weights,
    model=lambda f: realize_second_order(f.pairs, f.num_residues),
    relocate=lambda f, cfg: _relocate_pairs(poles.zeros_so1(f), cfg),
    points=lambda nodes: nodes.points,
)

SOVF2 = _Method(
    min_rows=lambda r: 2 * r,
    assemble=lsq.assemble_so2,
    real_basis=lsq.real_basis_so2,
    build=_build_so2,
    num=transfer.num_structured,
    den=transfer.den_full,
    den_weights=lambda f: f.den_residues,
    model=lambda f: realize_second_order(f.pairs, f.num_residues),
    relocate=lambda f, cfg: _relocate_pairs(poles.zeros_so2(f), cfg),
    points=lambda nodes: nodes.points,
)

METHODS = {"vf": VF, "sovf1": SOVF1, "sovf2": SOVF2}


def max_pole_move(old: np.ndarray, new: np.ndarray) -> float:
    """Largest relative displacement after optimally matching old and new points."""
    cost = np.abs(old[:, None] - new[None, :])
    rows, cols = linear_sum_assignment(cost)
    scale = np.maximum(np.abs(old[rows]), np.finfo(float).tiny)
    return float(np.max(cost[rows, cols] / scale))


def _numerator_error(method: _Method, form, samples: FrequencySampleSet) -> float:
    return float(np.max(transfer.pointwise_relative_error(
        lambda s: method.num(form, s), samples, absolute_fallback=True)))


def _iterate(method: _Method, samples: FrequencySampleSet, init, config: IterationConfig):
    r = config.order
    if len(init) != r:
        raise ValueError(f"initialization has {len(init)} entries, expected {r}")
    if method.min_rows(r) > len(samples):
        raise ValueError(
            f"order {r} needs at least {method.min_rows(r)} samples, got {len(samples)}"
        )

    def solve(nodes, delta):
        A = method.assemble(samples, nodes)
        basis = method.real_basis(nodes) if config.enforce_realness else None
        sol = lsq.solve_weighted_ls(lsq.WeightedLS(A, samples.values, delta),
                                    config.enforce_realness, basis)
        return method.build(nodes, sol.x), sol

    nodes = init
    delta = np.ones(len(samples))
    records: list[IterationRecord] = []
    rank_warnings = clipped = 0
    termination = Termination.MAX_ITERS
    form = None
    for k in range(1, config.max_iters + 1):
        form, sol = solve(nodes, delta)
        rank_warnings += sol.rank_deficient
        wmax = float(np.max(np.abs(method.den_weights(form))))
        err = _numerator_error(method, form, samples)
        record = dict(iteration=k, poles=tuple(method.points(nodes).tolist()),
                      max_den_weight=wmax, ls_residual=sol.residual, max_rel_err=err)
        if wmax <= config.weight_tol:
            records.append(IterationRecord(max_pole_move=0.0, **record))
            termination = Termination.WEIGHTS
            break
        new_nodes = method.relocate(form, config)
        move = max_pole_move(method.points(nodes), method.points(new_nodes))
        records.append(IterationRecord(max_pole_move=move, **record))
        logger.debug("iteration %d: max weight %.3e, max rel err %.3e, move %.3e", k, wmax, err, move)
        delta, n_clip = lsq.update_weights(lambda p, f=form: method.den(f, p), samples)
        clipped += n_clip
        if move <= config.pole_move_tol:
            termination = Termination.POLES
            break
        nodes = new_nodes
    else:
        form, sol = solve(nodes, delta)
        rank_warnings += sol.rank_deficient

    weights_converged = bool(np.max(np.abs(method.den_weights(form))) <= config.weight_tol)
    report = FitReport(
        records=tuple(records),
        converged=termination is not Termination.MAX_ITERS,
        weights_converged=weights_converged,
        termination=termination,
        rank_warnings=int(rank_warnings),
        clipped_weights=clipped,
        absolute_error_fallback=bool(np.any(np.abs(samples.values) < transfer.DENOMINATOR_FLOOR)),
        final_weights=delta,
    )
    return method.model(form), report, form


def fit_vf(samples: FrequencySampleSet, init: PoleSet, config: IterationConfig):
    """Classical vector fitting; returns ``(FirstOrderModel, FitReport)``."""
    model, report, _ = _iterate(VF, samples, init, config)
    return model, report


def fit_sovf1(samples: FrequencySampleSet, init: PolePairSet, config: IterationConfig):
    """Structured numerator, first-order denominator; returns ``(SecondOrderModel, FitReport)``.

    The model is realized from the numerator even if the denominator weights
    did not converge; ``report.weights_converged`` tells which case applies.
    """
    model, report, _ = _iterate(SOVF1, samples, init, config)
    return model, report


def fit_sovf2(samples: FrequencySampleSet, init: PolePairSet, config: IterationConfig):
    """Structured numerator and denominator; returns ``(SecondOrderModel, FitReport)``."""
    model, report, _ = _iterate(SOVF2, samples, init, config)
    return model, report


def warm_start_pairs(samples: FrequencySampleSet, config: IterationConfig) -> PolePairSet:
    """Initial pole pairs taken from an unstructured fit of order ``2r``.

    The structured iterations contract slowly (SOVF1) or cannot change the
    total damping of their starting points at all (SOVF2), so a good start
    matters far more than for classical vector fitting.
    """
    order = 2 * config.order
    vf_config = replace(config, order=order, init_strategy=InitStrategy.LOGSPACE_IMAG)
    start = init_pole_set(InitStrategy.LOGSPACE_IMAG, order, frequency_range(samples))
    model, _ = fit_vf(samples, start, vf_config)
    points = poles.stabilize(model.a) if config.enforce_stability else model.a
    return poles.split_pairs(points, realness=config.enforce_realness)


def fit(method: str, samples: FrequencySampleSet, config: IterationConfig, init=None):
    """Dispatch on ``method`` in ``{"vf", "sovf1", "sovf2"}``.

    Initial points come from ``config.init_strategy``: spread over the
    frequency range of the data, taken from ``init`` (user supplied), or for
    the structured methods from a preliminary unstructured fit (``vf_warm``;
    plain vector fitting treats it like ``logspace_imag``).
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    rng = frequency_range(samples)
    strategy = config.init_strategy
    if method == "vf":
        if strategy is InitStrategy.VF_WARM:
            strategy = InitStrategy.LOGSPACE_IMAG
        start = init_pole_set(strategy, config.order, rng, init)
        return fit_vf(samples, start, config)
    if strategy is InitStrategy.VF_WARM:
        start = warm_start_pairs(samples, config)
    else:
        start = init_poles(strategy, config.order, rng, init)
    return (fit_sovf1 if method == "sovf1" else fit_sovf2)(samples, start, config)
