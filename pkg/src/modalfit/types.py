"""Shared domain types.

Every container here is a frozen dataclass whose array fields are copied into
read-only numpy arrays, so instances can be shared freely once built.
"""

from __future__ import annotations

import cmath
import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import DegeneratePairError

__all__ = [
    "FrequencySampleSet",
    "PoleSet",
    "PolePair",
    "PolePairSet",
    "UnstructuredBarycentric",
    "PartialStructuredBarycentric",
    "FullyStructuredBarycentric",
    "SecondOrderModel",
    "FirstOrderModel",
    "InitStrategy",
    "Termination",
    "IterationConfig",
    "IterationRecord",
    "FitReport",
    "pair_from_lambdas",
    "lambdas_from_modal",
]


def _readonly(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype).reshape(-1)
    arr.setflags(write=False)
    return arr


def _set_array(obj, name: str, values, dtype) -> None:
    object.__setattr__(obj, name, _readonly(values, dtype))


def _all_distinct(points: np.ndarray) -> bool:
    return len(set(points.tolist())) == len(points)


@dataclass(frozen=True)
class FrequencySampleSet:
    """Sampling points ``xi`` and measured transfer function values ``h = H(xi)``.

    ``conjugate_closed`` is detected from the data when not given. Closure is
    checked exactly: for every point its conjugate must be present with the
    conjugated value.
    """

    points: np.ndarray
    values: np.ndarray
    conjugate_closed: bool | None = None

    def __post_init__(self):
        _set_array(self, "points", self.points, complex)
        _set_array(self, "values", self.values, complex)
        if self.points.size < 1:
            raise ValueError("need at least one sample")
        if self.points.shape != self.values.shape:
            raise ValueError("points and values must have the same length")
        if not (np.all(np.isfinite(self.points)) and np.all(np.isfinite(self.values))):
            raise ValueError("samples must be finite")
        if not _all_distinct(self.points):
            raise ValueError("sampling points must be mutually distinct")
        closed = self._is_closed()
        if self.conjugate_closed is None:
            object.__setattr__(self, "conjugate_closed", closed)
        elif self.conjugate_closed and not closed:
            raise ValueError("samples are flagged conjugate closed but are not")

    def _is_closed(self) -> bool:
        lookup = dict(zip(self.points.tolist(), self.values.tolist()))
        for xi, h in lookup.items():
            partner = lookup.get(xi.conjugate())
            if partner is None or partner != h.conjugate():
                return False
        return True

    def __len__(self) -> int:
        return self.points.size

    def close_under_conjugation(self) -> "FrequencySampleSet":
        """Append conjugate points and values; real points are not duplicated."""
        lookup = set(self.points.tolist())
        extra = [
            (xi.conjugate(), h.conjugate())
            for xi, h in zip(self.points.tolist(), self.values.tolist())
            if xi.conjugate() not in lookup
        ]
        if not extra:
            return FrequencySampleSet(self.points, self.values)
        xs, hs = zip(*extra)
        return FrequencySampleSet(
            np.concatenate([self.points, xs]), np.concatenate([self.values, hs])
        )


@dataclass(frozen=True)
class PoleSet:
    """Mutually distinct expansion points of a barycentric form."""

    lambdas: np.ndarray

    def __post_init__(self):
        _set_array(self, "lambdas", self.lambdas, complex)
        if self.lambdas.size < 1:
            raise ValueError("pole set must not be empty")
        if not _all_distinct(self.lambdas):
            raise ValueError("expansion points must be mutually distinct")

    def __len__(self) -> int:
        return self.lambdas.size


def _principal_omega(product: complex) -> complex:
    omega = cmath.sqrt(product)
    if omega.real == 0.0 and omega.imag < 0.0:
        omega = -omega
    return omega


def pair_from_lambdas(lambda_plus: complex, lambda_minus: complex) -> "PolePair":
    """Build a pole pair, deriving its natural frequency and damping ratio.

    ``omega = sqrt(lambda_plus * lambda_minus)`` on the branch with
    ``Re(omega) >= 0`` (``Im(omega) >= 0`` when purely imaginary) and
    ``psi = -(lambda_plus + lambda_minus) / (2 omega)``.
    """
    lambda_plus = complex(lambda_plus)
    lambda_minus = complex(lambda_minus)
    product = lambda_plus * lambda_minus
    if product == 0:
        raise DegeneratePairError(
            f"pole pair ({lambda_plus}, {lambda_minus}) has zero natural frequency"
        )
    omega = _principal_omega(product)
    psi = -(lambda_plus + lambda_minus) / (2.0 * omega)
    return PolePair(lambda_plus, lambda_minus, omega, psi)


def lambdas_from_modal(omega: complex, psi: complex) -> tuple[complex, complex]:
    """Return ``(-omega psi + omega sqrt(psi^2 - 1), -omega psi - omega sqrt(psi^2 - 1))``."""
    omega = complex(omega)
    psi = complex(psi)
    if omega == 0:
        raise DegeneratePairError("natural frequency must be nonzero")
    root = omega * cmath.sqrt(psi * psi - 1.0)
    return -omega * psi + root, -omega * psi - root


@dataclass(frozen=True)
class PolePair:
    lambda_plus: complex
    lambda_minus: complex
    omega: complex
    psi: complex

    @classmethod
    def from_lambdas(cls, lambda_plus: complex, lambda_minus: complex) -> "PolePair":
        return pair_from_lambdas(lambda_plus, lambda_minus)

    @classmethod
    def from_modal(cls, omega: complex, psi: complex) -> "PolePair":
        lp, lm = lambdas_from_modal(omega, psi)
        return cls(lp, lm, complex(omega), complex(psi))

    @property
    def is_conjugate(self) -> bool:
        return self.lambda_minus == self.lambda_plus.conjugate() and self.lambda_plus.imag != 0


@dataclass(frozen=True)
class PolePairSet:
    """Expansion points grouped into ``r`` pairs.

    Points must be distinct across pairs; a pair may repeat its own point
    (critical damping).
    """

    pairs: tuple[PolePair, ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        if not self.pairs:
            raise ValueError("pole pair set must not be empty")
        seen: set[complex] = set()
        for pair in self.pairs:
            members = {pair.lambda_plus, pair.lambda_minus}
            if members & seen:
                raise ValueError("expansion points must be distinct across pairs")
            seen |= members

    @classmethod
    def from_lambdas(cls, lambda_plus: Sequence[complex], lambda_minus: Sequence[complex]) -> "PolePairSet":
        if len(lambda_plus) != len(lambda_minus):
            raise ValueError("need as many lambda_plus as lambda_minus")
        return cls(tuple(pair_from_lambdas(a, b) for a, b in zip(lambda_plus, lambda_minus)))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def lambda_plus(self) -> np.ndarray:
        return np.array([p.lambda_plus for p in self.pairs], dtype=complex)

    @property
    def lambda_minus(self) -> np.ndarray:
        return np.array([p.lambda_minus for p in self.pairs], dtype=complex)

    @property
    def omega(self) -> np.ndarray:
        return np.array([p.omega for p in self.pairs], dtype=complex)

    @property
    def psi(self) -> np.ndarray:
        return np.array([p.psi for p in self.pairs], dtype=complex)

    @property
    def points(self) -> np.ndarray:
        """All ``2r`` points interleaved as ``[+1, -1, +2, -2, ...]``."""
        out = np.empty(2 * len(self.pairs), dtype=complex)
        out[0::2] = self.lambda_plus
        out[1::2] = self.lambda_minus
        return out


@dataclass(frozen=True)
class UnstructuredBarycentric:
    poles: PoleSet
    num_weights: np.ndarray
    den_weights: np.ndarray

    def __post_init__(self):
        _set_array(self, "num_weights", self.num_weights, complex)
        _set_array(self, "den_weights", self.den_weights, complex)
        r = len(self.poles)
        if self.num_weights.size != r or self.den_weights.size != r:
            raise ValueError("weight vectors must match the number of expansion points")


@dataclass(frozen=True)
class PartialStructuredBarycentric:
    """Structured numerator over pole pairs, first-order denominator over all points."""

    pairs: PolePairSet
    num_residues: np.ndarray
    den_weights_plus: np.ndarray
    den_weights_minus: np.ndarray

    def __post_init__(self):
        for name in ("num_residues", "den_weights_plus", "den_weights_minus"):
            _set_array(self, name, getattr(self, name), complex)
            if getattr(self, name).size != len(self.pairs):
                raise ValueError(f"{name} must have one entry per pole pair")

    @property
    def den_weights(self) -> np.ndarray:
        """Denominator weights aligned with ``pairs.points``."""
        out = np.empty(2 * len(self.pairs), dtype=complex)
        out[0::2] = self.den_weights_plus
        out[1::2] = self.den_weights_minus
        return out


@dataclass(frozen=True)
class FullyStructuredBarycentric:
    """Structured numerator and denominator over the same pole pairs."""

    pairs: PolePairSet
    num_residues: np.ndarray
    den_residues: np.ndarray

    def __post_init__(self):
        for name in ("num_residues", "den_residues"):
            _set_array(self, name, getattr(self, name), complex)
            if getattr(self, name).size != len(self.pairs):
                raise ValueError(f"{name} must have one entry per pole pair")


@dataclass(frozen=True)
class SecondOrderModel:
    """Diagonal modally damped realization.

    ``M = diag(1/omega)``, ``E = diag(2 psi)``, ``K = diag(omega)``, input
    vector ``b`` and output vector ``c`` (all ones), so that
    ``H(s) = sum_j omega_j b_j / (s^2 + 2 psi_j omega_j s + omega_j^2)``.
    """

    omega: np.ndarray
    psi: np.ndarray
    b: np.ndarray
    c: np.ndarray | None = None

    def __post_init__(self):
        _set_array(self, "omega", self.omega, float)
        _set_array(self, "psi", self.psi, float)
        _set_array(self, "b", self.b, float)
        r = self.omega.size
        if self.c is None:
            object.__setattr__(self, "c", np.ones(r))
        _set_array(self, "c", self.c, float)
        if r < 1:
            raise ValueError("model order must be positive")
        if not (self.psi.size == self.b.size == self.c.size == r):
            raise ValueError("omega, psi, b and c must have the same length")
        if not np.all(np.isfinite(np.concatenate([self.omega, self.psi, self.b]))):
            raise ValueError("model parameters must be finite")
        if np.any(self.omega <= 0):
            raise ValueError("natural frequencies must be strictly positive")
        if np.any(self.psi < 0):
            raise ValueError("damping ratios must be nonnegative")
        if np.any(self.c != 1.0):
            raise ValueError("output vector is fixed to all ones")

    @property
    def order(self) -> int:
        return self.omega.size

    @property
    def M(self) -> np.ndarray:
        return np.diag(1.0 / self.omega)

    @property
    def E(self) -> np.ndarray:
        return np.diag(2.0 * self.psi)

    @property
    def K(self) -> np.ndarray:
        return np.diag(self.omega)

    def is_modally_damped(self, rtol: float = 4 * np.finfo(float).eps) -> bool:
        """Check ``E M^-1 K == K M^-1 E``.

        Off-diagonal entries must vanish exactly; diagonal entries may differ
        only by the rounding of the two multiplication orders.
        """
        M_inv = np.diag(self.omega)
        lhs = self.E @ M_inv @ self.K
        rhs = self.K @ M_inv @ self.E
        off = ~np.eye(self.order, dtype=bool)
        if np.any(lhs[off] != 0) or np.any(rhs[off] != 0):
            return False
        return bool(np.allclose(np.diag(lhs), np.diag(rhs), rtol=rtol, atol=0.0))

    def pairs(self) -> PolePairSet:
        return PolePairSet(tuple(PolePair.from_modal(w, z) for w, z in zip(self.omega, self.psi)))


@dataclass(frozen=True)
class FirstOrderModel:
    """Pole-residue model ``H(s) = sum_j b_j / (s - a_j)``."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray | None = None

    def __post_init__(self):
        _set_array(self, "a", self.a, complex)
        _set_array(self, "b", self.b, complex)
        if self.c is None:
            object.__setattr__(self, "c", np.ones(self.a.size))
        _set_array(self, "c", self.c, complex)
        if self.a.size < 1:
            raise ValueError("model order must be positive")
        if not (self.b.size == self.c.size == self.a.size):
            raise ValueError("a, b and c must have the same length")
        if np.any(self.c != 1.0):
            raise ValueError("output vector is fixed to all ones")

    @property
    def order(self) -> int:
        return self.a.size


class InitStrategy(str, enum.Enum):
    LOGSPACE_IMAG = "logspace_imag"
    LINSPACE_IMAG = "linspace_imag"
    USER_SUPPLIED = "user_supplied"
    VF_WARM = "vf_warm"


class Termination(str, enum.Enum):
    WEIGHTS = "weights_converged"
    POLES = "poles_converged"
    MAX_ITERS = "max_iters"


@dataclass(frozen=True)
class IterationConfig:
    order: int
    max_iters: int = 100
    weight_tol: float = 1e-8
    pole_move_tol: float = 1e-10
    enforce_realness: bool = True
    enforce_stability: bool = True
    init_strategy: InitStrategy = InitStrategy.LOGSPACE_IMAG

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ValueError("order must be a positive integer")
        if int(self.max_iters) != self.max_iters or self.max_iters < 0:
            raise ValueError("max_iters must be a nonnegative integer")
        if not self.weight_tol > 0 or not self.pole_move_tol > 0:
            raise ValueError("tolerances must be positive")
        object.__setattr__(self, "init_strategy", InitStrategy(self.init_strategy))


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    poles: tuple[complex, ...]
    max_den_weight: float
    ls_residual: float
    max_rel_err: float
    max_pole_move: float


@dataclass(frozen=True)
class FitReport:
    records: tuple[IterationRecord, ...]
    converged: bool
    weights_converged: bool
    termination: Termination
    rank_warnings: int = 0
    clipped_weights: int = 0
    absolute_error_fallback: bool = False
    final_weights: np.ndarray = field(default_factory=lambda: np.ones(0))

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        _set_array(self, "final_weights", self.final_weights, float)

    @property
    def iterations(self) -> int:
        return len(self.records)
