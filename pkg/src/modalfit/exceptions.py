"""Exception types raised by modalfit."""


class ModalFitError(Exception):
    """Base class for all modalfit errors."""


class DegeneratePairError(ModalFitError, ValueError):
    """A pole pair with zero product, i.e. a zero natural frequency."""


class SupportPointError(ModalFitError, ValueError):
    """A sampling or evaluation point coincides with an expansion point."""


class PoleEvaluationError(ModalFitError, ValueError):
    """A rational function was evaluated at (or numerically on) one of its poles."""


class NotRepresentableError(ModalFitError, ValueError):
    """A second-order mode cannot be split into two simple first-order poles."""


class RealnessError(ModalFitError, ValueError):
    """A quantity that must be real has a significant imaginary part."""


class PairingError(ModalFitError, ValueError):
    """Expansion points could not be split into pole pairs."""


class SingularMassError(ModalFitError, ValueError):
    """A mode with zero natural frequency makes the reduced mass matrix singular."""


class ResonanceError(ModalFitError, ValueError):
    """The shifted system matrix is singular at a sampling point."""

    def __init__(self, point: complex):
        super().__init__(f"system matrix is singular at s = {point!r}")
        self.point = point


class StructureError(ModalFitError, ValueError):
    """The damping matrix is not diagonalized by the undamped modes."""
