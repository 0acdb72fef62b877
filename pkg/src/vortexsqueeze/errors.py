"""Exception and warning classes shared across the package."""


class SimulationError(Exception):
    """Base class for all domain errors raised by this package."""


class GridTooSmall(SimulationError):
    """The sampling window is too small for the requested beam."""


class StepTooCoarse(SimulationError):
    """A nonlinear phase screen exceeds the per-step phase budget."""


class GridMismatch(SimulationError):
    """Two fields do not share the same grid geometry."""


class EmptyEvolution(SimulationError):
    """A recorded cell evolution contains no screens."""


class ModelMismatch(SimulationError):
    """Two fit results use different profile models."""


class NotConverged(SimulationError):
    """A fit result required downstream did not converge."""


class DegenerateImage(SimulationError):
    """An image has too little signal to fit."""


class UnsupportedFormat(SimulationError):
    """File format not recognized."""


class CorruptFile(SimulationError):
    """File recognized but unreadable."""


class ConfigInvalid(SimulationError):
    """Run configuration failed validation."""


class CalibrationDiverged(SimulationError):
    """Noise-model calibration could not meet its target."""


class AliasingRisk(UserWarning):
    """Noticeable spectral power near the edge of the frequency window."""
