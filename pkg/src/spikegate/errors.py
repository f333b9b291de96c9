"""Exception types shared across the toolkit."""


class SpikeGateError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(SpikeGateError):
    """Tensor shape does not match a layer contract."""

    def __init__(self, layer_id, expected, actual, what="input"):
        self.layer_id = layer_id
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        super().__init__(
            f"layer {layer_id!r}: {what} shape {self.actual} does not match "
            f"expected {self.expected}"
        )


class NonFiniteError(SpikeGateError):
    """NaN or Inf encountered where finite values are required."""


class SpecError(SpikeGateError):
    """Invalid network specification."""


class ConversionConstraintError(SpikeGateError):
    """ANN violates the structural constraints of rate-based conversion."""

    def __init__(self, violations):
        self.violations = list(violations)
        rules = ", ".join(f"{lid}:{rule}" for lid, rule in self.violations)
        super().__init__(f"conversion constraints violated: {rules}")


class FormatError(SpikeGateError):
    """Malformed binary container (bad magic, truncation, field mismatch)."""


class TrainingDivergedError(SpikeGateError):
    """Loss became non-finite during training."""

    def __init__(self, epoch, message="non-finite loss"):
        self.epoch = epoch
        super().__init__(f"{message} at epoch {epoch}")


class UndefinedMetricError(SpikeGateError):
    """Metric has no defined value (empty split, zero denominator)."""


class ConfigError(SpikeGateError):
    """Invalid experiment configuration."""
