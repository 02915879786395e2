"""Error hierarchy shared by the library and the command line.

Every error carries the exit code the CLI reports for it.
"""

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_EVALUATION = 3
EXIT_CAPACITY = 4


class ArchipelagoError(RuntimeError):
    exit_code = EXIT_EVALUATION


class UsageError(ArchipelagoError):
    exit_code = EXIT_USAGE


class ConfigurationError(ArchipelagoError):
    exit_code = EXIT_USAGE


class DimensionError(ArchipelagoError, ValueError):
    """Vector or mask length does not match the perturbation space."""
    exit_code = EXIT_USAGE


class ParameterError(ArchipelagoError, ValueError):
    exit_code = EXIT_USAGE


class CapacityError(ArchipelagoError):
    """Exhaustive enumeration requested above the configured feature cap."""
    exit_code = EXIT_CAPACITY


class InertFeatureError(ArchipelagoError):
    """A pair contains a feature whose target equals its baseline."""

    def __init__(self, feature):
        super().__init__(f"Feature {feature} is inert (target equals baseline)")
        self.feature = feature


class EvaluationError(ArchipelagoError):
    """The evaluator failed; `masks` holds the contexts of the failing request."""

    def __init__(self, message, masks=()):
        super().__init__(message)
        self.masks = tuple(masks)

    @property
    def mask(self):
        return self.masks[0] if self.masks else None


class NondeterministicEvaluatorError(EvaluationError):
    pass


class BridgeError(EvaluationError):
    pass


class BridgeHandshakeError(BridgeError):
    pass


class BridgeProtocolError(BridgeError):
    pass


class BridgeTimeoutError(BridgeError):
    pass


class BridgeConfigurationError(BridgeError):
    """The host declared a feature count different from the space."""
