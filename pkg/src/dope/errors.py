from typing import Optional


class DopeError(Exception):
    """Base class for all errors raised by the dope package."""


class InvalidArgumentError(DopeError, ValueError):
    """An operation was called with an argument outside its domain."""


class ConfigurationError(DopeError, ValueError):
    """A configuration is malformed, incomplete or contains unknown keys."""


class ValidationError(DopeError, ValueError):
    """An input object violates a structural invariant, e.g. a transition row not summing to 1."""


class UnsupportedDimensionError(DopeError, ValueError):
    """The requested operation is not defined for the reward dimension at hand."""


class MissingModelsError(DopeError, LookupError):
    """Evaluation was requested for steps whose fitted models are absent."""


class TrainingAbortedError(DopeError, RuntimeError):
    """Training produced a non-finite objective and was aborted.

    .. parameter:: Step (finite horizon) or iteration (discounted) of the failing fit
    .. parameter:: Seed of the run, when known
    .. parameter:: Index of the offending tuple, when known
    """

    def __init__(
        self,
        message: str,
        step: Optional[int] = None,
        seed: Optional[int] = None,
        tuple_index: Optional[int] = None,
    ):
        self.message = message
        context = [
            f"{k}={v}"
            for k, v in (("step", step), ("seed", seed), ("tuple", tuple_index))
            if v is not None
        ]
        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)
        self.step = step
        self.seed = seed
        self.tuple_index = tuple_index

    def with_context(self, **context) -> "TrainingAbortedError":
        """Copy of this error with step, seed or tuple index filled in."""
        merged = {"step": self.step, "seed": self.seed, "tuple_index": self.tuple_index}
        merged.update({k: v for k, v in context.items() if v is not None})
        return TrainingAbortedError(self.message, **merged)
