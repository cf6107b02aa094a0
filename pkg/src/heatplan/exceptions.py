"""Exception hierarchy shared by all heatplan modules."""


class HeatPlanError(Exception):
    """Base class for all errors raised by heatplan."""


class SchemaError(HeatPlanError, ValueError):
    """Input file lacks a required column or property."""


class ValidationError(HeatPlanError, ValueError):
    """Input data violates a domain invariant."""


class NumericalError(HeatPlanError, ArithmeticError):
    """A numerical procedure cannot produce a trustworthy result."""


class ModelError(HeatPlanError, ValueError):
    """The energy system model cannot be evaluated for the given inputs."""


class EmptySelectionError(HeatPlanError, LookupError):
    """A solution filter matched no configuration."""
