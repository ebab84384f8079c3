"""Shared exception types."""


class CoachAIError(Exception):
    """Base class for all platform errors."""


class DomainError(CoachAIError):
    """Input violates a value-range or structural precondition."""


class NotFoundError(CoachAIError):
    """Referenced entity does not exist."""


class ConflictError(CoachAIError):
    """Operation would violate a uniqueness or version invariant."""


class ValidationError(DomainError):
    """Structured definition or constructor invariant failed validation."""
