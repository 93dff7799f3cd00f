"""Shared exception types."""


class ResourceLimitError(RuntimeError):
    """Raised when a sampler or suite would exceed its resource cap.

    Carries enough context (requested parameters, predicted or actual
    demand, the cap that was hit) to make the refusal auditable.
    """
