class ConfigurationError(ValueError):
    """Invalid task/camera/needle configuration."""


class EpisodeOverError(RuntimeError):
    """step() called after the task horizon was reached."""


class EmptyCloudError(ValueError):
    """Deprojection produced no points (all masked depth was zero)."""
