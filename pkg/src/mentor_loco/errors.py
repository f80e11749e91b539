class ConfigurationError(ValueError):
    """Invalid configuration, shapes, or ranges."""


class SimulationDiverged(RuntimeError):
    def __init__(self, step_index: int, message: str = "non-finite simulation state"):
        super().__init__(f"{message} at step {step_index}")
        self.step_index = step_index


class EpisodeFinished(RuntimeError):
    """Raised when stepping an episode that already terminated."""
