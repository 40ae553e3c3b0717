"""surgibench: desk-scale surgical manipulation benchmark for imitation learning."""

__version__ = "0.1.0"

from .sim.tasks import get_task_spec
from .sim.env import SurgicalEnv
from .sim.types import Action, SceneState, TaskSpec

__all__ = [
    "Action",
    "SceneState",
    "SurgicalEnv",
    "TaskSpec",
    "get_task_spec",
    "__version__",
]
