from .env import (
    SurgicalEnv,
    check_success,
    clamp_action,
    get_proprio,
    grasp_features,
    proprio_to_arm_fields,
    reset_task,
    step,
)
from .needles import NEEDLE_REGISTRY, generate_needle, get_needle_spec, needle_tip
from .tasks import (
    DEFAULT_TASKS,
    get_task_spec,
    load_task_spec,
    save_task_spec,
    task_spec_from_dict,
    task_spec_to_dict,
)
from .types import (
    ACTION_DIMS_PER_ARM,
    EPS_GRASP,
    JAW_CLOSE_CMD,
    JAW_MAX,
    JAW_OPEN_CMD,
    MAX_STEP_ROTATION,
    MAX_STEP_TRANSLATION,
    PROPRIO_DIMS_PER_ARM,
    TASK_NAMES,
    Action,
    ArmState,
    NeedleSpec,
    SceneState,
    TaskSpec,
)

__all__ = [
    "SurgicalEnv",
    "check_success",
    "clamp_action",
    "get_proprio",
    "grasp_features",
    "proprio_to_arm_fields",
    "reset_task",
    "step",
    "NEEDLE_REGISTRY",
    "generate_needle",
    "get_needle_spec",
    "needle_tip",
    "DEFAULT_TASKS",
    "get_task_spec",
    "load_task_spec",
    "save_task_spec",
    "task_spec_from_dict",
    "task_spec_to_dict",
    "ACTION_DIMS_PER_ARM",
    "EPS_GRASP",
    "JAW_CLOSE_CMD",
    "JAW_MAX",
    "JAW_OPEN_CMD",
    "MAX_STEP_ROTATION",
    "MAX_STEP_TRANSLATION",
    "PROPRIO_DIMS_PER_ARM",
    "TASK_NAMES",
    "Action",
    "ArmState",
    "NeedleSpec",
    "SceneState",
    "TaskSpec",
]
