"""raimplan: integrity-aware urban route planning.

Predicts GPS and LTE pseudoranges along candidate routes by ray tracing over
a 3D building model, runs multiple-hypothesis RAIM at every route node, and
picks the route that minimizes distance-weighted horizontal protection level
subject to fault-ratio and alert-limit constraints.
"""

from importlib import resources

__version__ = "0.1.0"


def benchmark_scene_path() -> str:
    """Filesystem path of the packaged benchmark scene."""
    return str(resources.files("raimplan.data").joinpath("benchmark_scene.yaml"))


from .integrity import IntegrityParams, NodeIntegrityResult, evaluate_node  # noqa: E402
from .planner import (  # noqa: E402
    PathEvaluation,
    PlanOutcome,
    PlanResult,
    enumerate_candidates,
    plan,
    select_optimal,
)
from .pseudorange import (  # noqa: E402
    DiscriminatorConfig,
    SigmaModel,
    SignalConfig,
    predict_node,
)
from .world import SceneModel, load_scene, save_scene, validate_scene  # noqa: E402

__all__ = [
    "DiscriminatorConfig",
    "IntegrityParams",
    "NodeIntegrityResult",
    "PathEvaluation",
    "PlanOutcome",
    "PlanResult",
    "SceneModel",
    "SigmaModel",
    "SignalConfig",
    "benchmark_scene_path",
    "enumerate_candidates",
    "evaluate_node",
    "load_scene",
    "plan",
    "predict_node",
    "save_scene",
    "select_optimal",
    "validate_scene",
]
