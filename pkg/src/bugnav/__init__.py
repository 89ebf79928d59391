"""Bug algorithm navigation: simulator, controllers, noise models and experiment harness."""

from .bugs import ALGORITHMS, Algorithm, BugParams, NavMode, NavState, bug_step
from .envgen import Environment, GenParams, generate, load_env, save_env
from .harness import EpisodeConfig, EpisodeResult, RunRecord, run_batch, run_episode
from .noise import NoiseConfig
from .oracle import astar_length, pad

__all__ = [
    "ALGORITHMS",
    "Algorithm",
    "BugParams",
    "EpisodeConfig",
    "EpisodeResult",
    "Environment",
    "GenParams",
    "NavMode",
    "NavState",
    "NoiseConfig",
    "RunRecord",
    "astar_length",
    "bug_step",
    "generate",
    "load_env",
    "pad",
    "run_batch",
    "run_episode",
    "save_env",
]
