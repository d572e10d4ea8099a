from .agent import Td3Agent, Td3Config, TrainingDiverged, soft_update
from .buffer import Batch, ReplayBuffer
from .checkpoint import CheckpointError
from .nn import Adam, Mlp
from .toy import PointMass1D
from .train import run_training, train

__all__ = [
    "Adam", "Batch", "CheckpointError", "Mlp", "PointMass1D", "ReplayBuffer", "Td3Agent", "Td3Config",
    "TrainingDiverged", "run_training", "soft_update", "train",
]
