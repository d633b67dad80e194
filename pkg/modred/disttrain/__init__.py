"""Reference and distributed (coordinator/worker) training."""

from modred.disttrain.checkpoints import (
    checkpoint_path,
    load_checkpoint_set,
    save_checkpoint_set,
)
from modred.disttrain.config import TrainConfig
from modred.disttrain.coordinator import Coordinator, CoordinatorSummary, run_coordinator
from modred.disttrain.launch import DistributedResult, run_local
from modred.disttrain.metrics import EpochMetrics, read_metrics, write_metrics
from modred.disttrain.reference import TrainResult, train_reference
from modred.disttrain.trainer import ChannelTrainer, EpochPlan, StepLedger
from modred.disttrain.transport import MemoryNetwork, SocketListener, connect_socket
from modred.disttrain.worker import Worker, WorkerResult, run_worker


__all__ = [
    "ChannelTrainer",
    "Coordinator",
    "CoordinatorSummary",
    "DistributedResult",
    "EpochMetrics",
    "EpochPlan",
    "MemoryNetwork",
    "SocketListener",
    "StepLedger",
    "TrainConfig",
    "TrainResult",
    "Worker",
    "WorkerResult",
    "checkpoint_path",
    "connect_socket",
    "load_checkpoint_set",
    "read_metrics",
    "run_coordinator",
    "run_local",
    "run_worker",
    "save_checkpoint_set",
    "train_reference",
    "write_metrics",
]
