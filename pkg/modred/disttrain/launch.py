"""
Run a whole distributed training job inside one process.

The coordinator and one worker per channel each get a thread and talk over
either the in-memory transport or loopback TCP sockets. Used by the test-suite
and by ``modred pretrain-dist --role local``; separate processes use
``run_coordinator`` / ``run_worker`` directly.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

from modred.datapipe.records import SignalRecord, read_dataset
from modred.disttrain.config import TrainConfig
from modred.disttrain.coordinator import Coordinator, CoordinatorSummary
from modred.disttrain.transport import (
    Connection,
    Listener,
    MemoryNetwork,
    SocketListener,
    connect_socket,
)
from modred.disttrain.worker import WorkerResult, run_worker


logger = logging.getLogger(__name__)

type TransportKind = Literal["memory", "socket"]


@dataclass
class DistributedResult:
    summary: CoordinatorSummary
    workers: dict[int, WorkerResult]


def run_local(
    cfg: TrainConfig,
    *,
    transport: TransportKind = "memory",
    records: Sequence[SignalRecord] | None = None,
    timeout_seconds: float | None = 120.0,
) -> DistributedResult:
    """
    Run coordinator and workers as threads and wait for all of them.

    Raises:
        ModredError: The first failure of any role (coordinator first).
    """
    records = list(records) if records is not None else read_dataset(cfg.require_manifest())
    listener: Listener
    if transport == "memory":
        network = MemoryNetwork(timeout_seconds=timeout_seconds)
        listener = network.listen()

        def connect() -> Connection:
            return network.connect()

    else:
        socket_listener = SocketListener("127.0.0.1:0", timeout_seconds=timeout_seconds)
        listener = socket_listener

        def connect() -> Connection:
            return connect_socket(socket_listener.endpoint, timeout_seconds=timeout_seconds)

    coordinator = Coordinator(cfg, listener, record_keys=[r.key for r in records])
    logger.info(
        "Starting local distributed run: %d channels over %s transport", cfg.n_channels, transport
    )
    with ThreadPoolExecutor(max_workers=cfg.n_channels + 1) as pool:
        coordinator_future = pool.submit(coordinator.run)
        worker_futures = {
            channel: pool.submit(
                lambda c=channel: run_worker(cfg, c, connect(), records=records)
            )
            for channel in cfg.channels
        }
        summary = coordinator_future.result()
        workers = {channel: future.result() for channel, future in worker_futures.items()}
    return DistributedResult(summary=summary, workers=workers)
