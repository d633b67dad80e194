"""
Binary checkpoint codec for one channel's model and optimizer state.

Layout (all integers little-endian):

    "MR1D"                      4-byte magic
    version                     u32
    header length + header      u32 + UTF-8 JSON (model config, channel, epoch,
                                step, optimizer scalars)
    entries until EOF:
        name                    u16 length + UTF-8
        rank                    u8
        dims                    u64 each
        values                  binary64, row-major

Model parameters are stored as ``model/<name>``; AdamW moments as
``adamw.m/<name>`` and ``adamw.v/<name>``. Encoding is a pure function of the
checkpoint contents, so save -> load -> save is byte-identical.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from modred.core import storage
from modred.core.errors import CheckpointError
from modred.mae1d.config import ModelConfig
from modred.mae1d.model import Mae1dModel, count_params
from modred.numcore.optim import AdamWState


logger = logging.getLogger(__name__)

MAGIC = b"MR1D"
FORMAT_VERSION = 1

MODEL_PREFIX = "model/"
FIRST_MOMENT_PREFIX = "adamw.m/"
SECOND_MOMENT_PREFIX = "adamw.v/"


class OptimizerScalars(BaseModel):
    model_config = ConfigDict(extra="forbid")

    beta1: float
    beta2: float
    epsilon: float
    weight_decay: float
    step_count: int


class CheckpointHeader(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelConfig
    channel: int
    epoch: int
    step: int
    optimizer: OptimizerScalars


@dataclass
class Checkpoint:
    """
    One channel's persisted training state.

    ``epoch`` is the number of completed epochs (the curriculum position to
    resume from) and ``step`` the number of optimizer steps taken so far.
    """

    config: ModelConfig
    channel: int
    epoch: int
    step: int
    params: dict[str, np.ndarray]
    optimizer: AdamWState = field(default_factory=AdamWState)

    @classmethod
    def capture(
        cls, model: Mae1dModel, optimizer: AdamWState, *, channel: int, epoch: int, step: int
    ) -> Checkpoint:
        """Snapshot a live model and optimizer (arrays are copied)."""
        state = AdamWState(
            beta1=optimizer.beta1,
            beta2=optimizer.beta2,
            epsilon=optimizer.epsilon,
            weight_decay=optimizer.weight_decay,
            step_count=optimizer.step_count,
            first_moment={k: v.copy() for k, v in optimizer.first_moment.items()},
            second_moment={k: v.copy() for k, v in optimizer.second_moment.items()},
        )
        params = {name: values.copy() for name, values in model.arrays().items()}
        return cls(model.config, channel, epoch, step, params, state)

    def to_model(self) -> Mae1dModel:
        return Mae1dModel.from_arrays(self.config, self.params)


# ==============================================================================
# Encoding
# ==============================================================================


def _encode_entry(name: str, values: np.ndarray) -> bytes:
    raw_name = name.encode("utf-8")
    array = np.ascontiguousarray(values, dtype="<f8")
    parts = [
        struct.pack("<H", len(raw_name)),
        raw_name,
        struct.pack("<B", array.ndim),
        struct.pack(f"<{array.ndim}Q", *array.shape),
        array.tobytes(order="C"),
    ]
    return b"".join(parts)


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    header = CheckpointHeader(
        model=checkpoint.config,
        channel=checkpoint.channel,
        epoch=checkpoint.epoch,
        step=checkpoint.step,
        optimizer=OptimizerScalars(**checkpoint.optimizer.scalars()),
    )
    blob = header.model_dump_json().encode("utf-8")
    chunks = [MAGIC, struct.pack("<I", FORMAT_VERSION), struct.pack("<I", len(blob)), blob]
    for name, values in checkpoint.params.items():
        chunks.append(_encode_entry(MODEL_PREFIX + name, values))
    for name, values in checkpoint.optimizer.first_moment.items():
        chunks.append(_encode_entry(FIRST_MOMENT_PREFIX + name, values))
    for name, values in checkpoint.optimizer.second_moment.items():
        chunks.append(_encode_entry(SECOND_MOMENT_PREFIX + name, values))
    return b"".join(chunks)


# ==============================================================================
# Decoding
# ==============================================================================


class _Reader:
    def __init__(self, payload: bytes) -> None:
        self._view = memoryview(payload)
        self.offset = 0

    @property
    def exhausted(self) -> bool:
        return self.offset >= len(self._view)

    def take(self, count: int, what: str) -> bytes:
        end = self.offset + count
        if end > len(self._view):
            raise CheckpointError(f"truncated checkpoint while reading {what}")
        chunk = self._view[self.offset : end].tobytes()
        self.offset = end
        return chunk

    def unpack(self, fmt: str, what: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode_checkpoint(payload: bytes) -> Checkpoint:
    """
    Parse checkpoint bytes.

    Raises:
        CheckpointError: Bad magic, unsupported version, malformed header,
            truncation, or a parameter count that disagrees with the config.
    """
    reader = _Reader(payload)
    if reader.take(4, "magic") != MAGIC:
        raise CheckpointError("not a modred checkpoint (bad magic)")
    (version,) = reader.unpack("<I", "version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {version} (expected {FORMAT_VERSION})"
        )
    (blob_len,) = reader.unpack("<I", "header length")
    try:
        header = CheckpointHeader.model_validate_json(reader.take(blob_len, "header"))
    except ValidationError as exc:
        raise CheckpointError(f"malformed checkpoint header: {exc}") from exc

    params: dict[str, np.ndarray] = {}
    first: dict[str, np.ndarray] = {}
    second: dict[str, np.ndarray] = {}
    while not reader.exhausted:
        (name_len,) = reader.unpack("<H", "entry name length")
        name = reader.take(name_len, "entry name").decode("utf-8")
        (rank,) = reader.unpack("<B", f"rank of {name}")
        dims = reader.unpack(f"<{rank}Q", f"dims of {name}") if rank else ()
        count = int(np.prod(dims, dtype=np.int64)) if rank else 1
        raw = reader.take(8 * count, f"values of {name}")
        values = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(dims)
        for prefix, target in (
            (MODEL_PREFIX, params),
            (FIRST_MOMENT_PREFIX, first),
            (SECOND_MOMENT_PREFIX, second),
        ):
            if name.startswith(prefix):
                target[name[len(prefix) :]] = values
                break
        else:
            raise CheckpointError(f"unknown checkpoint entry {name!r}")

    stored = sum(values.size for values in params.values())
    expected = count_params(header.model)
    if stored != expected:
        raise CheckpointError(f"checkpoint holds {stored} parameters, config implies {expected}")

    scalars = header.optimizer
    optimizer = AdamWState(
        beta1=scalars.beta1,
        beta2=scalars.beta2,
        epsilon=scalars.epsilon,
        weight_decay=scalars.weight_decay,
        step_count=scalars.step_count,
        first_moment=first,
        second_moment=second,
    )
    return Checkpoint(header.model, header.channel, header.epoch, header.step, params, optimizer)


def save_checkpoint(checkpoint: Checkpoint, path: Path) -> None:
    storage.write_bytes(path, encode_checkpoint(checkpoint))
    logger.debug(
        "Saved channel %d checkpoint (epoch %d) to %s", checkpoint.channel, checkpoint.epoch, path
    )


def load_checkpoint(path: Path) -> Checkpoint:
    return decode_checkpoint(storage.read_bytes(path))
