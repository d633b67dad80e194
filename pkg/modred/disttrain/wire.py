"""
Coordinator/worker frame codec.

Every message travels as one frame (all integers little-endian)::

    "MRDX"          4-byte magic
    msg_type        u8
    payload_len     u64
    payload         payload_len bytes

Payloads by type:

    0x01 HELLO      channel_id u8
    0x02 EPOCH      epoch u32, epoch_seed u64, w_align f64, w_rec f64
    0x03 EMB        step u64, rows u32, dim u32, rows*dim binary64 values
    0x04 GRAD       same layout as EMB
    0x05 DONE       step u64, optionally followed by rec_loss f64
    0x06 SHUTDOWN   empty
    0x07 ERR        UTF-8 reason

The codec is shared by the in-memory and socket transports, so tests that run
over memory exercise exactly the bytes a socket would carry.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from modred.core.errors import ProtocolError


MAGIC = b"MRDX"
HEADER = struct.Struct("<4sBQ")
HEADER_SIZE = HEADER.size
MAX_PAYLOAD = 1 << 32

_EPOCH = struct.Struct("<IQdd")
_MATRIX = struct.Struct("<QII")
_DONE = struct.Struct("<Q")
_DONE_WITH_LOSS = struct.Struct("<Qd")


class MsgType(IntEnum):
    HELLO = 0x01
    EPOCH = 0x02
    EMB = 0x03
    GRAD = 0x04
    DONE = 0x05
    SHUTDOWN = 0x06
    ERR = 0x07


@dataclass(frozen=True)
class Hello:
    channel: int


@dataclass(frozen=True)
class EpochBegin:
    epoch: int
    epoch_seed: int
    w_align: float
    w_rec: float


@dataclass(frozen=True)
class Embeddings:
    step: int
    matrix: np.ndarray


@dataclass(frozen=True)
class Gradients:
    step: int
    matrix: np.ndarray


@dataclass(frozen=True)
class Done:
    step: int
    rec_loss: float | None = None


@dataclass(frozen=True)
class Shutdown:
    pass


@dataclass(frozen=True)
class ErrorReport:
    reason: str


type Message = Hello | EpochBegin | Embeddings | Gradients | Done | Shutdown | ErrorReport


# ==============================================================================
# Encoding
# ==============================================================================


def _matrix_payload(step: int, matrix: np.ndarray) -> bytes:
    values = np.asarray(matrix, dtype="<f8")
    if values.ndim != 2:
        raise ValueError(f"matrix payload must be 2-D, got shape {values.shape}")
    rows, dim = values.shape
    return _MATRIX.pack(step, rows, dim) + np.ascontiguousarray(values).tobytes()


def encode_payload(message: Message) -> tuple[MsgType, bytes]:
    match message:
        case Hello(channel=channel):
            return MsgType.HELLO, struct.pack("<B", channel)
        case EpochBegin(epoch=epoch, epoch_seed=seed, w_align=w_align, w_rec=w_rec):
            return MsgType.EPOCH, _EPOCH.pack(epoch, seed, w_align, w_rec)
        case Embeddings(step=step, matrix=matrix):
            return MsgType.EMB, _matrix_payload(step, matrix)
        case Gradients(step=step, matrix=matrix):
            return MsgType.GRAD, _matrix_payload(step, matrix)
        case Done(step=step, rec_loss=None):
            return MsgType.DONE, _DONE.pack(step)
        case Done(step=step, rec_loss=rec_loss):
            return MsgType.DONE, _DONE_WITH_LOSS.pack(step, rec_loss)
        case Shutdown():
            return MsgType.SHUTDOWN, b""
        case ErrorReport(reason=reason):
            return MsgType.ERR, reason.encode("utf-8")
    raise TypeError(f"cannot encode {type(message).__name__}")


def encode_message(message: Message) -> bytes:
    """Encode ``message`` as one complete frame."""
    msg_type, payload = encode_payload(message)
    return HEADER.pack(MAGIC, msg_type, len(payload)) + payload


# ==============================================================================
# Decoding
# ==============================================================================


def decode_header(header: bytes) -> tuple[MsgType, int]:
    """Validate a frame header and return ``(msg_type, payload_len)``."""
    if len(header) != HEADER_SIZE:
        raise ProtocolError(f"frame header is {len(header)} bytes, expected {HEADER_SIZE}")
    magic, raw_type, payload_len = HEADER.unpack(header)
    if magic != MAGIC:
        raise ProtocolError(f"bad frame magic {magic!r}")
    try:
        msg_type = MsgType(raw_type)
    except ValueError as exc:
        raise ProtocolError(f"unknown message type 0x{raw_type:02x}") from exc
    if payload_len > MAX_PAYLOAD:
        raise ProtocolError(f"frame payload of {payload_len} bytes exceeds the limit")
    return msg_type, payload_len


def _expect_size(msg_type: MsgType, payload: bytes, *sizes: int) -> None:
    if len(payload) not in sizes:
        raise ProtocolError(
            f"{msg_type.name} payload is {len(payload)} bytes, expected one of {sizes}"
        )


def _decode_matrix(msg_type: MsgType, payload: bytes) -> tuple[int, np.ndarray]:
    if len(payload) < _MATRIX.size:
        raise ProtocolError(f"{msg_type.name} payload too short ({len(payload)} bytes)")
    step, rows, dim = _MATRIX.unpack_from(payload)
    _expect_size(msg_type, payload, _MATRIX.size + rows * dim * 8)
    if rows * dim == 0:
        return step, np.empty((rows, dim), dtype=np.float64)
    matrix = np.frombuffer(payload, dtype="<f8", offset=_MATRIX.size).reshape(rows, dim)
    return step, matrix.astype(np.float64)


def decode_payload(msg_type: MsgType, payload: bytes) -> Message:
    match msg_type:
        case MsgType.HELLO:
            _expect_size(msg_type, payload, 1)
            return Hello(channel=payload[0])
        case MsgType.EPOCH:
            _expect_size(msg_type, payload, _EPOCH.size)
            epoch, seed, w_align, w_rec = _EPOCH.unpack(payload)
            return EpochBegin(epoch=epoch, epoch_seed=seed, w_align=w_align, w_rec=w_rec)
        case MsgType.EMB:
            return Embeddings(*_decode_matrix(msg_type, payload))
        case MsgType.GRAD:
            return Gradients(*_decode_matrix(msg_type, payload))
        case MsgType.DONE:
            _expect_size(msg_type, payload, _DONE.size, _DONE_WITH_LOSS.size)
            if len(payload) == _DONE.size:
                return Done(step=_DONE.unpack(payload)[0])
            step, rec_loss = _DONE_WITH_LOSS.unpack(payload)
            return Done(step=step, rec_loss=rec_loss)
        case MsgType.SHUTDOWN:
            _expect_size(msg_type, payload, 0)
            return Shutdown()
        case MsgType.ERR:
            try:
                return ErrorReport(reason=payload.decode("utf-8"))
            except UnicodeDecodeError as exc:
                raise ProtocolError("ERR payload is not valid UTF-8") from exc
    raise ProtocolError(f"unhandled message type {msg_type!r}")


def decode_message(frame: bytes) -> Message:
    """Decode one complete frame; trailing or missing bytes are protocol errors."""
    msg_type, payload_len = decode_header(frame[:HEADER_SIZE])
    payload = frame[HEADER_SIZE:]
    if len(payload) != payload_len:
        raise ProtocolError(
            f"frame declares {payload_len} payload bytes but carries {len(payload)}"
        )
    return decode_payload(msg_type, payload)
