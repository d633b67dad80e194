"""Tests for the frame codec, transports and protocol failure handling."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from modred.core.errors import (
    ConfigError,
    ConnectionLostError,
    DuplicateChannelError,
    ProtocolError,
    StepMismatchError,
)
from modred.datapipe.records import RecordKey
from modred.disttrain import transport
from modred.disttrain.coordinator import Coordinator, run_coordinator
from modred.disttrain.transport import MemoryNetwork, connect_socket, parse_endpoint
from modred.disttrain.wire import (
    HEADER,
    MAGIC,
    Done,
    Embeddings,
    EpochBegin,
    ErrorReport,
    Gradients,
    Hello,
    MsgType,
    Shutdown,
    decode_message,
    encode_message,
)
from modred.disttrain.worker import Worker


# ==============================================================================
# Codec
# ==============================================================================


def _random_message(rng: np.random.Generator):
    kind = int(rng.integers(0, 8))
    if kind == 0:
        return Hello(channel=int(rng.integers(0, 256)))
    if kind == 1:
        return EpochBegin(
            epoch=int(rng.integers(0, 2**32)),
            epoch_seed=int(rng.integers(0, 2**63)) * 2 + 1,
            w_align=float(rng.random()),
            w_rec=float(rng.standard_normal()),
        )
    if kind in (2, 3):
        cls = Embeddings if kind == 2 else Gradients
        shape = (int(rng.integers(0, 5)), int(rng.integers(0, 7)))
        return cls(step=int(rng.integers(0, 2**40)), matrix=rng.standard_normal(shape))
    if kind == 4:
        return Done(step=int(rng.integers(0, 2**40)))
    if kind == 5:
        return Done(step=int(rng.integers(0, 2**40)), rec_loss=float(rng.exponential()))
    if kind == 6:
        return Shutdown()
    letters = rng.choice(list("abcé✓ "), size=int(rng.integers(0, 20)))
    return ErrorReport(reason="".join(letters))


def _same(a, b) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Embeddings | Gradients):
        return a.step == b.step and a.matrix.tobytes() == b.matrix.tobytes() and (
            a.matrix.shape == b.matrix.shape
        )
    return a == b


def test_codec_round_trips_random_messages():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        message = _random_message(rng)
        frame = encode_message(message)
        decoded = decode_message(frame)
        assert _same(message, decoded)
        assert encode_message(decoded) == frame


def test_frame_layout_is_little_endian():
    frame = encode_message(EpochBegin(epoch=3, epoch_seed=9, w_align=0.5, w_rec=0.25))
    magic, msg_type, length = HEADER.unpack(frame[: HEADER.size])
    assert (magic, msg_type, length) == (MAGIC, MsgType.EPOCH, 28)
    assert struct.unpack("<IQdd", frame[HEADER.size :]) == (3, 9, 0.5, 0.25)


def test_bad_magic_is_rejected():
    frame = bytearray(encode_message(Shutdown()))
    frame[:4] = b"XXXX"
    with pytest.raises(ProtocolError, match="magic"):
        decode_message(bytes(frame))


def test_unknown_type_is_rejected():
    with pytest.raises(ProtocolError, match="unknown message type"):
        decode_message(HEADER.pack(MAGIC, 0x42, 0))


def test_length_mismatch_is_rejected():
    frame = encode_message(Done(step=1))
    with pytest.raises(ProtocolError):
        decode_message(frame[:-1])
    with pytest.raises(ProtocolError):
        decode_message(frame + b"\x00")


def test_matrix_payload_size_is_checked():
    payload = struct.pack("<QII", 0, 2, 2) + b"\x00" * 8
    with pytest.raises(ProtocolError, match="EMB"):
        decode_message(HEADER.pack(MAGIC, MsgType.EMB, len(payload)) + payload)


# ==============================================================================
# Coordinator failures
# ==============================================================================


KEYS = [RecordKey(f"r{i}", f"s{i}") for i in range(4)]


def test_duplicate_hello_is_rejected(make_config):
    network = MemoryNetwork(timeout_seconds=5)
    first, second = network.connect(), network.connect()
    first.send(Hello(2))
    second.send(Hello(2))

    cfg = make_config(channels=[1, 2])
    with pytest.raises(DuplicateChannelError):
        Coordinator(cfg, network.listen(), record_keys=KEYS).run()
    assert isinstance(second.recv(), ErrorReport)
    assert isinstance(first.recv(), ErrorReport)


def test_run_coordinator_reports_protocol_exit_code(make_config):
    network = MemoryNetwork(timeout_seconds=5)
    for _ in range(2):
        network.connect().send(Hello(1))
    assert run_coordinator(make_config(channels=[1, 2]), network.listen(), record_keys=KEYS) == 4


def test_worker_disconnect_mid_step_aborts_run(make_config):
    cfg = make_config(channels=[0, 1])
    network = MemoryNetwork(timeout_seconds=5)
    alive, leaving = network.connect(), network.connect()
    alive.send(Hello(0))
    alive.send(Embeddings(step=0, matrix=np.ones((2, cfg.model.enc_dim))))
    leaving.send(Hello(1))
    leaving.close()

    with pytest.raises(ConnectionLostError):
        Coordinator(cfg, network.listen(), record_keys=KEYS).run()
    assert isinstance(alive.recv(), EpochBegin)
    assert isinstance(alive.recv(), ErrorReport)


def test_embeddings_for_wrong_step_abort_run(make_config):
    cfg = make_config(channels=[0, 1])
    network = MemoryNetwork(timeout_seconds=5)
    for channel in (0, 1):
        connection = network.connect()
        connection.send(Hello(channel))
        connection.send(Embeddings(step=7, matrix=np.ones((2, cfg.model.enc_dim))))
    with pytest.raises(StepMismatchError):
        Coordinator(cfg, network.listen(), record_keys=KEYS).run()


# ==============================================================================
# Worker failures
# ==============================================================================


def test_worker_rejects_bad_magic(tiny_records, make_config):
    network = MemoryNetwork(timeout_seconds=5)
    client = network.connect()
    server = network.listen().accept()
    server.send_frame(b"XXXX" + encode_message(Shutdown())[4:])

    with pytest.raises(ProtocolError, match="magic"):
        Worker(make_config(), 0, client, records=tiny_records).run()
    assert server.recv() == Hello(0)
    assert isinstance(server.recv(), ErrorReport)
    with pytest.raises(ConnectionLostError):
        server.recv()


def test_worker_rejects_gradient_for_other_step(tiny_records, make_config):
    cfg = make_config()
    network = MemoryNetwork(timeout_seconds=5)
    client = network.connect()
    server = network.listen().accept()
    server.send(EpochBegin(epoch=0, epoch_seed=1, w_align=0.0, w_rec=1.0))
    server.send(Gradients(step=5, matrix=np.zeros((2, cfg.model.enc_dim))))

    with pytest.raises(StepMismatchError):
        Worker(cfg, 0, client, records=tiny_records).run()


def test_worker_stops_when_coordinator_aborts(tiny_records, make_config):
    network = MemoryNetwork(timeout_seconds=5)
    client = network.connect()
    server = network.listen().accept()
    server.send(ErrorReport("duplicate channel"))
    with pytest.raises(ProtocolError, match="duplicate channel"):
        Worker(make_config(), 1, client, records=tiny_records).run()


# ==============================================================================
# Sockets
# ==============================================================================


@pytest.mark.parametrize("endpoint", ["localhost", ":80", "host:http", "host:70000"])
def test_parse_endpoint_rejects_malformed(endpoint):
    with pytest.raises(ConfigError):
        parse_endpoint(endpoint)


def test_parse_endpoint():
    assert parse_endpoint("127.0.0.1:5050") == ("127.0.0.1", 5050)


def test_connect_retries_until_coordinator_listens(mocker):
    sleep = mocker.patch.object(transport.time, "sleep")
    create = mocker.patch.object(
        transport.socket,
        "create_connection",
        side_effect=[ConnectionRefusedError("refused"), mocker.MagicMock()],
    )
    connect_socket("127.0.0.1:9", max_attempts=3, retry_delay_seconds=0.25)
    assert create.call_count == 2
    sleep.assert_called_once_with(0.25)


def test_connect_gives_up_after_max_attempts(mocker):
    mocker.patch.object(transport.time, "sleep")
    mocker.patch.object(
        transport.socket, "create_connection", side_effect=ConnectionRefusedError("refused")
    )
    with pytest.raises(ConnectionLostError, match="2 attempts"):
        connect_socket("127.0.0.1:9", max_attempts=2, retry_delay_seconds=0)
