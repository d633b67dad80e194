"""
Reliable, ordered message transports for the coordinator/worker protocol.

Two implementations share the frame codec in :mod:`modred.disttrain.wire`:

- ``MemoryNetwork``: queues of encoded frames between threads of one process.
- ``SocketListener`` / ``connect_socket``: TCP stream sockets.

Both raise ``ConnectionLostError`` when the peer goes away (or a receive
times out) and ``ProtocolError`` for malformed frames.
"""

from __future__ import annotations

import logging
import queue
import socket
import time
from typing import Protocol

from modred.core.errors import ConfigError, ConnectionLostError
from modred.disttrain.wire import (
    HEADER_SIZE,
    Message,
    decode_header,
    decode_message,
    decode_payload,
    encode_message,
)


logger = logging.getLogger(__name__)


class Connection(Protocol):
    def send(self, message: Message) -> None: ...

    def recv(self) -> Message: ...

    def close(self) -> None: ...


class Listener(Protocol):
    def accept(self) -> Connection: ...

    def close(self) -> None: ...


# ==============================================================================
# In-memory transport
# ==============================================================================


_CLOSED = None


class MemoryConnection:
    """One end of an in-process duplex pipe of encoded frames."""

    def __init__(
        self,
        inbox: queue.Queue[bytes | None],
        outbox: queue.Queue[bytes | None],
        *,
        timeout_seconds: float | None = None,
    ) -> None:
        self._inbox = inbox
        self._outbox = outbox
        self._closed = False
        self.timeout_seconds = timeout_seconds

    def send(self, message: Message) -> None:
        self.send_frame(encode_message(message))

    def send_frame(self, frame: bytes) -> None:
        """Push raw bytes as one frame (tests use this to inject malformed frames)."""
        if self._closed:
            raise ConnectionLostError("send on a closed connection")
        self._outbox.put(frame)

    def recv(self) -> Message:
        try:
            frame = self._inbox.get(timeout=self.timeout_seconds)
        except queue.Empty as exc:
            raise ConnectionLostError(
                f"no message within {self.timeout_seconds} s; peer presumed gone"
            ) from exc
        if frame is _CLOSED:
            raise ConnectionLostError("peer closed the connection")
        return decode_message(frame)

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._outbox.put(_CLOSED)


class MemoryListener:
    def __init__(self, network: MemoryNetwork) -> None:
        self._network = network

    def accept(self) -> MemoryConnection:
        try:
            return self._network.pending.get(timeout=self._network.timeout_seconds)
        except queue.Empty as exc:
            raise ConnectionLostError("no worker connected in time") from exc

    def close(self) -> None:
        pass


class MemoryNetwork:
    """A single in-process endpoint that workers connect to and a coordinator listens on."""

    def __init__(self, *, timeout_seconds: float | None = None) -> None:
        self.timeout_seconds = timeout_seconds
        self.pending: queue.Queue[MemoryConnection] = queue.Queue()

    def listen(self) -> MemoryListener:
        return MemoryListener(self)

    def connect(self) -> MemoryConnection:
        to_server: queue.Queue[bytes | None] = queue.Queue()
        to_client: queue.Queue[bytes | None] = queue.Queue()
        timeout = self.timeout_seconds
        server_end = MemoryConnection(to_server, to_client, timeout_seconds=timeout)
        client_end = MemoryConnection(to_client, to_server, timeout_seconds=timeout)
        self.pending.put(server_end)
        return client_end


# ==============================================================================
# Socket transport
# ==============================================================================


def parse_endpoint(endpoint: str) -> tuple[str, int]:
    """Split ``HOST:PORT``; raises ``ConfigError`` on malformed input."""
    host, sep, port = endpoint.rpartition(":")
    if not sep or not host or not port.isdigit() or not 0 <= int(port) <= 65535:
        raise ConfigError(f"endpoint must look like HOST:PORT, got {endpoint!r}")
    return host, int(port)


class SocketConnection:
    def __init__(self, sock: socket.socket, *, timeout_seconds: float | None = None) -> None:
        self._sock = sock
        self._sock.settimeout(timeout_seconds)
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    def send(self, message: Message) -> None:
        self.send_frame(encode_message(message))

    def send_frame(self, frame: bytes) -> None:
        try:
            self._sock.sendall(frame)
        except OSError as exc:
            raise ConnectionLostError(f"send failed: {exc}") from exc

    def _read_exact(self, count: int) -> bytes:
        chunks = bytearray()
        while len(chunks) < count:
            try:
                chunk = self._sock.recv(count - len(chunks))
            except OSError as exc:
                raise ConnectionLostError(f"receive failed: {exc}") from exc
            if not chunk:
                raise ConnectionLostError("peer closed the connection")
            chunks.extend(chunk)
        return bytes(chunks)

    def recv(self) -> Message:
        msg_type, payload_len = decode_header(self._read_exact(HEADER_SIZE))
        return decode_payload(msg_type, self._read_exact(payload_len))

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


class SocketListener:
    def __init__(
        self, endpoint: str, *, backlog: int = 64, timeout_seconds: float | None = None
    ) -> None:
        host, port = parse_endpoint(endpoint)
        self.timeout_seconds = timeout_seconds
        self._sock = socket.create_server((host, port), backlog=backlog)
        self._sock.settimeout(timeout_seconds)
        bound_host, bound_port = self._sock.getsockname()[:2]
        self.endpoint = f"{bound_host}:{bound_port}"
        logger.info("Coordinator listening on %s", self.endpoint)

    def accept(self) -> SocketConnection:
        try:
            sock, address = self._sock.accept()
        except TimeoutError as exc:
            raise ConnectionLostError("no worker connected in time") from exc
        logger.info("Accepted connection from %s:%s", *address[:2])
        return SocketConnection(sock, timeout_seconds=self.timeout_seconds)

    def close(self) -> None:
        self._sock.close()


def connect_socket(
    endpoint: str,
    *,
    max_attempts: int = 10,
    retry_delay_seconds: float = 0.5,
    timeout_seconds: float | None = None,
) -> SocketConnection:
    """
    Connect to a coordinator, retrying while it is not yet listening.

    Args:
        endpoint: ``HOST:PORT`` of the coordinator.
        max_attempts: Connection attempts before giving up.
        retry_delay_seconds: Delay between attempts.
        timeout_seconds: Receive timeout on the established connection.

    Raises:
        ConnectionLostError: Every attempt failed.
    """
    host, port = parse_endpoint(endpoint)
    for attempt in range(1, max_attempts + 1):
        try:
            sock = socket.create_connection((host, port))
        except OSError as exc:
            logger.warning(
                "Connect attempt %d/%d to %s failed: %s", attempt, max_attempts, endpoint, exc
            )
            if attempt < max_attempts:
                time.sleep(retry_delay_seconds)
                continue
            raise ConnectionLostError(
                f"could not reach coordinator at {endpoint} after {max_attempts} attempts"
            ) from exc
        logger.info("Connected to coordinator at %s", endpoint)
        return SocketConnection(sock, timeout_seconds=timeout_seconds)
    raise ConnectionLostError(f"could not reach coordinator at {endpoint}")
