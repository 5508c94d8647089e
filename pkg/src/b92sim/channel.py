"""Classical public channel: framing, transports, and bit-list transfer.

Wire format: each frame is a 4-byte big-endian length prefix followed
by one UTF-8 JSON object with exactly the fields {session_id,
sequence, kind, payload}. Frames never exceed 64 KiB, so long bit
lists are split across consecutive frames of the same kind carrying
{total, offset, bits} with the bits hex-encoded (packed big-endian).

The same framing runs over an in-process loopback queue pair or a TCP
socket, so everything the protocol says on the wire is identical in
both modes and can be inspected by tests.
"""
from __future__ import annotations

import json
import queue
import socket
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ChannelError, ProtocolDesyncError

MAX_FRAME_BYTES = 64 * 1024
_HEADER = struct.Struct(">I")
# payload bits per chunk; 100k bits -> 25 kB of hex, comfortably per-frame
CHUNK_BITS = 100_000

KINDS = (
    "Hello",
    "Results",
    "ErrorCheckIndices",
    "ErrorCheckValues",
    "Parities",
    "DiscardList",
    "Done",
    "Ciphertext",
)


@dataclass(frozen=True)
class PublicMessage:
    """One framed message on the public channel."""

    kind: str
    payload: dict
    session_id: int
    sequence: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ProtocolDesyncError(f"unknown message kind {self.kind!r}")


def bits_to_hex(bits: np.ndarray) -> str:
    """Pack a 0/1 array big-endian and render as hex."""
    arr = np.asarray(bits, dtype=np.uint8)
    return np.packbits(arr).tobytes().hex()


def hex_to_bits(s: str, n: int) -> np.ndarray:
    """Inverse of bits_to_hex for a known bit count."""
    raw = np.frombuffer(bytes.fromhex(s), dtype=np.uint8)
    bits = np.unpackbits(raw)
    if len(bits) < n:
        raise ProtocolDesyncError(f"hex carries {len(bits)} bits, expected {n}")
    return bits[:n]


def encode_frame(msg: PublicMessage) -> bytes:
    body = json.dumps(
        {
            "session_id": msg.session_id,
            "sequence": msg.sequence,
            "kind": msg.kind,
            "payload": msg.payload,
        },
        separators=(",", ":"),
    ).encode("utf-8")
    if _HEADER.size + len(body) > MAX_FRAME_BYTES:
        raise ChannelError(f"frame of {len(body)} bytes exceeds the 64 KiB limit")
    return _HEADER.pack(len(body)) + body


def decode_frame(body: bytes) -> PublicMessage:
    try:
        obj = json.loads(body.decode("utf-8"))
        return PublicMessage(
            kind=obj["kind"],
            payload=obj["payload"],
            session_id=int(obj["session_id"]),
            sequence=int(obj["sequence"]),
        )
    except (ValueError, KeyError, TypeError) as exc:
        raise ProtocolDesyncError(f"malformed frame: {exc}") from exc


class LoopbackTransport:
    """Queue-backed transport; sends and receives whole frames."""

    def __init__(self, inbox: queue.Queue, outbox: queue.Queue, timeout: float = 30.0):
        self._inbox = inbox
        self._outbox = outbox
        self._timeout = timeout

    def send_frame(self, data: bytes) -> None:
        self._outbox.put(data)

    def recv_frame(self) -> bytes:
        try:
            data = self._inbox.get(timeout=self._timeout)
        except queue.Empty as exc:
            raise ChannelError("loopback peer went silent") from exc
        if data is None:
            raise ChannelError("loopback peer closed the channel")
        return data

    def close(self) -> None:
        self._outbox.put(None)


def loopback_pair(timeout: float = 30.0) -> tuple[LoopbackTransport, LoopbackTransport]:
    a_to_b: queue.Queue = queue.Queue()
    b_to_a: queue.Queue = queue.Queue()
    return (
        LoopbackTransport(inbox=b_to_a, outbox=a_to_b, timeout=timeout),
        LoopbackTransport(inbox=a_to_b, outbox=b_to_a, timeout=timeout),
    )


class SocketTransport:
    """Blocking TCP transport for one peer connection."""

    def __init__(self, sock: socket.socket, timeout: float = 30.0):
        sock.settimeout(timeout)
        self._sock = sock

    def send_frame(self, data: bytes) -> None:
        try:
            self._sock.sendall(data)
        except OSError as exc:
            raise ChannelError(f"send failed: {exc}") from exc

    def _recv_exact(self, n: int) -> bytes:
        chunks = []
        got = 0
        while got < n:
            try:
                part = self._sock.recv(n - got)
            except socket.timeout as exc:
                raise ChannelError("receive timed out") from exc
            except OSError as exc:
                raise ChannelError(f"receive failed: {exc}") from exc
            if not part:
                raise ChannelError("connection closed by peer")
            chunks.append(part)
            got += len(part)
        return b"".join(chunks)

    def recv_frame(self) -> bytes:
        header = self._recv_exact(_HEADER.size)
        (length,) = _HEADER.unpack(header)
        if _HEADER.size + length > MAX_FRAME_BYTES:
            raise ChannelError(f"peer announced oversized frame of {length} bytes")
        return header + self._recv_exact(length)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class MessagePipe:
    """Typed message layer over a transport.

    Tracks outgoing and incoming sequence numbers per session and
    rejects out-of-order or foreign-session frames.
    """

    def __init__(self, transport, session_id: int):
        self._transport = transport
        self.session_id = session_id
        self._seq_out = 0
        self._seq_in = 0

    def send(self, kind: str, payload: dict) -> None:
        self._seq_out += 1
        msg = PublicMessage(
            kind=kind, payload=payload, session_id=self.session_id, sequence=self._seq_out
        )
        self._transport.send_frame(encode_frame(msg))

    def recv(self, expect_kind: str | None = None) -> PublicMessage:
        data = self._transport.recv_frame()
        msg = decode_frame(data[_HEADER.size:])
        if msg.session_id != self.session_id:
            raise ProtocolDesyncError(
                f"session_id {msg.session_id} does not match {self.session_id}"
            )
        if msg.sequence <= self._seq_in:
            raise ProtocolDesyncError(
                f"sequence {msg.sequence} not increasing (last was {self._seq_in})"
            )
        self._seq_in = msg.sequence
        if expect_kind is not None and msg.kind != expect_kind:
            raise ProtocolDesyncError(f"expected {expect_kind}, got {msg.kind}")
        return msg

    def close(self) -> None:
        self._transport.close()


def send_bit_frames(
    pipe: MessagePipe, kind: str, bits: np.ndarray, extra: dict | None = None
) -> None:
    """Ship a bit list as one or more frames of the same kind.

    Each frame carries {total, offset, bits}; any ``extra`` fields ride
    on the first frame only.
    """
    arr = np.asarray(bits, dtype=np.uint8)
    total = int(len(arr))
    offset = 0
    first = True
    while True:
        chunk = arr[offset: offset + CHUNK_BITS]
        payload = {"total": total, "offset": offset, "bits": bits_to_hex(chunk)}
        if first and extra:
            payload.update(extra)
        pipe.send(kind, payload)
        first = False
        offset += len(chunk)
        if offset >= total:
            break


def recv_bit_frames(pipe: MessagePipe, kind: str) -> tuple[np.ndarray, dict]:
    """Reassemble a bit list sent by send_bit_frames.

    Returns the bits and the first frame's payload (for extra fields).
    """
    msg = pipe.recv(expect_kind=kind)
    head = msg.payload
    total = int(head["total"])
    out = np.zeros(total, dtype=np.uint8)
    received = 0
    while True:
        offset = int(msg.payload["offset"])
        n = min(CHUNK_BITS, total - offset)
        out[offset: offset + n] = hex_to_bits(msg.payload["bits"], n)
        received = offset + n
        if received >= total:
            break
        msg = pipe.recv(expect_kind=kind)
    return out, head


def open_listener(host: str, port: int) -> socket.socket:
    """Bind and listen for a single peer; port 0 picks a free port."""
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((host, port))
        sock.listen(1)
    except OSError as exc:
        sock.close()
        raise ChannelError(f"cannot listen on {host}:{port}: {exc}") from exc
    return sock


def accept_one(listener: socket.socket, timeout: float = 30.0) -> socket.socket:
    listener.settimeout(timeout)
    try:
        conn, _addr = listener.accept()
    except (socket.timeout, OSError) as exc:
        raise ChannelError(f"accept failed: {exc}") from exc
    finally:
        listener.close()
    return conn


def connect_with_retry(host: str, port: int, deadline: float = 10.0) -> socket.socket:
    """Connect to a listener, retrying briefly while it comes up."""
    import time

    end = time.monotonic() + deadline
    last: Exception | None = None
    while time.monotonic() < end:
        try:
            return socket.create_connection((host, port), timeout=deadline)
        except OSError as exc:
            last = exc
            time.sleep(0.05)
    raise ChannelError(f"cannot connect to {host}:{port}: {last}")
