"""Dictionary-synchronized transmission: ship encodings, never the grammar.

Two endpoints that already share a grammar exchange only encodings.  The
receiver decodes each item against its own copy and acknowledges with a
digest of the reconstruction, which the sender verifies, so fidelity is
checked end to end while the grammar itself never crosses the wire after
the handshake.

Wire protocol over any reliable ordered byte stream:

    handshake   C->S  "SPTX" | version byte (1) | 32-byte grammar hash
                S->C  1 status byte (0 accept, 2 hash mismatch)
    item        C->S  4-byte big-endian length | SPE1 encoding bytes
                S->C  1 status byte (0 ok, 3 malformed frame,
                      4 decode failure) | on ok, 32-byte SHA-256 of the
                      reconstructed item's space-joined text
    end         C->S  4-byte zero length
                S->C  1 status byte (0) | 4-byte big-endian item count

``bytes_on_wire`` counts item frames (length prefixes included) and
excludes the handshake and the end marker.
"""

from __future__ import annotations

import hashlib
import socket
import socketserver
import struct
import threading
from dataclasses import dataclass, field

from .core import Grammar, Pattern, SPError
from .builder import SearchParams
from .codec import DecodeError, decode, encode, encoding_from_bytes, encoding_to_bytes

HANDSHAKE_MAGIC = b"SPTX"
PROTOCOL_VERSION = 1

OK = 0
ERR_HASH_MISMATCH = 2
ERR_MALFORMED_FRAME = 3
ERR_DECODE_FAILURE = 4


class ProtocolError(SPError):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class Session:
    """Per-connection accounting; payload frames only."""

    negotiated_hash: str = ""
    bytes_raw: int = 0
    bytes_on_wire: int = 0
    items_transferred: int = 0


@dataclass
class TransferReport:
    bytes_raw: int
    bytes_on_wire: int
    items: int

    @property
    def ratio(self) -> float:
        if self.bytes_raw == 0:
            return 1.0
        return self.bytes_on_wire / self.bytes_raw


def item_digest(p: Pattern) -> bytes:
    return hashlib.sha256(p.text().encode("utf-8")).digest()


def _read_exact(stream, n: int) -> bytes:
    chunks = []
    got = 0
    while got < n:
        piece = stream.recv(n - got) if hasattr(stream, "recv") else stream.read(n - got)
        if not piece:
            raise ProtocolError("peer closed mid-message", ERR_MALFORMED_FRAME)
        chunks.append(piece)
        got += len(piece)
    return b"".join(chunks)


def _write_all(stream, data: bytes) -> None:
    if hasattr(stream, "sendall"):
        stream.sendall(data)
    else:
        stream.write(data)


def handle_session(stream, g: Grammar) -> Session:
    """Server side of one connection; works on sockets or file-like duplexes."""
    session = Session()
    head = _read_exact(stream, 4 + 1 + 32)
    if head[:4] != HANDSHAKE_MAGIC or head[4] != PROTOCOL_VERSION:
        _write_all(stream, bytes([ERR_MALFORMED_FRAME]))
        return session
    offered = head[5:].hex()
    if offered != g.content_hash:
        _write_all(stream, bytes([ERR_HASH_MISMATCH]))
        return session
    session.negotiated_hash = offered
    _write_all(stream, bytes([OK]))

    while True:
        (length,) = struct.unpack(">I", _read_exact(stream, 4))
        if length == 0:
            _write_all(stream, bytes([OK]) + struct.pack(">I", session.items_transferred))
            return session
        body = _read_exact(stream, length)
        session.bytes_on_wire += 4 + length
        try:
            enc = encoding_from_bytes(body)
        except DecodeError:
            _write_all(stream, bytes([ERR_MALFORMED_FRAME]))
            return session
        try:
            item = decode(enc, g)
        except DecodeError:
            _write_all(stream, bytes([ERR_DECODE_FAILURE]))
            return session
        session.items_transferred += 1
        session.bytes_raw += len(item.text().encode("utf-8"))
        _write_all(stream, bytes([OK]) + item_digest(item))


def send_over_stream(stream, corpus, g: Grammar, params: SearchParams | None = None) -> TransferReport:
    """Client side: handshake, stream encodings, verify per-item digests."""
    _write_all(stream, HANDSHAKE_MAGIC + bytes([PROTOCOL_VERSION]) + bytes.fromhex(g.content_hash))
    status = _read_exact(stream, 1)[0]
    if status == ERR_HASH_MISMATCH:
        raise ProtocolError("server grammar hash differs", ERR_HASH_MISMATCH)
    if status != OK:
        raise ProtocolError(f"handshake refused with code {status}", status)

    report = TransferReport(bytes_raw=0, bytes_on_wire=0, items=0)
    cache: dict[tuple[str, ...], bytes] = {}
    for ordinal, item in enumerate(corpus):
        blob = cache.get(item.symbols)
        if blob is None:
            blob = encoding_to_bytes(encode(item, g, params))
            cache[item.symbols] = blob
        frame = struct.pack(">I", len(blob)) + blob
        _write_all(stream, frame)
        report.bytes_raw += len(item.text().encode("utf-8"))
        report.bytes_on_wire += len(frame)
        status = _read_exact(stream, 1)[0]
        if status != OK:
            raise ProtocolError(f"item {ordinal} refused with code {status}", status)
        digest = _read_exact(stream, 32)
        if digest != item_digest(item):
            raise ProtocolError(f"item {ordinal} digest mismatch", ERR_DECODE_FAILURE)
        report.items += 1
    _write_all(stream, struct.pack(">I", 0))
    status = _read_exact(stream, 1)[0]
    if status != OK:
        raise ProtocolError(f"end-of-corpus refused with code {status}", status)
    (count,) = struct.unpack(">I", _read_exact(stream, 4))
    if count != report.items:
        raise ProtocolError(f"server counted {count} items, sent {report.items}", ERR_DECODE_FAILURE)
    return report


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        try:
            handle_session(self.request, self.server.grammar)
        except ProtocolError:
            pass  # connection-level failures end the session


class SPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, g: Grammar):
        super().__init__(address, _Handler)
        self.grammar = g


def serve(g: Grammar, address: tuple[str, int]) -> SPServer:
    """Start a server; call .serve_forever() (or run it in a thread) and
    .shutdown() to stop."""
    return SPServer(address, g)


def send(corpus, g: Grammar, address: tuple[str, int], params: SearchParams | None = None) -> TransferReport:
    """Connect to a server and transfer a corpus; returns the report."""
    with socket.create_connection(address) as sock:
        return send_over_stream(sock, corpus, g, params)
