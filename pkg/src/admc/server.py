"""Network front of a session: TCP line protocol, WebSocket gateway, static files.

The simulation runs in one authoritative tick thread. Client I/O happens in
per-connection threads that exchange data with the tick loop through queues;
slow consumers lose old state updates rather than stalling the loop.
"""

from __future__ import annotations

import base64
import hashlib
import mimetypes
import queue
import socket
import threading
import time
from pathlib import Path

from .protocol import ProtocolError, decode_input, encode_state, error_message
from .session import Session

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
CLIENT_QUEUE_DEPTH = 8


class _Client:
    """One connected consumer; transport-specific send is injected."""

    def __init__(self, send_line, close):
        self.queue: queue.Queue[str] = queue.Queue(maxsize=CLIENT_QUEUE_DEPTH)
        self._send_line = send_line
        self._close = close
        self.alive = True
        self.writer = threading.Thread(target=self._drain, daemon=True)
        self.writer.start()

    def _drain(self):
        while self.alive:
            try:
                line = self.queue.get(timeout=0.5)
            except queue.Empty:
                continue
            try:
                self._send_line(line)
            except OSError:
                self.alive = False
        self._close()

    def offer(self, line: str):
        # Drop-oldest: the UI is a viewer, never an authority.
        while True:
            try:
                self.queue.put_nowait(line)
                return
            except queue.Full:
                try:
                    self.queue.get_nowait()
                except queue.Empty:
                    pass

    def stop(self):
        self.alive = False


class SessionServer:
    """Serves one Session over TCP (line protocol) and optionally WebSocket/HTTP."""

    def __init__(
        self,
        session: Session,
        host: str = "127.0.0.1",
        port: int = 7341,
        http_port: int | None = None,
        static_dir: str | Path | None = None,
        realtime: bool = True,
    ):
        self.session = session
        self.host = host
        self.port = port
        self.http_port = http_port
        self.static_dir = Path(static_dir) if static_dir else None
        self.realtime = realtime
        self._events: list = []
        self._events_lock = threading.Lock()
        self._clients: list[_Client] = []
        self._clients_lock = threading.Lock()
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self.ticks_run = 0

    # Lifecycle ----------------------------------------------------------

    def start(self):
        self._listen_tcp()
        if self.http_port is not None:
            self._listen_http()
        tick_thread = threading.Thread(target=self._tick_loop, daemon=True)
        tick_thread.start()
        self._threads.append(tick_thread)

    def run_forever(self):
        self.start()
        try:
            while not self._stop.is_set():
                time.sleep(0.2)
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    def stop(self):
        self._stop.set()
        with self._clients_lock:
            for client in self._clients:
                client.stop()
        self.session.close()

    # Tick loop ------------------------------------------------------------

    def _tick_loop(self):
        dt = self.session.dt
        next_tick = time.monotonic()
        while not self._stop.is_set():
            with self._events_lock:
                events, self._events = self._events, []
            update = self.session.tick(events)
            line = encode_state(update.to_json())
            with self._clients_lock:
                clients = list(self._clients)
            for client in clients:
                if client.alive:
                    client.offer(line)
            self.ticks_run += 1
            if self.realtime:
                next_tick += dt
                delay = next_tick - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                else:
                    next_tick = time.monotonic()

    def _submit(self, line: str, client: _Client):
        try:
            event = decode_input(line)
        except ProtocolError as exc:
            client.offer(error_message(str(exc)))
            return
        with self._events_lock:
            self._events.append(event)

    def _register(self, client: _Client):
        with self._clients_lock:
            self._clients.append(client)

    def _unregister(self, client: _Client):
        client.stop()
        with self._clients_lock:
            if client in self._clients:
                self._clients.remove(client)

    # TCP line protocol ----------------------------------------------------

    def _listen_tcp(self):
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.host, self.port))
        listener.listen(8)
        listener.settimeout(0.2)
        self.port = listener.getsockname()[1]

        def accept_loop():
            while not self._stop.is_set():
                try:
                    conn, _ = listener.accept()
                except socket.timeout:
                    continue
                except OSError:
                    break
                thread = threading.Thread(target=self._tcp_session, args=(conn,), daemon=True)
                thread.start()
            listener.close()

        thread = threading.Thread(target=accept_loop, daemon=True)
        thread.start()
        self._threads.append(thread)

    def _tcp_session(self, conn: socket.socket):
        conn.settimeout(None)
        lock = threading.Lock()

        def send_line(line: str):
            with lock:
                conn.sendall(line.encode("utf-8") + b"\n")

        client = _Client(send_line, conn.close)
        self._register(client)
        buffer = b""
        try:
            while not self._stop.is_set():
                data = conn.recv(4096)
                if not data:
                    break
                buffer += data
                while b"\n" in buffer:
                    raw, buffer = buffer.split(b"\n", 1)
                    line = raw.decode("utf-8", errors="replace").strip()
                    if line:
                        self._submit(line, client)
        except OSError:
            pass
        finally:
            self._unregister(client)

    # HTTP + WebSocket gateway ----------------------------------------------

    def _listen_http(self):
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.host, self.http_port))
        listener.listen(8)
        listener.settimeout(0.2)
        self.http_port = listener.getsockname()[1]

        def accept_loop():
            while not self._stop.is_set():
                try:
                    conn, _ = listener.accept()
                except socket.timeout:
                    continue
                except OSError:
                    break
                thread = threading.Thread(target=self._http_session, args=(conn,), daemon=True)
                thread.start()
            listener.close()

        thread = threading.Thread(target=accept_loop, daemon=True)
        thread.start()
        self._threads.append(thread)

    def _http_session(self, conn: socket.socket):
        conn.settimeout(5.0)
        try:
            request = b""
            while b"\r\n\r\n" not in request:
                data = conn.recv(4096)
                if not data:
                    conn.close()
                    return
                request += data
            head = request.split(b"\r\n\r\n", 1)[0].decode("utf-8", errors="replace")
            lines = head.split("\r\n")
            method, path, _ = lines[0].split(" ", 2)
            headers = {}
            for line in lines[1:]:
                if ":" in line:
                    key, value = line.split(":", 1)
                    headers[key.strip().lower()] = value.strip()

            if headers.get("upgrade", "").lower() == "websocket":
                self._ws_session(conn, headers)
            elif method == "GET":
                self._serve_static(conn, path)
                conn.close()
            else:
                conn.sendall(b"HTTP/1.1 405 Method Not Allowed\r\nContent-Length: 0\r\n\r\n")
                conn.close()
        except (OSError, ValueError):
            conn.close()

    def _serve_static(self, conn: socket.socket, path: str):
        if self.static_dir is None:
            conn.sendall(b"HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\n\r\n")
            return
        name = path.split("?", 1)[0]
        if name in ("", "/"):
            name = "/index.html"
        target = (self.static_dir / name.lstrip("/")).resolve()
        root = self.static_dir.resolve()
        if root not in target.parents and target != root:
            conn.sendall(b"HTTP/1.1 403 Forbidden\r\nContent-Length: 0\r\n\r\n")
            return
        if not target.is_file():
            conn.sendall(b"HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\n\r\n")
            return
        body = target.read_bytes()
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        head = (
            f"HTTP/1.1 200 OK\r\nContent-Type: {ctype}\r\n"
            f"Content-Length: {len(body)}\r\nCache-Control: no-cache\r\n\r\n"
        )
        conn.sendall(head.encode("ascii") + body)

    def _ws_session(self, conn: socket.socket, headers: dict[str, str]):
        key = headers.get("sec-websocket-key", "")
        accept = base64.b64encode(
            hashlib.sha1((key + WS_GUID).encode("ascii")).digest()
        ).decode("ascii")
        conn.sendall(
            (
                "HTTP/1.1 101 Switching Protocols\r\n"
                "Upgrade: websocket\r\nConnection: Upgrade\r\n"
                f"Sec-WebSocket-Accept: {accept}\r\n\r\n"
            ).encode("ascii")
        )
        conn.settimeout(None)
        lock = threading.Lock()

        def send_line(line: str):
            with lock:
                conn.sendall(ws_encode_text(line))

        client = _Client(send_line, conn.close)
        self._register(client)
        try:
            buffer = b""
            while not self._stop.is_set():
                frame, buffer = ws_read_frame(conn, buffer)
                if frame is None:
                    break
                opcode, payload = frame
                if opcode == 0x8:  # close
                    with lock:
                        conn.sendall(b"\x88\x00")
                    break
                if opcode == 0x9:  # ping
                    with lock:
                        conn.sendall(b"\x8a" + bytes([len(payload)]) + payload)
                    continue
                if opcode in (0x1, 0x2):
                    for line in payload.decode("utf-8", errors="replace").splitlines():
                        if line.strip():
                            self._submit(line.strip(), client)
        except OSError:
            pass
        finally:
            self._unregister(client)


def ws_encode_text(text: str) -> bytes:
    payload = text.encode("utf-8")
    length = len(payload)
    if length < 126:
        header = bytes([0x81, length])
    elif length < 1 << 16:
        header = bytes([0x81, 126]) + length.to_bytes(2, "big")
    else:
        header = bytes([0x81, 127]) + length.to_bytes(8, "big")
    return header + payload


def ws_read_frame(conn: socket.socket, buffer: bytes) -> tuple[tuple[int, bytes] | None, bytes]:
    """Read one client frame (masked per RFC 6455); returns (frame, rest)."""

    def need(n: int, buf: bytes) -> bytes | None:
        while len(buf) < n:
            data = conn.recv(4096)
            if not data:
                return None
            buf += data
        return buf

    buffer = need(2, buffer)
    if buffer is None:
        return None, b""
    opcode = buffer[0] & 0x0F
    masked = bool(buffer[1] & 0x80)
    length = buffer[1] & 0x7F
    offset = 2
    if length == 126:
        buffer = need(4, buffer)
        if buffer is None:
            return None, b""
        length = int.from_bytes(buffer[2:4], "big")
        offset = 4
    elif length == 127:
        buffer = need(10, buffer)
        if buffer is None:
            return None, b""
        length = int.from_bytes(buffer[2:10], "big")
        offset = 10
    mask = b""
    if masked:
        buffer = need(offset + 4, buffer)
        if buffer is None:
            return None, b""
        mask = buffer[offset:offset + 4]
        offset += 4
    buffer = need(offset + length, buffer)
    if buffer is None:
        return None, b""
    payload = buffer[offset:offset + length]
    rest = buffer[offset + length:]
    if masked:
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return (opcode, payload), rest


def ws_encode_client_text(text: str, mask: bytes = b"\x12\x34\x56\x78") -> bytes:
    """Masked client-side text frame; used by tests and tooling."""
    payload = text.encode("utf-8")
    masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    length = len(payload)
    if length < 126:
        header = bytes([0x81, 0x80 | length])
    elif length < 1 << 16:
        header = bytes([0x81, 0x80 | 126]) + length.to_bytes(2, "big")
    else:
        header = bytes([0x81, 0x80 | 127]) + length.to_bytes(8, "big")
    return header + mask + masked
