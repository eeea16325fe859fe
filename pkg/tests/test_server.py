import base64
import hashlib
import json
import socket
import time

import pytest

from admc.server import SessionServer, WS_GUID, ws_encode_client_text, ws_read_frame
from admc.session import ControlScheme, Session, SessionConfig


@pytest.fixture
def server(tmp_path):
    static = tmp_path / "static"
    static.mkdir()
    (static / "index.html").write_text("<html>cockpit</html>")
    session = Session(SessionConfig(seed=7, scheme=ControlScheme.ADMC_CONTINUOUS))
    srv = SessionServer(session, port=0, http_port=0, static_dir=static)
    srv.start()
    # The listeners rebind to ephemeral ports synchronously in start().
    yield srv
    srv.stop()


def recv_lines(sock, count=1, timeout=5.0):
    sock.settimeout(timeout)
    buffer = b""
    lines = []
    while len(lines) < count:
        data = sock.recv(4096)
        if not data:
            break
        buffer += data
        while b"\n" in buffer:
            raw, buffer = buffer.split(b"\n", 1)
            if raw.strip():
                lines.append(json.loads(raw))
    return lines


class TestTcpProtocol:
    def test_state_stream_and_input_round_trip(self, server):
        with socket.create_connection(("127.0.0.1", server.port), timeout=5) as sock:
            first = recv_lines(sock, 1)[0]
            assert first["kind"] == "state"
            start_x = first["arm"]["pose"]["p"][0]
            sock.sendall(b'{"kind":"axis","values":[1.0]}\n')
            time.sleep(0.3)
            later = recv_lines(sock, 1)[0]
            assert later["arm"]["pose"]["p"][0] != start_x

    def test_malformed_message_rejected_per_message(self, server):
        with socket.create_connection(("127.0.0.1", server.port), timeout=5) as sock:
            sock.sendall(b'this is not json\n')
            found_error = False
            deadline = time.time() + 5
            while time.time() < deadline and not found_error:
                for message in recv_lines(sock, 5):
                    if message.get("kind") == "error":
                        found_error = True
            assert found_error

    def test_input_to_visible_effect_within_two_ticks(self, server):
        with socket.create_connection(("127.0.0.1", server.port), timeout=5) as sock:
            first = recv_lines(sock, 1)[0]
            sent_at_tick = first["tick"]
            sock.sendall(b'{"kind":"axis","values":[1.0]}\n')
            moved_tick = None
            x0 = first["arm"]["pose"]["p"][0]
            deadline = time.time() + 5
            while moved_tick is None and time.time() < deadline:
                for message in recv_lines(sock, 3):
                    if message.get("kind") == "state" and message["arm"]["pose"]["p"][0] != x0:
                        moved_tick = message["tick"]
                        break
            assert moved_tick is not None
            # Allow the tick in flight plus the one that consumed the event.
            assert moved_tick - sent_at_tick <= 3


class TestHttpGateway:
    def test_static_file_served(self, server):
        with socket.create_connection(("127.0.0.1", server.http_port), timeout=5) as sock:
            sock.sendall(b"GET / HTTP/1.1\r\nHost: x\r\n\r\n")
            sock.settimeout(5)
            data = b""
            while b"cockpit" not in data:
                chunk = sock.recv(4096)
                if not chunk:
                    break
                data += chunk
            assert b"200 OK" in data
            assert b"cockpit" in data

    def test_missing_file_404(self, server):
        with socket.create_connection(("127.0.0.1", server.http_port), timeout=5) as sock:
            sock.sendall(b"GET /nope.js HTTP/1.1\r\nHost: x\r\n\r\n")
            sock.settimeout(5)
            assert b"404" in sock.recv(4096)

    def test_websocket_upgrade_and_stream(self, server):
        key = base64.b64encode(b"0123456789abcdef").decode()
        request = (
            f"GET /ws HTTP/1.1\r\nHost: x\r\nUpgrade: websocket\r\n"
            f"Connection: Upgrade\r\nSec-WebSocket-Key: {key}\r\n"
            f"Sec-WebSocket-Version: 13\r\n\r\n"
        )
        with socket.create_connection(("127.0.0.1", server.http_port), timeout=5) as sock:
            sock.sendall(request.encode())
            sock.settimeout(5)
            response = b""
            while b"\r\n\r\n" not in response:
                response += sock.recv(4096)
            head, rest = response.split(b"\r\n\r\n", 1)
            assert b"101" in head
            expected = base64.b64encode(
                hashlib.sha1((key + WS_GUID).encode()).digest()
            ).decode()
            assert expected.encode() in head

            frame, rest = ws_read_frame(sock, rest)
            assert frame is not None
            opcode, payload = frame
            assert opcode == 0x1
            state = json.loads(payload)
            assert state["kind"] == "state"

            # Drive the arm through the websocket path too.
            x0 = state["arm"]["pose"]["p"][0]
            sock.sendall(ws_encode_client_text('{"kind":"axis","values":[1.0]}'))
            moved = False
            deadline = time.time() + 5
            while not moved and time.time() < deadline:
                frame, rest = ws_read_frame(sock, rest)
                if frame is None:
                    break
                _, payload = frame
                message = json.loads(payload)
                if message.get("kind") == "state" and message["arm"]["pose"]["p"][0] != x0:
                    moved = True
            assert moved
