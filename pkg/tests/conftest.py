import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from audioexplain.audio import read_wav
from audioexplain.testkit import ToyAsrSpec, ToyTranscriber, ToyWord, synth_audio


class FakeAsr:
    """Local HTTP endpoint; ``behaviour`` decides the reply to each POST."""

    def __init__(self):
        self.requests = []
        self.behaviour = lambda body, headers: (200, {"transcript": "hello"})
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                body = self.rfile.read(int(self.headers["Content-Length"]))
                outer.requests.append((dict(self.headers), body))
                status, payload = outer.behaviour(body, self.headers)
                raw = payload if isinstance(payload, bytes) else json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(raw)))
                self.end_headers()
                self.wfile.write(raw)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}/asr"
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    def serve_toy(self, transcriber: ToyTranscriber):
        def reply(body, headers):
            return 200, {"transcript": transcriber.transcribe(read_wav(body)).raw}

        self.behaviour = reply

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def fake_asr():
    srv = FakeAsr()
    yield srv
    srv.close()


@pytest.fixture
def one_word():
    """One word spanning all 4 frames, heard when at least half of them are present."""
    spec = ToyAsrSpec((ToyWord("apple", 0, 4),), 0.5)
    return spec, synth_audio(spec, 4, frame_length=8), 8


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
