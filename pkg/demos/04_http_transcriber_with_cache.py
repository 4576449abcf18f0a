"""
Wrapping a remote recognizer
============================

Any recognizer behind an HTTP shim works: the audio is POSTed as WAV and a
JSON object with a "transcript" field comes back. A JSON-lines cache keeps
repeated runs from paying for the same perturbation twice.
"""

import json
import os
import tempfile
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from audioexplain import HttpTranscriber, TranscriptionCache, explain, read_wav
from audioexplain.testkit import ToyAsrSpec, ToyTranscriber, ToyWord, synth_audio

spec = ToyAsrSpec((ToyWord("open", 0, 4), ToyWord("the", 5, 6), ToyWord("door", 7, 12)), rho=0.5)
backend = ToyTranscriber(spec)
hits = []


class Shim(BaseHTTPRequestHandler):
    def do_POST(self):
        audio = read_wav(self.rfile.read(int(self.headers["Content-Length"])))
        hits.append(1)
        body = json.dumps({"transcript": backend.transcribe(audio).raw}).encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


server = ThreadingHTTPServer(("127.0.0.1", 0), Shim)
threading.Thread(target=server.serve_forever, daemon=True).start()
url = f"http://127.0.0.1:{server.server_address[1]}/transcribe"

audio = synth_audio(spec, 12)
cache_path = os.path.join(tempfile.mkdtemp(), "cache.jsonl")
for attempt in range(2):
    before = len(hits)
    e = explain(HttpTranscriber(url), audio, "sfl", cache=TranscriptionCache(cache_path), seed=1)
    print(f"run {attempt}: frames {sorted(e.frames)}, requests sent {len(hits) - before}")
server.shutdown()
