import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from companysim.errors import (
    RemoteProtocolError,
    RemoteStatusError,
    RemoteTransportError,
)
from companysim.providers import RemoteProvider, remote_embed
from companysim.textprep import TokenSequence


def vector_for(text):
    """Deterministic per-text stub embedding, independent of batch order."""
    return [float(len(text)), float(ord(text[0])), float(sum(map(ord, text)) % 97)]


class _StubHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        self.server.log.append({
            "path": self.path,
            "auth": self.headers.get("Authorization"),
            "body": body,
        })
        action = self.server.script.pop(0) if self.server.script else ("ok",)
        kind = action[0]
        if kind == "status":
            self.send_response(action[1])
            self.end_headers()
            return
        if kind == "sleep":
            time.sleep(action[1])
            kind = "ok"
        if kind == "raw":
            payload = action[1]
        elif kind == "ok":
            vectors = [vector_for(t) for t in body.get("texts", [])]
            payload = json.dumps({"dimension": 3, "embeddings": vectors}).encode()
        else:
            raise AssertionError(f"unknown stub action {kind}")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


class _QuietServer(ThreadingHTTPServer):
    daemon_threads = True

    def handle_error(self, request, client_address):
        # timed-out clients hang up mid-response; not a test failure
        pass


class Stub:
    def __init__(self):
        self.server = _QuietServer(("127.0.0.1", 0), _StubHandler)
        self.server.script = []
        self.server.log = []
        self.thread = threading.Thread(
            target=self.server.serve_forever, kwargs={"poll_interval": 0.02},
            daemon=True)
        self.thread.start()
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}"

    @property
    def log(self):
        return self.server.log

    def script(self, *actions):
        self.server.script = list(actions)

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def stub():
    s = Stub()
    yield s
    s.close()


def test_vectors_returned_in_request_order(stub):
    texts = ["gamma processing", "al", "zeta zeta zeta", "beta"]
    vectors = remote_embed(stub.url, "stub-model", texts)
    assert len(vectors) == len(texts)
    for text, vec in zip(texts, vectors):
        assert vec.tolist() == vector_for(text)
    sent = stub.log[0]["body"]
    assert sent == {"provider_id": "stub-model", "texts": texts}
    assert stub.log[0]["path"] == "/embed"


def test_count_mismatch_raises_immediately(stub):
    payload = json.dumps({"dimension": 3,
                          "embeddings": [vector_for("a")]}).encode()
    stub.script(("raw", payload))
    with pytest.raises(RemoteProtocolError) as exc:
        remote_embed(stub.url, "m", ["a", "b"], retries=3, backoff=0.01)
    assert exc.value.reason == "count_mismatch"
    assert len(stub.log) == 1  # no retry on protocol errors


def test_per_row_dimension_mismatch(stub):
    payload = json.dumps({"dimension": 3,
                          "embeddings": [[1.0, 2.0], [1.0, 2.0, 3.0]]}).encode()
    stub.script(("raw", payload))
    with pytest.raises(RemoteProtocolError) as exc:
        remote_embed(stub.url, "m", ["a", "b"])
    assert exc.value.reason == "dimension_mismatch"


@pytest.mark.parametrize("payload", [
    b"this is not json",
    json.dumps({"embeddings": [[1.0]]}).encode(),
    json.dumps({"dimension": "three", "embeddings": [[1.0]]}).encode(),
    json.dumps({"dimension": 1, "embeddings": [[float("nan")]]}).encode(),
])
def test_malformed_bodies(stub, payload):
    stub.script(("raw", payload))
    with pytest.raises(RemoteProtocolError) as exc:
        remote_embed(stub.url, "m", ["a"])
    assert exc.value.reason == "malformed_body"


def test_retry_then_success_on_server_error(stub):
    stub.script(("status", 500), ("ok",))
    vectors = remote_embed(stub.url, "m", ["hello"], retries=2, backoff=0.01)
    assert vectors[0].tolist() == vector_for("hello")
    assert len(stub.log) == 2


def test_status_error_after_exhausted_retries(stub):
    stub.script(("status", 503), ("status", 503), ("status", 503))
    with pytest.raises(RemoteStatusError) as exc:
        remote_embed(stub.url, "m", ["a"], retries=2, backoff=0.01)
    assert exc.value.status == 503
    assert len(stub.log) == 3  # initial try plus two retries


def test_timeout_becomes_transport_error(stub):
    stub.script(("sleep", 2.0), ("sleep", 2.0))
    with pytest.raises(RemoteTransportError):
        remote_embed(stub.url, "m", ["a"], timeout=0.2, retries=1, backoff=0.01)


def test_connection_refused_becomes_transport_error():
    with pytest.raises(RemoteTransportError):
        remote_embed("http://127.0.0.1:9", "m", ["a"], timeout=0.2,
                     retries=0, backoff=0.01)


def test_auth_header_from_environment(stub, monkeypatch):
    monkeypatch.setenv("STUB_EMBED_TOKEN", "sekrit")
    remote_embed(stub.url, "m", ["a"], auth_env="STUB_EMBED_TOKEN")
    assert stub.log[0]["auth"] == "Bearer sekrit"
    monkeypatch.delenv("STUB_EMBED_TOKEN")
    remote_embed(stub.url, "m", ["a"], auth_env="STUB_EMBED_TOKEN")
    assert stub.log[1]["auth"] is None


def test_empty_text_list_rejected(stub):
    with pytest.raises(ValueError):
        remote_embed(stub.url, "m", [])


def test_remote_provider_embeds_chunks(stub):
    provider = RemoteProvider(stub.url, "stub-model", dimension=3)
    chunks = [TokenSequence(["alpha", "beta"], "d1"),
              TokenSequence(["gamma"], "d1")]
    out = provider.embed_chunks(chunks)
    assert out.shape == (2, 3)
    assert out[0].tolist() == vector_for("alpha beta")
    assert out[1].tolist() == vector_for("gamma")


def test_remote_provider_checks_declared_dimension(stub):
    provider = RemoteProvider(stub.url, "stub-model", dimension=7)
    with pytest.raises(RemoteProtocolError) as exc:
        provider.embed_chunks([TokenSequence(["alpha"], "d1")])
    assert exc.value.reason == "dimension_mismatch"
