"""Mock determinism laws, embedder geometry, and the HTTP transport."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from random import Random

import numpy as np
import pytest

from irollan.backends import (
    BackendConfig,
    BackendError,
    HttpBackend,
    MockBackend,
    embed_row,
    field_from_clauses,
    make_backend,
    observation_clauses,
)


@pytest.fixture
def mock() -> MockBackend:
    return MockBackend(BackendConfig(mode="mock", seed=42))


class TestMockEmbed:
    def test_deterministic(self, mock):
        a = mock.embed("a door to LL's Home")
        b = mock.embed("a door to LL's Home")
        assert np.array_equal(a, b)

    def test_unit_norm(self, mock):
        rng = Random(1)
        for _ in range(100):
            text = " ".join(f"w{rng.randint(0, 50)}" for _ in range(rng.randint(1, 8)))
            assert np.linalg.norm(mock.embed(text)) == pytest.approx(1.0, abs=1e-12)

    def test_distinct_texts_not_parallel(self, mock):
        rng = Random(2)
        texts = [f"unique token stream {i} {rng.random()}" for i in range(1000)]
        vectors = [mock.embed(t) for t in texts]
        for i in range(0, 1000, 7):
            for j in range(i + 1, min(i + 5, 1000)):
                cos = float(np.dot(vectors[i], vectors[j]))
                assert cos < 1.0 - 1e-9

    def test_shared_tokens_raise_cosine_on_average(self, mock):
        # Hash-bag embeddings are noisy pair to pair; the overlap signal
        # must dominate in expectation.
        rng = Random(5)
        shared, disjoint = [], []
        for i in range(300):
            common = f"anchor{i}"
            a = mock.embed(f"{common} left{i} extra{i}")
            b = mock.embed(f"{common} right{i} other{i}")
            c = mock.embed(f"alpha{i} beta{i} gamma{i}")
            shared.append(float(np.dot(a, b)))
            disjoint.append(float(np.dot(a, c)))
        assert np.mean(shared) > np.mean(disjoint) + 0.1

    def test_empty_text_rejected(self, mock):
        with pytest.raises(BackendError):
            mock.embed("")

    def test_seed_changes_vectors(self):
        a = MockBackend(BackendConfig(seed=1)).embed("same text")
        b = MockBackend(BackendConfig(seed=2)).embed("same text")
        assert not np.allclose(a, b)


class TestMockLaws:
    def test_score_law_range_and_determinism(self, mock):
        for i in range(200):
            prompt = f"Your task is to: test {i}."
            value = float(mock.score(prompt))
            assert value in (1.0, 2.0, 3.0, 4.0, 5.0)
            assert mock.score(prompt) == mock.score(prompt)

    def test_rank_law_balance_desc_id_asc(self, mock):
        prompt = (
            "Rank the agents from most to least conducive to the scene.\n"
            "Topic: 0.0\nAgents:\n"
            "- id: AY | balance: 1 | action: x | goal: g\n"
            "- id: LL | balance: 3 | action: x | goal: g\n"
            "- id: MD | balance: 1 | action: x | goal: g\n"
            "Reply with the agent ids, most conducive first, comma-separated."
        )
        assert mock.rank(prompt, ["AY", "LL", "MD"]) == "LL, AY, MD"

    def test_generate_law_first_candidate(self, mock):
        prompt = "Actions you may take: go to outside, use table 2\nReply in two lines:"
        reply = mock.generate(prompt)
        assert "Action: go to outside" in reply
        assert "Thought: I will go to outside." in reply

    def test_generate_fills_chat_content(self, mock):
        prompt = "Actions you may take: chat with SG, use table 2"
        reply = mock.generate(prompt)
        assert 'Action: chat with SG: "Hello SG, how are things going?"' in reply


class TestEmbedRow:
    def test_gamma_is_token_novelty(self, mock):
        context = {"a", "door", "to", "outside"}
        row_known = embed_row(mock, "a door to outside", context)
        row_novel = embed_row(mock, "shimmering portal vision", context)
        assert row_known.position.gamma == 0.0
        assert row_novel.position.gamma == 1.0
        half = embed_row(mock, "a door to elsewhere", context)
        assert half.position.gamma == pytest.approx(0.25, abs=1e-12)

    def test_angles_deterministic_and_in_range(self, mock):
        import math

        rng = Random(3)
        for i in range(200):
            text = f"clause {i} {rng.random()}"
            row1 = embed_row(mock, text, set())
            row2 = embed_row(mock, text, set())
            assert row1.position == row2.position
            assert 0.0 <= row1.position.theta <= math.pi
            assert 0.0 <= row1.position.phi < 2.0 * math.pi

    def test_field_from_clauses_skips_blanks(self, mock):
        field = field_from_clauses(mock, ["You are in outside", "", "the table 2"], set())
        assert len(field) == 2


class TestObservationClauses:
    def test_splits_listing_into_elements(self):
        text = (
            "You are in outside. Looking around you, you see a door to AY's Home, "
            "a door to WM's Home, and the table 2. You are moving."
        )
        clauses = observation_clauses(text)
        assert clauses == [
            "You are in outside",
            "a door to AY's Home",
            "a door to WM's Home",
            "the table 2",
            "You are moving",
        ]

    def test_chat_sentence_survives_with_interior_periods(self):
        text = 'You are in outside. SG says to you: "Take it. Hold it. Go.".'
        clauses = observation_clauses(text)
        assert clauses[-1] == 'SG says to you: "Take it. Hold it. Go."'


class _StubHandler(BaseHTTPRequestHandler):
    fail_times = 0
    replies: list[str] = []
    calls = 0

    def do_POST(self):
        cls = type(self)
        cls.calls += 1
        length = int(self.headers["Content-Length"])
        body = json.loads(self.rfile.read(length))
        assert "model" in body and "messages" in body
        if cls.calls <= cls.fail_times:
            self.send_response(500)
            self.end_headers()
            return
        reply = cls.replies[min(cls.calls - cls.fail_times - 1, len(cls.replies) - 1)]
        payload = json.dumps({"content": reply}).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):  # silence test output
        pass


@pytest.fixture
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _StubHandler.calls = 0
    _StubHandler.fail_times = 0
    _StubHandler.replies = ["ok"]
    yield f"http://127.0.0.1:{server.server_address[1]}/"
    server.shutdown()
    server.server_close()


class TestHttpBackend:
    def test_round_trip(self, stub_server):
        _StubHandler.replies = ["4"]
        backend = HttpBackend(BackendConfig(mode="http", endpoint=stub_server))
        assert backend.score("prompt") == "4"

    def test_retries_then_succeeds(self, stub_server):
        _StubHandler.fail_times = 2
        _StubHandler.replies = ["recovered"]
        backend = HttpBackend(BackendConfig(mode="http", endpoint=stub_server, max_retries=2))
        assert backend.generate("prompt") == "recovered"

    def test_exhausted_retries_raise(self, stub_server):
        _StubHandler.fail_times = 10
        backend = HttpBackend(BackendConfig(mode="http", endpoint=stub_server, max_retries=1, timeout=2))
        with pytest.raises(BackendError):
            backend.rank("prompt", ["AY"])

    def test_embed_parses_vector(self, stub_server):
        _StubHandler.replies = [json.dumps([1.0] * 16)]
        backend = HttpBackend(BackendConfig(mode="http", endpoint=stub_server, embed_dim=16))
        vector = backend.embed("text")
        assert vector.shape == (16,)
        assert np.linalg.norm(vector) == pytest.approx(1.0, abs=1e-12)

    def test_embed_rejects_bad_shape(self, stub_server):
        _StubHandler.replies = [json.dumps([1.0, 2.0])]
        backend = HttpBackend(BackendConfig(mode="http", endpoint=stub_server, embed_dim=16))
        with pytest.raises(BackendError):
            backend.embed("text")

    def test_http_mode_requires_endpoint(self):
        with pytest.raises(ValueError):
            BackendConfig(mode="http")

    def test_factory_dispatch(self, stub_server):
        assert isinstance(make_backend(BackendConfig(mode="mock")), MockBackend)
        assert isinstance(make_backend(BackendConfig(mode="http", endpoint=stub_server)), HttpBackend)


class TestEnvOverrides:
    def test_endpoint_env_var_wins(self, monkeypatch, stub_server):
        _StubHandler.replies = ["from-env"]
        monkeypatch.setenv("IROLLAN_ENDPOINT", stub_server)
        backend = HttpBackend(BackendConfig(mode="http", endpoint="http://unused.invalid/"))
        assert backend.endpoint == stub_server
        assert backend.generate("x") == "from-env"

    def test_api_key_header_sent(self, monkeypatch, stub_server):
        seen = {}
        original = _StubHandler.do_POST

        def spy(self):
            seen["auth"] = self.headers.get("Authorization")
            original(self)

        monkeypatch.setattr(_StubHandler, "do_POST", spy)
        monkeypatch.setenv("IROLLAN_API_KEY", "secret-token")
        backend = HttpBackend(BackendConfig(mode="http", endpoint=stub_server))
        backend.score("x")
        assert seen["auth"] == "Bearer secret-token"
