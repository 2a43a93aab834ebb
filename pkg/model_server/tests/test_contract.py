"""Wire-protocol contract tests shared with the engine's HTTP clients."""

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from model_server.app import create_app
from model_server.backends import (
    HashEmbedBackend,
    ModelBinding,
    ModelLoadError,
    OverlapRerankBackend,
)

# the same request/response fixtures the engine's HTTP provider clients
# are tested against
FIXTURE_DIR = Path(__file__).parents[2] / "tests" / "fixtures" / "wire_protocol"


def load_fixture(name: str) -> dict:
    return json.loads((FIXTURE_DIR / name).read_text())


@pytest.fixture(scope="module")
def builtin_client():
    bindings = {
        "chat": ModelBinding(kind="chat", model_id="echo"),
        "embed": ModelBinding(kind="embed", model_id="hash:16"),
        "rerank": ModelBinding(kind="rerank", model_id="overlap"),
    }
    return TestClient(create_app(bindings))


class TestWireFixtures:
    """Every client-side fixture request is accepted and answered in-schema."""

    def test_chat_fixture_schema(self, builtin_client):
        fixture = load_fixture("chat.json")
        resp = builtin_client.post(fixture["route"], json=fixture["request"])
        assert resp.status_code == 200
        body = resp.json()
        assert set(body) == set(fixture["response"]) == {"text"}
        assert isinstance(body["text"], str)

    def test_embed_fixture_schema(self, builtin_client):
        fixture = load_fixture("embed.json")
        resp = builtin_client.post(fixture["route"], json=fixture["request"])
        assert resp.status_code == 200
        body = resp.json()
        assert set(body) == set(fixture["response"]) == {"vectors"}
        vectors = body["vectors"]
        assert len(vectors) == len(fixture["request"]["texts"])
        assert len({len(v) for v in vectors}) == 1
        assert all(isinstance(x, float) for v in vectors for x in v)

    def test_rerank_fixture_schema(self, builtin_client):
        fixture = load_fixture("rerank.json")
        resp = builtin_client.post(fixture["route"], json=fixture["request"])
        assert resp.status_code == 200
        body = resp.json()
        assert set(body) == set(fixture["response"]) == {"scores"}
        assert len(body["scores"]) == len(fixture["request"]["documents"])
        assert all(isinstance(s, (int, float)) for s in body["scores"])

    def test_error_body_shape_matches_fixture(self, builtin_client):
        fixture = load_fixture("error.json")
        # a malformed request must produce the same {"error": ...} shape the
        # client parses for non-200 responses
        resp = builtin_client.post(fixture["route"], json={"model": "m"})
        assert resp.status_code == 400
        assert set(resp.json()) == set(fixture["response"]) == {"error"}


class TestBuiltinBackends:
    def test_healthz_reports_models_and_dim(self, builtin_client):
        body = builtin_client.get("/healthz").json()
        assert body["status"] == "ok"
        assert body["embed_dim"] == 16
        assert body["models"]["embed"] == "hash:16"

    def test_hash_embed_deterministic(self):
        backend = HashEmbedBackend(dim=8)
        assert backend.embed(["x"]) == backend.embed(["x"])

    def test_overlap_scores(self):
        backend = OverlapRerankBackend()
        assert backend.score("a b", ["a b", "a c", "z"]) == [2.0, 1.0, 0.0]

    def test_empty_texts_rejected_400(self, builtin_client):
        resp = builtin_client.post("/v1/embed", json={"model": "m", "texts": []})
        assert resp.status_code == 400
        assert "error" in resp.json()

    def test_unbound_route_404(self):
        client = TestClient(
            create_app({"embed": ModelBinding(kind="embed", model_id="hash:4")})
        )
        resp = client.post("/v1/chat", json={"model": "m", "prompt": "p"})
        assert resp.status_code == 404
        assert "error" in resp.json()

    def test_bad_binding_aborts_startup(self):
        with pytest.raises(ModelLoadError):
            create_app({"embed": ModelBinding(kind="embed", model_id="hash:0")})


class TestRealModels:
    """Small real transformer checkpoints behind the same routes."""

    def test_embed_arity_and_dimension(self, tiny_embed_model):
        bindings = {
            "embed": ModelBinding(kind="embed", model_id=tiny_embed_model, max_batch_size=2)
        }
        client = TestClient(create_app(bindings))
        health = client.get("/healthz").json()
        assert health["embed_dim"] == 32

        texts = ["the food safety act", "penalty article", "court law", "act", "food"]
        resp = client.post("/v1/embed", json={"model": "tiny", "texts": texts})
        assert resp.status_code == 200
        vectors = resp.json()["vectors"]
        assert len(vectors) == len(texts)  # batching (size 2) preserves arity
        assert all(len(v) == 32 for v in vectors)

        # real inference is deterministic for equal inputs
        again = client.post("/v1/embed", json={"model": "tiny", "texts": texts[:1]})
        assert again.json()["vectors"][0] == pytest.approx(vectors[0], abs=1e-5)

    def test_rerank_arity(self, tiny_rerank_model):
        bindings = {
            "rerank": ModelBinding(kind="rerank", model_id=tiny_rerank_model, max_batch_size=2)
        }
        client = TestClient(create_app(bindings))
        resp = client.post(
            "/v1/rerank",
            json={
                "model": "tiny",
                "query": "food safety",
                "documents": ["the act", "penalty law", "court"],
            },
        )
        assert resp.status_code == 200
        scores = resp.json()["scores"]
        assert len(scores) == 3
        assert all(isinstance(s, float) for s in scores)

    def test_engine_client_against_real_model(self, tiny_embed_model):
        """The engine's own HTTP client parses this server's responses."""
        lexsearch_providers = pytest.importorskip("lexsearch.providers")
        import httpx

        app = create_app(
            {"embed": ModelBinding(kind="embed", model_id=tiny_embed_model)}
        )
        server = TestClient(app)

        def forward(request: httpx.Request) -> httpx.Response:
            resp = server.post(
                request.url.path,
                content=request.content,
                headers={"content-type": "application/json"},
            )
            return httpx.Response(resp.status_code, content=resp.content)

        config = lexsearch_providers.ProviderConfig(
            kind="embed", endpoint="http://server.test", model="tiny", max_retries=0
        )
        provider = lexsearch_providers.HttpEmbeddingProvider(
            config, transport=httpx.MockTransport(forward)
        )
        vectors = provider.embed(["food safety act", "court"])
        assert len(vectors) == 2
        assert all(len(v) == 32 for v in vectors)
