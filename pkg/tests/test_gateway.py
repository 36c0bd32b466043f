"""Gateway contracts: validation, preservation, chat repair, HTTP transport."""

import json

import httpx
import numpy as np
import pytest

from scenedit.errors import (BackendError, ConfigError, EditLeakage,
                             MalformedLLMOutput, ProtocolViolation)
from scenedit.gateway import (ChatRequest, EmbedRequest, EmbedVector,
                              ServiceClients, load_backend_config, text_message)
from scenedit.gateway.clients import (HttpDepthEstimator, HttpSegmenter,
                                      HttpTransport)
from scenedit.gateway.config import BackendConfig, ServiceConfig
from scenedit.gateway.mocks import (FillInpainter, FixtureEmbedder,
                                    FixtureSegmenter, IdentityInpainter,
                                    LeakyInpainter, ScriptedChat)
from scenedit.gateway.protocol import depth_from_wire, detection_from_wire
from scenedit.masks import BinaryMask

from conftest import two_object_backends


def image_8():
    return np.full((8, 8, 3), 7, np.uint8)


def center_mask():
    arr = np.zeros((8, 8), bool)
    arr[2:6, 2:6] = True
    return BinaryMask.from_array(arr)


class TestWireValidation:
    def test_box_exceeding_bounds(self):
        body = {"box": {"x_min": 0, "y_min": 0, "x_max": 9, "y_max": 3},
                "label": "cat", "score": 0.5}
        with pytest.raises(ProtocolViolation):
            detection_from_wire(body, (8, 8))

    def test_depth_out_of_range(self):
        body = {"width": 2, "height": 1, "values": [0.5, 1.2]}
        with pytest.raises(ProtocolViolation):
            depth_from_wire(body, (2, 1))

    def test_depth_wrong_count(self):
        body = {"width": 2, "height": 2, "values": [0.5]}
        with pytest.raises(ProtocolViolation):
            depth_from_wire(body, (2, 2))

    def test_score_out_of_range(self):
        body = {"box": {"x_min": 0, "y_min": 0, "x_max": 1, "y_max": 1},
                "label": "cat", "score": 1.5}
        with pytest.raises(ProtocolViolation):
            detection_from_wire(body, (8, 8))

    def test_segment_mask_dims_checked(self):
        clients = ServiceClients(segmenter=FixtureSegmenter(
            [BinaryMask.from_array(np.ones((4, 4)))]))
        with pytest.raises(ProtocolViolation):
            clients.segment(image_8())


class TestInpaintContract:
    def test_identity_backend(self):
        clients = ServiceClients(inpainter=IdentityInpainter())
        out = clients.inpaint(image_8(), center_mask(), "whatever")
        assert (out == image_8()).all()

    def test_fill_preserves_outside(self):
        clients = ServiceClients(inpainter=FillInpainter((9, 9, 9)))
        image = image_8()
        mask = center_mask()
        out = clients.inpaint(image, mask, "fill")
        outside = ~mask.to_array()
        assert (out[outside] == image[outside]).all()
        assert (out[mask.to_array()] == 9).all()

    def test_leak_raises_in_strict_mode(self):
        clients = ServiceClients(inpainter=LeakyInpainter())
        with pytest.raises(EditLeakage):
            clients.inpaint(image_8(), center_mask(), "leak")

    def test_lenient_mode_tolerates_small_drift(self):
        class Drift:
            def inpaint(self, image, mask, prompt, seed=None):
                out = np.array(image, copy=True)
                out[mask.to_array()] = 200
                return np.clip(out.astype(np.int16) + 2, 0, 255).astype(np.uint8)

        clients = ServiceClients(inpainter=Drift(), preservation="lenient",
                                 preservation_tolerance=2)
        out = clients.inpaint(image_8(), center_mask(), "drift")
        assert out is not None
        tight = ServiceClients(inpainter=Drift(), preservation="lenient",
                                        preservation_tolerance=1)
        with pytest.raises(EditLeakage):
            tight.inpaint(image_8(), center_mask(), "drift")


class TestChatGateway:
    def test_valid_reply_passes(self):
        chat = ScriptedChat({"sufficiency": [json.dumps({"need": "none"})]})
        clients = ServiceClients(chat_backend=chat)
        response = clients.chat(ChatRequest(
            messages=(text_message("user", "assess"),), schema_name="sufficiency"))
        assert response.payload == {"need": "none"}

    def test_repair_retry_then_success(self):
        chat = ScriptedChat({"sufficiency": [
            "the scene looks fine to me",
            json.dumps({"need": "none"}),
        ]})
        clients = ServiceClients(chat_backend=chat)
        response = clients.chat(ChatRequest(
            messages=(text_message("user", "assess"),), schema_name="sufficiency"))
        assert response.payload == {"need": "none"}
        assert len(chat.calls) == 2
        # the repair request keeps the conversation and adds the bad reply
        assert chat.calls[1].messages[-1].text().startswith("Your previous reply")

    def test_prose_twice_is_malformed(self):
        chat = ScriptedChat({"sufficiency": ["prose", "more prose"]})
        clients = ServiceClients(chat_backend=chat)
        with pytest.raises(MalformedLLMOutput):
            clients.chat(ChatRequest(
                messages=(text_message("user", "assess"),), schema_name="sufficiency"))

    def test_schema_violation_is_malformed(self):
        chat = ScriptedChat({"sufficiency": [
            json.dumps({"need": "bogus"}), json.dumps({"need": "bogus"})]})
        clients = ServiceClients(chat_backend=chat)
        with pytest.raises(MalformedLLMOutput):
            clients.chat(ChatRequest(
                messages=(text_message("user", "assess"),), schema_name="sufficiency"))

    def test_unknown_schema_rejected(self):
        clients = ServiceClients(chat_backend=ScriptedChat({}))
        with pytest.raises(ProtocolViolation):
            clients.chat(ChatRequest(messages=(text_message("user", "x"),),
                                     schema_name="nonexistent"))


class TestEmbedGateway:
    def test_renormalizes_vectors(self):
        vector = EmbedVector(tag="clip-image", values=np.array([2.0, 0.0]))
        clients = ServiceClients(embedder=FixtureEmbedder({"clip-image": [vector]}))
        out = clients.embed(EmbedRequest(tag="clip-image", image=image_8()))
        assert abs(np.linalg.norm(out.values) - 1.0) < 1e-9
        assert out.values[0] == pytest.approx(1.0)

    def test_zero_vector_rejected(self):
        vector = EmbedVector.__new__(EmbedVector)
        object.__setattr__(vector, "tag", "dino")
        object.__setattr__(vector, "values", np.zeros(4))
        object.__setattr__(vector, "distance", None)
        clients = ServiceClients(embedder=FixtureEmbedder({"dino": [vector]}))
        with pytest.raises(ProtocolViolation):
            clients.embed(EmbedRequest(tag="dino", image=image_8()))

    def test_lpips_scalar_passthrough(self):
        vector = EmbedVector(tag="lpips-distance", distance=0.125)
        clients = ServiceClients(embedder=FixtureEmbedder({"lpips-distance": [vector]}))
        out = clients.embed(EmbedRequest(tag="lpips-distance",
                                         image=image_8(), image_b=image_8()))
        assert out.distance == 0.125


class TestHttpTransport:
    def _clients_with(self, handler, retry=1):
        transport = httpx.MockTransport(handler)
        http = HttpTransport("segment", "http://test", timeout=5.0,
                             retry_count=retry, transport=transport)
        return HttpSegmenter(http)

    def test_masks_roundtrip_over_http(self):
        mask = center_mask()

        def handler(request):
            body = json.loads(request.content)
            assert "idempotency_key" in body
            return httpx.Response(200, json={"masks": [mask.to_json_obj()]})

        segmenter = self._clients_with(handler)
        out = segmenter.segment(image_8())
        assert out == [mask]

    def test_retry_then_success(self):
        attempts = []

        def handler(request):
            attempts.append(json.loads(request.content)["idempotency_key"])
            if len(attempts) == 1:
                return httpx.Response(503, text="busy")
            return httpx.Response(200, json={"masks": []})

        segmenter = self._clients_with(handler, retry=2)
        assert segmenter.segment(image_8()) == []
        # the retry reuses the same idempotency key
        assert len(set(attempts)) == 1 and len(attempts) == 2

    def test_exhausted_retries_raise_backend_error(self):
        def handler(request):
            return httpx.Response(500, text="down")

        segmenter = self._clients_with(handler, retry=1)
        with pytest.raises(BackendError) as err:
            segmenter.segment(image_8())
        assert err.value.backend == "segment"

    def test_http_depth_validates_range(self):
        def handler(request):
            return httpx.Response(200, json={
                "depth": {"width": 8, "height": 8, "values": [1.2] * 64}})

        transport = httpx.MockTransport(handler)
        http = HttpTransport("depth", "http://test", 5.0, 0, transport=transport)
        with pytest.raises(ProtocolViolation):
            HttpDepthEstimator(http).estimate_depth(image_8())


class TestBackendConfig:
    def test_load_toml_with_env_override(self, tmp_path, monkeypatch):
        config_file = tmp_path / "backends.toml"
        config_file.write_text(
            'timeout = 12.0\nretry_count = 3\n\n'
            '[services.segment]\nkind = "http"\nendpoint = "http://a"\n')
        monkeypatch.setenv("SCENEDIT_SEGMENT_ENDPOINT", "http://b")
        config = load_backend_config(config_file)
        assert config.timeout == 12.0
        assert config.services["segment"].endpoint == "http://b"

    def test_unknown_key_rejected(self, tmp_path):
        config_file = tmp_path / "backends.json"
        config_file.write_text(json.dumps({"timeot": 3}))
        with pytest.raises(ConfigError) as err:
            load_backend_config(config_file)
        assert "timeot" in str(err.value)

    def test_retry_count_capped(self):
        with pytest.raises(ConfigError):
            BackendConfig(retry_count=6)

    def test_timeout_positive(self):
        with pytest.raises(ConfigError):
            BackendConfig(timeout=0)

    def test_fixture_service_needs_path(self):
        with pytest.raises(ConfigError):
            ServiceConfig(kind="fixture")


class TestMockDeterminism:
    def test_mocks_are_pure_functions_of_inputs(self):
        backends_a = two_object_backends()
        backends_b = two_object_backends()
        image = backends_a["image"]
        assert backends_a["segmenter"].segment(image) \
            == backends_b["segmenter"].segment(image)
        assert backends_a["detector"].detect(image) == backends_b["detector"].detect(image)
        da = backends_a["depth"].estimate_depth(image)
        db = backends_b["depth"].estimate_depth(image)
        assert (da.values == db.values).all()
