import json
import os

import pytest
from fastapi.testclient import TestClient

from genservice.app import ServiceConfig, create_app

GOLDEN_PATH = os.path.join(
    os.path.dirname(__file__), "..", "..", "tests", "data",
    "template_parity.json",
)


def client(**kwargs):
    return TestClient(create_app(ServiceConfig(**kwargs)))


def post(c, inputs, **overrides):
    payload = {"inputs": inputs, "beam_size": 10, "length_penalty": 1.0,
               "max_length": 128}
    payload.update(overrides)
    return c.post("/generate", json=payload)


class TestHealth:
    def test_reports_mode_and_version(self):
        resp = client(mode="echo").get("/health")
        assert resp.status_code == 200
        body = resp.json()
        assert body["mode"] == "echo"
        assert body["status"] == "ok"
        assert body["version"]


class TestProtocol:
    def test_order_and_count_preserved(self):
        c = client(mode="echo")
        inputs = [f"item {i}" for i in range(10)]
        resp = post(c, inputs)
        assert resp.status_code == 200
        assert resp.json()["outputs"] == inputs

    def test_empty_inputs_ok(self):
        resp = post(client(mode="echo"), [])
        assert resp.status_code == 200
        assert resp.json()["outputs"] == []

    def test_echo_truncates_to_max_length(self):
        resp = post(client(mode="echo"), ["a b c d e"], max_length=3)
        assert resp.json()["outputs"] == ["a b c"]

    def test_malformed_body_400(self):
        c = client(mode="echo")
        resp = c.post("/generate", content=b"{not json",
                      headers={"Content-Type": "application/json"})
        assert resp.status_code == 400
        assert c.post("/generate", json={"nope": 1}).status_code == 400
        assert c.post("/generate", json={"inputs": [1, 2]}).status_code == 400

    def test_bad_decoding_params_400(self):
        c = client(mode="echo")
        assert post(c, ["x"], beam_size=0).status_code == 400
        assert post(c, ["x"], max_length=0).status_code == 400

    def test_overlong_input_413(self):
        c = client(mode="echo", max_input_tokens=4)
        resp = post(c, ["one two three four five"])
        assert resp.status_code == 413

    def test_oversized_batch_413(self):
        c = client(mode="echo", max_batch=2)
        assert post(c, ["a", "b", "c"]).status_code == 413

    def test_deterministic_across_requests(self):
        c = client(mode="template")
        inputs = ["<H> A <D> A <P> d.t.p <T> B <D> B", "plain question input"]
        first = post(c, inputs).json()["outputs"]
        second = post(c, inputs).json()["outputs"]
        assert first == second


class TestTemplateParity:
    def test_matches_shared_golden_byte_exact(self):
        with open(GOLDEN_PATH, encoding="utf-8") as f:
            entries = json.load(f)
        assert entries
        c = client(mode="template")
        for entry in entries:
            resp = post(c, [entry["input"]])
            assert resp.status_code == 200
            assert resp.json()["outputs"] == [entry["output"]]


class TestModelMode:
    def _pairs(self, tmp_path):
        pairs = [
            {"input": f"<H> ent{i} <D> ent{i} <P> d.t.p <T> tail{i} <D> tail{i}",
             "target": f"ent{i} p tail{i} ."}
            for i in range(10)
        ]
        path = tmp_path / "pairs.jsonl"
        path.write_text("".join(json.dumps(p) + "\n" for p in pairs),
                        encoding="utf-8")
        return path, pairs

    def test_finetune_smoke_and_serve(self, tmp_path):
        from genservice.model import Hyperparams, finetune

        pairs_path, pairs = self._pairs(tmp_path)
        ckpt = tmp_path / "model.pt"
        # large toy learning rate so the loss trend is visible quickly
        hp = Hyperparams(epochs=8, learning_rate=0.01, batch_size=4, seed=0)
        summary = finetune(pairs_path, "prompter", hp, ckpt)
        assert ckpt.exists()
        assert summary["epochs_run"] >= 1
        assert summary["losses"][-1] <= summary["losses"][0]

        c = client(mode="model", checkpoint=str(ckpt))
        resp = post(c, [p["input"] for p in pairs], beam_size=3, max_length=16)
        assert resp.status_code == 200
        outputs = resp.json()["outputs"]
        assert len(outputs) == len(pairs)
        assert all(isinstance(o, str) and o for o in outputs)

    def test_empty_pairs_error(self, tmp_path):
        from genservice.model import Hyperparams, finetune

        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        with pytest.raises(ValueError):
            finetune(path, "prompter", Hyperparams(epochs=1), tmp_path / "m.pt")

    def test_missing_checkpoint_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            ServiceConfig(mode="model", checkpoint=str(tmp_path / "nope.pt"))

    def test_early_stop_patience(self, tmp_path):
        from genservice.model import Hyperparams, finetune

        pairs_path, _ = self._pairs(tmp_path)
        # zero learning rate: loss never improves after the first epoch
        hp = Hyperparams(epochs=50, learning_rate=0.0, batch_size=4,
                         early_stop_patience=3, seed=0)
        summary = finetune(pairs_path, "qg", hp, tmp_path / "m.pt")
        assert summary["epochs_run"] <= 6
