import json
from concurrent.futures import ThreadPoolExecutor

import pytest
from fastapi.testclient import TestClient

from synex.api import create_app
from synex.cli import main as cli_main
from synex.config import (
    ConfigError,
    DEFAULT_K,
    DEFAULT_NEG_RATIO,
    DEFAULT_POOL_CAP,
    READMORE_CAP,
    load_config,
)
from synex.events import EventLog, ReadmoreEvent, now_ms


class TestConfig:
    def test_loads_and_resolves_paths(self, workspace):
        cfg = load_config(workspace / "config.json")
        assert cfg.embeddings.is_file()
        assert cfg.corpus.is_file()
        assert cfg.k == DEFAULT_K
        assert cfg.pool_cap == DEFAULT_POOL_CAP
        assert cfg.neg_ratio == 2  # fixture overrides the 10x default

    def test_digest_stable_and_sensitive(self, workspace, tmp_path):
        a = load_config(workspace / "config.json")
        b = load_config(workspace / "config.json")
        assert a.digest() == b.digest()
        doc = json.loads((workspace / "config.json").read_text())
        doc["k"] = 4
        other = tmp_path / "config.json"
        other.write_text(json.dumps(doc))
        for key, value in doc["paths"].items():
            doc["paths"][key] = str(workspace / value)
        other.write_text(json.dumps(doc))
        c = load_config(other)
        assert c.digest() != a.digest()

    def test_missing_file_rejected(self, workspace, tmp_path):
        doc = json.loads((workspace / "config.json").read_text())
        doc["paths"] = {k: str(workspace / v) for k, v in doc["paths"].items()}
        doc["paths"]["embeddings"] = str(tmp_path / "nope.txt")
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        with pytest.raises(ConfigError, match="embeddings"):
            load_config(bad)

    def test_invalid_values_rejected(self, workspace, tmp_path):
        doc = json.loads((workspace / "config.json").read_text())
        doc["paths"] = {k: str(workspace / v) for k, v in doc["paths"].items()}
        doc["k"] = 0
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        with pytest.raises(ConfigError, match="k"):
            load_config(bad)

    def test_unknown_keys_rejected(self, workspace, tmp_path):
        doc = json.loads((workspace / "config.json").read_text())
        doc["paths"] = {k: str(workspace / v) for k, v in doc["paths"].items()}
        doc["mystery"] = 1
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        with pytest.raises(ConfigError, match="mystery"):
            load_config(bad)


class TestEventLog:
    def test_readmore_roundtrip(self, tmp_path):
        log = EventLog(tmp_path / "events.jsonl")
        event = ReadmoreEvent(
            session="s1", set_id="refuse_reject", word="refuse",
            revealed_count=2, timestamp_ms=now_ms(),
        )
        log.append_readmore(event)
        records = log.read_all()
        assert len(records) == 1
        assert records[0]["type"] == "readmore"
        assert records[0]["revealed_count"] == 2
        assert records[0]["word"] == "refuse"

    def test_revealed_count_bounds(self):
        with pytest.raises(ValueError):
            ReadmoreEvent("s", "x", "w", revealed_count=6, timestamp_ms=0)
        with pytest.raises(ValueError):
            ReadmoreEvent("s", "x", "w", revealed_count=0, timestamp_ms=0)

    def test_file_created_on_first_start(self, tmp_path):
        path = tmp_path / "deep" / "events.jsonl"
        EventLog(path)
        assert path.exists()
        assert path.read_text() == ""

    def test_concurrent_appends_stay_intact(self, tmp_path):
        log = EventLog(tmp_path / "events.jsonl")

        def write(i):
            log.append({"type": "readmore", "n": i, "payload": "x" * 200})

        with ThreadPoolExecutor(max_workers=16) as pool:
            list(pool.map(write, range(100)))
        lines = (tmp_path / "events.jsonl").read_text().splitlines()
        assert len(lines) == 100
        seen = {json.loads(line)["n"] for line in lines}
        assert seen == set(range(100))

    def test_append_only(self, tmp_path):
        log = EventLog(tmp_path / "events.jsonl")
        log.append({"a": 1})
        before = (tmp_path / "events.jsonl").read_bytes()
        log.append({"b": 2})
        after = (tmp_path / "events.jsonl").read_bytes()
        assert after.startswith(before)


class TestCli:
    def test_config_error_exit_2(self, tmp_path, capsys):
        missing = tmp_path / "none.json"
        assert cli_main(["suggest", "--config", str(missing), "--set", "x"]) == 2
        assert "config error" in capsys.readouterr().err

    def test_unknown_set_exit_1(self, workspace, trained_engine, capsys):
        code = cli_main(
            ["suggest", "--config", str(workspace / "config.json"), "--set", "nope"]
        )
        assert code == 1
        assert "nope" in capsys.readouterr().err

    def test_suggest_emits_json(self, workspace, trained_engine, capsys):
        code = cli_main(
            [
                "suggest", "--config", str(workspace / "config.json"),
                "--set", "refuse_reject", "--model", "bilstm", "--k", "5",
            ]
        )
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["set"] == "refuse_reject"
        assert doc["model_kind"] == "bilstm"
        for word in doc["per_word"]:
            assert len(word["examples"]) <= 5

    def test_suggest_replay_byte_identical(self, workspace, trained_engine, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        for out in (out1, out2):
            code = cli_main(
                [
                    "suggest", "--config", str(workspace / "config.json"),
                    "--set", "refuse_reject", "--model", "gmm", "--out", str(out),
                ]
            )
            assert code == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_train_commands(self, workspace, trained_engine, capsys):
        # Retraining over an existing store must succeed and report files.
        code = cli_main(["train-filter", "--config", str(workspace / "config.json")])
        assert code == 0
        assert "filter.json" in capsys.readouterr().out


@pytest.fixture(scope="module")
def client(workspace, trained_engine):
    cfg = load_config(workspace / "config.json")
    app = create_app(cfg)
    with TestClient(app) as c:
        yield c


class TestApi:
    def test_list_sets(self, client):
        doc = client.get("/sets").json()
        assert doc["sets"][0]["id"] == "refuse_reject"
        lemmas = [w["lemma"] for w in doc["sets"][0]["words"]]
        assert lemmas == ["refuse", "reject"]

    def test_suggest_roundtrip(self, client):
        resp = client.post(
            "/suggest", json={"set": "refuse_reject", "model": "gmm", "k": 5}
        )
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["model_kind"] == "gmm"
        assert {w["lemma"] for w in doc["per_word"]} == {"refuse", "reject"}
        for word in doc["per_word"]:
            assert 1 <= len(word["examples"]) <= 5

    def test_suggest_unknown_set_404(self, client):
        assert client.post("/suggest", json={"set": "nope", "model": "gmm"}).status_code == 404

    def test_suggest_bad_model_400(self, client):
        resp = client.post("/suggest", json={"set": "refuse_reject", "model": "zing"})
        assert resp.status_code == 400

    def test_suggest_malformed_body_400(self, client):
        assert client.post("/suggest", json={"model": "gmm"}).status_code == 400

    def test_untrained_model_503(self, workspace, tmp_path):
        # Same data, different digest: the store directory is empty.
        doc = json.loads((workspace / "config.json").read_text())
        doc["paths"] = {k: str(workspace / v) for k, v in doc["paths"].items()}
        doc["paths"]["model_store"] = str(tmp_path / "empty_store")
        doc["seed"] = 999
        cfgfile = tmp_path / "config.json"
        cfgfile.write_text(json.dumps(doc))
        app = create_app(load_config(cfgfile))
        with TestClient(app) as c:
            resp = c.post("/suggest", json={"set": "refuse_reject", "model": "gmm"})
            assert resp.status_code == 503

    def test_readmore_pagination_sequence(self, client):
        first = client.get("/examples/refuse_reject/refuse", params={"offset": 0}).json()
        assert len(first["items"]) == 1
        seen = [first["items"][0]["id"]]
        for offset in range(1, READMORE_CAP):
            doc = client.get(
                "/examples/refuse_reject/refuse", params={"offset": offset}
            ).json()
            assert len(doc["items"]) == 1
            seen.append(doc["items"][0]["id"])
        assert len(seen) == 5
        suggestion = client.post(
            "/suggest", json={"set": "refuse_reject", "model": "gmm"}
        ).json()
        ranked = [
            w for w in suggestion["per_word"] if w["lemma"] == "refuse"
        ][0]["examples"]
        assert seen == [e["id"] for e in ranked[:5]]

    def test_readmore_offset_cap_400(self, client):
        resp = client.get("/examples/refuse_reject/refuse", params={"offset": 5})
        assert resp.status_code == 400

    def test_examples_unknown_word_404(self, client):
        resp = client.get("/examples/refuse_reject/zebra", params={"offset": 0})
        assert resp.status_code == 404

    def test_readmore_event_logged(self, client, workspace):
        log_path = workspace / "logs" / "events.jsonl"
        before = len(log_path.read_text().splitlines()) if log_path.exists() else 0
        resp = client.post(
            "/events/readmore",
            json={
                "session": "sess-9", "set": "refuse_reject",
                "word": "refuse", "revealed_count": 2,
            },
        )
        assert resp.status_code == 204
        lines = log_path.read_text().splitlines()
        assert len(lines) == before + 1
        record = json.loads(lines[-1])
        assert record["session"] == "sess-9"
        assert record["revealed_count"] == 2
        assert record["timestamp_ms"] > 0

    def test_readmore_event_bounds_400(self, client):
        resp = client.post(
            "/events/readmore",
            json={
                "session": "s", "set": "refuse_reject",
                "word": "refuse", "revealed_count": 6,
            },
        )
        assert resp.status_code == 400

    def test_answers_logged(self, client, workspace):
        resp = client.post(
            "/answers",
            json={"session": "sess-9", "set": "refuse_reject", "text": "my translation"},
        )
        assert resp.status_code == 204
        answer_path = workspace / "logs" / "answers.jsonl"
        records = [json.loads(l) for l in answer_path.read_text().splitlines()]
        assert records[-1]["text"] == "my translation"

    def test_empty_answer_400(self, client):
        resp = client.post(
            "/answers", json={"session": "s", "set": "refuse_reject", "text": "  "}
        )
        assert resp.status_code == 400

    def test_repeated_suggest_identical(self, client):
        body = {"set": "refuse_reject", "model": "bilstm", "k": 3}
        a = client.post("/suggest", json=body).content
        b = client.post("/suggest", json=body).content
        assert a == b

    def test_l1_grouped_suggest(self, client):
        resp = client.post(
            "/suggest", json={"set": "refuse_reject", "model": "gmm", "l1_grouped": True}
        )
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["l1_restricted"] is True
        assert doc["l1_fallback"] is False
        for word in doc["per_word"]:
            for example in word["examples"]:
                assert example["id"].startswith("p")  # parallel sentences only
