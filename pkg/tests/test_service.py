import json
import urllib.error
import urllib.request

import numpy as np
import pytest

from linkforge.service import TuningService, serve
from linkforge.tuning import load_session, sample_session, save_session

from test_matcher import build_random_dataset


@pytest.fixture()
def live(tmp_path):
    """A service over a small sampled session, on an ephemeral port."""
    rng = np.random.default_rng(21)
    ds = build_random_dataset(rng, 40, 50)
    session = sample_session(ds, n_contacts=30, n_weights=4, seed=2)
    session_dir = tmp_path / "session"
    save_session(session, session_dir)
    service = TuningService(session, session_dir)
    server = serve(service, "127.0.0.1", 0)
    base = f"http://127.0.0.1:{server.server_address[1]}"
    yield base, service, session_dir
    server.shutdown()


def get(base, path):
    with urllib.request.urlopen(base + path) as resp:
        return resp.status, json.loads(resp.read())


def post(base, path, payload):
    req = urllib.request.Request(
        base + path, data=json.dumps(payload).encode(),
        headers={"Content-Type": "application/json"}, method="POST")
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


class TestSessionEndpoint:
    def test_metadata(self, live):
        base, service, _ = live
        status, payload = get(base, "/api/session")
        assert status == 200
        assert payload["n_pairs"] == service.session.n_pairs
        assert payload["n_configs"] == 28
        assert payload["labeled"] == 0


class TestPairs:
    def test_listing_and_pagination(self, live):
        base, service, _ = live
        status, payload = get(base, "/api/pairs?limit=5")
        assert status == 200
        assert len(payload["pairs"]) == 5
        assert payload["total"] == service.session.n_pairs
        first = payload["pairs"][0]
        assert {"pair_id", "resident", "contact", "sims", "score",
                "classified_fraction", "label"} <= set(first)
        assert first["resident"]["kind"] == "resident"

    def test_disagreement_ordering(self, live):
        base, service, _ = live
        _, payload = get(base, "/api/pairs?limit=1000")
        fracs = [p["classified_fraction"] for p in payload["pairs"]]
        disagreement = [1 - abs(2 * f - 1) for f in fracs]
        assert disagreement == sorted(disagreement, reverse=True)

    def test_label_round_trip_and_filter(self, live):
        base, service, _ = live
        _, listing = get(base, "/api/pairs?limit=2")
        pid = listing["pairs"][0]["pair_id"]
        other = listing["pairs"][1]["pair_id"]
        status, resp = post(base, f"/api/pairs/{pid}/label",
                            {"label": "match", "annotator": "ann"})
        assert status == 200 and resp["ok"]
        _, configs = get(base, "/api/configs")
        # only match labels: FPR everywhere undefined, so no recommendation yet
        assert configs["recommended_config_id"] is None
        for row in configs["configs"]:
            assert row["tp"] + row["fn"] == 1
        post(base, f"/api/pairs/{other}/label", {"label": "nonmatch", "annotator": "ann"})
        _, configs = get(base, "/api/configs")
        assert configs["recommended_config_id"] is not None
        _, unlabeled = get(base, "/api/pairs?filter=unlabeled&limit=10000")
        assert all(p["pair_id"] not in (pid, other) for p in unlabeled["pairs"])
        _, labeled = get(base, "/api/pairs?filter=labeled")
        assert {p["pair_id"] for p in labeled["pairs"]} == {pid, other}

    def test_unknown_pair_404(self, live):
        base, _, _ = live
        status, payload = post(base, "/api/pairs/zzz|zzz/label",
                               {"label": "match", "annotator": "x"})
        assert status == 404

    def test_malformed_label_400(self, live):
        base, service, _ = live
        pid = service.session.pair_ids[0]
        status, _ = post(base, f"/api/pairs/{pid}/label", {"label": "banana"})
        assert status == 400
        status, _ = post(base, f"/api/pairs/{pid}/label", {})
        assert status == 400


class TestConfigs:
    def test_select_without_labels_409(self, live):
        base, _, _ = live
        status, payload = post(base, "/api/configs/select", {"config_id": 0})
        assert status == 409

    def test_select_writes_chosen_config(self, live):
        base, service, session_dir = live
        pid = service.session.pair_ids[0]
        post(base, f"/api/pairs/{pid}/label", {"label": "match", "annotator": "a"})
        status, payload = post(base, "/api/configs/select", {"config_id": 3})
        assert status == 200
        chosen = json.loads((session_dir / "chosen_config.json").read_text())
        assert chosen["config_id"] == 3
        from linkforge.epilink import MatchConfig
        cfg = MatchConfig.from_dict(chosen)  # validates simplex + quantile
        assert cfg == service.session.configs[3]
        _, info = get(base, "/api/session")
        assert info["selected_config_id"] == 3
        assert service.selection_event.is_set()

    def test_select_unknown_config_404(self, live):
        base, service, _ = live
        pid = service.session.pair_ids[0]
        post(base, f"/api/pairs/{pid}/label", {"label": "match", "annotator": "a"})
        status, _ = post(base, "/api/configs/select", {"config_id": 10_000})
        assert status == 404


class TestRestartLosslessness:
    def test_labels_survive_reload(self, live):
        base, service, session_dir = live
        pids = service.session.pair_ids[:5]
        for i, pid in enumerate(pids):
            label = ["match", "nonmatch", "unsure"][i % 3]
            status, _ = post(base, f"/api/pairs/{pid}/label",
                             {"label": label, "annotator": "ann"})
            assert status == 200
        # relabel one pair
        post(base, f"/api/pairs/{pids[0]}/label", {"label": "nonmatch", "annotator": "ann"})
        reloaded = load_session(session_dir)
        assert reloaded.labels[pids[0]]["label"] == "nonmatch"
        assert len(reloaded.label_log) == 6
        for pid in pids[1:]:
            assert reloaded.labels[pid]["label"] == service.session.labels[pid]["label"]


class TestStaticAndExport:
    def test_index_served(self, live):
        base, _, _ = live
        with urllib.request.urlopen(base + "/") as resp:
            assert resp.status == 200
            body = resp.read().decode()
        assert "<html" in body.lower()

    def test_unknown_api_404(self, live):
        base, _, _ = live
        try:
            urllib.request.urlopen(base + "/api/nope")
            raise AssertionError("expected 404")
        except urllib.error.HTTPError as exc:
            assert exc.code == 404

    def test_export(self, live):
        base, service, _ = live
        pid = service.session.pair_ids[0]
        post(base, f"/api/pairs/{pid}/label", {"label": "match", "annotator": "a"})
        status, payload = get(base, "/api/export")
        assert status == 200
        assert payload["labels"][0]["pair_id"] == pid
        assert len(payload["configs"]) == service.session.n_configs
