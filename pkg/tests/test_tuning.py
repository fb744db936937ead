import numpy as np
import pytest

from linkforge.epilink import MatchConfig
from linkforge.errors import DataError, SelectionError
from linkforge.matcher import prepare_community
from linkforge.records import CommunityDataset, ContactRecord, ResidentRecord
from linkforge.tuning import (
    ConfigMetrics,
    TuningSession,
    apply_label,
    chosen_config_payload,
    config_metrics,
    load_session,
    pair_id_for,
    sample_session,
    sample_weights,
    save_session,
    select_config,
)

from test_matcher import build_random_dataset


def manual_session(classified_matrix, quantiles=None):
    """Session with an explicit classification matrix (configs x pairs)."""
    classified = np.asarray(classified_matrix, bool)
    n_configs, n_pairs = classified.shape
    quantiles = quantiles or [0.95] * n_configs
    pair_ids = [pair_id_for(f"R{i}", f"C{i}") for i in range(n_pairs)]
    return TuningSession(
        session_id="manual",
        community_id="t",
        seed=0,
        quantile_grid=(0.95,),
        sampled_contact_ids=[f"C{i}" for i in range(n_pairs)],
        configs=[MatchConfig.uniform(q) for q in quantiles],
        pair_ids=pair_ids,
        pair_resident_ids=[f"R{i}" for i in range(n_pairs)],
        pair_contact_ids=[f"C{i}" for i in range(n_pairs)],
        sims=np.zeros((n_pairs, 7)),
        classifications=np.packbits(classified, axis=1) if n_pairs else
            np.zeros((n_configs, 0), np.uint8),
        score_mean=np.zeros(n_pairs),
        classified_fraction=classified.mean(axis=0),
        records_view={},
    )


class TestSampleWeights:
    def test_on_simplex(self):
        w = sample_weights(np.random.default_rng(0), 500)
        assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(w >= 0)

    def test_mean_near_uniform(self):
        w = sample_weights(np.random.default_rng(1), 100_000)
        assert np.allclose(w.mean(axis=0), 1 / 7, atol=0.01)


class TestSampleSession:
    def make_dataset(self, seed=0, n=40):
        rng = np.random.default_rng(seed)
        return build_random_dataset(rng, n, n)

    def test_deterministic(self):
        ds = self.make_dataset()
        s1 = sample_session(ds, n_contacts=20, n_weights=3, seed=7)
        s2 = sample_session(ds, n_contacts=20, n_weights=3, seed=7)
        assert s1.pair_ids == s2.pair_ids
        assert s1.configs == s2.configs
        assert np.array_equal(s1.classifications, s2.classifications)
        assert np.array_equal(s1.sims, s2.sims, equal_nan=True)

    def test_config_grid_product(self):
        ds = self.make_dataset()
        s = sample_session(ds, n_contacts=10, n_weights=2, seed=1)
        assert s.n_configs == 14
        # weight-major ordering: first 7 configs share a weight vector
        assert s.configs[0].weights == s.configs[6].weights
        assert s.configs[0].quantile == 0.92
        assert s.configs[6].quantile == 0.98

    def test_fewer_contacts_than_requested(self):
        ds = self.make_dataset(n=15)
        s = sample_session(ds, n_contacts=500, n_weights=2, seed=2)
        assert s.warnings
        assert len(s.sampled_contact_ids) <= 15

    def test_no_self_pairs(self):
        ds = self.make_dataset()
        s = sample_session(ds, n_contacts=30, n_weights=2, seed=3)
        contacts = {c.contact_id: c for c in ds.contacts}
        for rid, cid in zip(s.pair_resident_ids, s.pair_contact_ids):
            assert contacts[cid].namer_id != rid

    def test_pair_universe_matches_blocking(self):
        ds = self.make_dataset(seed=5)
        s = sample_session(ds, n_contacts=25, n_weights=1, seed=4)
        prep = prepare_community(ds)
        sampled_idx = [prep.con_ids.index(c) for c in s.sampled_contact_ids]
        expected = set()
        from linkforge.matcher import iter_blocked_pairs
        for pr, pc, _ in iter_blocked_pairs(prep, np.asarray(sampled_idx, np.int64)):
            for r, c in zip(pr, pc):
                if prep.con_namer_idx[c] != r:
                    expected.add((prep.res_ids[r], prep.con_ids[c]))
        assert set(zip(s.pair_resident_ids, s.pair_contact_ids)) == expected


class TestLabels:
    def test_apply_and_metrics_update(self):
        s = manual_session([[1, 1, 0], [0, 1, 0]])
        apply_label(s, s.pair_ids[0], "match", "ann", timestamp=1.0)
        m = config_metrics(s)
        assert m[0].tp == 1 and m[0].fn == 0
        assert m[1].tp == 0 and m[1].fn == 1

    def test_relabel_last_write_wins_history_kept(self):
        s = manual_session([[1, 0]])
        apply_label(s, s.pair_ids[0], "match", "a", timestamp=1.0)
        apply_label(s, s.pair_ids[0], "nonmatch", "a", timestamp=2.0)
        assert s.labels[s.pair_ids[0]]["label"] == "nonmatch"
        assert len(s.label_log) == 2
        m = config_metrics(s)
        assert m[0].fp == 1 and m[0].tp == 0

    def test_unsure_excluded(self):
        s = manual_session([[1, 1]])
        apply_label(s, s.pair_ids[0], "unsure", "a", timestamp=1.0)
        with pytest.raises(DataError):
            config_metrics(s)
        apply_label(s, s.pair_ids[1], "match", "a", timestamp=2.0)
        m = config_metrics(s)
        assert (m[0].tp, m[0].fp, m[0].fn, m[0].tn) == (1, 0, 0, 0)

    def test_unknown_pair(self):
        s = manual_session([[1]])
        with pytest.raises(KeyError):
            apply_label(s, "nope|nope", "match", "a")

    def test_invalid_label(self):
        s = manual_session([[1]])
        with pytest.raises(ValueError):
            apply_label(s, s.pair_ids[0], "maybe", "a")

    def test_counts_sum_to_labeled_total(self):
        rng = np.random.default_rng(5)
        s = manual_session(rng.uniform(size=(4, 12)) < 0.5)
        for i in range(8):
            apply_label(s, s.pair_ids[i],
                        ["match", "nonmatch", "unsure"][i % 3], "a", timestamp=float(i))
        labeled = sum(1 for r in s.labels.values() if r["label"] != "unsure")
        for m in config_metrics(s):
            assert m.tp + m.fp + m.fn + m.tn == labeled


class TestHandBuiltFixture:
    """3 configs, 6 labels; confusion matrices computed by hand."""

    def build(self):
        s = manual_session([
            [1, 1, 1, 0, 0, 0],   # C0 classifies P0,P1,P2
            [1, 0, 0, 1, 0, 0],   # C1 classifies P0,P3
            [0, 0, 0, 0, 0, 0],   # C2 classifies nothing
        ], quantiles=[0.95, 0.93, 0.95])
        labels = ["match", "nonmatch", "match", "nonmatch", "match", "unsure"]
        for pid, lab in zip(s.pair_ids, labels):
            apply_label(s, pid, lab, "reviewer", timestamp=1.0)
        return s

    def test_confusion_matrices(self):
        m = config_metrics(self.build())
        assert (m[0].tp, m[0].fp, m[0].fn, m[0].tn) == (2, 1, 1, 1)
        assert m[0].tpr == pytest.approx(2 / 3)
        assert m[0].fpr == pytest.approx(1 / 2)
        assert (m[1].tp, m[1].fp, m[1].fn, m[1].tn) == (1, 1, 2, 1)
        assert (m[2].tp, m[2].fp, m[2].fn, m[2].tn) == (0, 0, 3, 2)
        assert m[2].tpr == 0.0 and m[2].fpr == 0.0

    def test_selection_fallback_when_none_feasible(self):
        s = self.build()
        m = config_metrics(s)
        config_id, warning = select_config(m, s.configs, min_tpr=0.85)
        assert config_id == 0  # best TPR 2/3
        assert warning is not None

    def test_selection_constrained(self):
        s = self.build()
        m = config_metrics(s)
        config_id, warning = select_config(m, s.configs, min_tpr=0.6)
        assert config_id == 0 and warning is None


class TestSelectConfig:
    def mk(self, cid, tpr, fpr):
        return ConfigMetrics(cid, 0, 0, 0, 0, tpr, fpr, None)

    def test_constrained_argmin(self):
        cfgs = [MatchConfig.uniform(0.95)] * 2
        m = [self.mk(0, 0.9, 0.1), self.mk(1, 0.86, 0.05)]
        assert select_config(m, cfgs)[0] == 1

    def test_all_below_min_tpr(self):
        cfgs = [MatchConfig.uniform(0.95)] * 2
        m = [self.mk(0, 0.4, 0.01), self.mk(1, 0.7, 0.5)]
        cid, warning = select_config(m, cfgs)
        assert cid == 1 and "TPR" in warning

    def test_tie_breaks_on_tpr_then_quantile_then_id(self):
        cfgs = [MatchConfig.uniform(q) for q in (0.95, 0.93, 0.93, 0.93)]
        m = [self.mk(0, 0.86, 0.05), self.mk(1, 0.91, 0.05),
             self.mk(2, 0.91, 0.05), self.mk(3, 0.91, 0.05)]
        # tie on FPR: higher TPR wins; among 1,2,3 same TPR: lower q, then id
        assert select_config(m, cfgs)[0] == 1

    def test_duplicate_configs_stable(self):
        cfgs = [MatchConfig.uniform(0.95)] * 4
        m = [self.mk(i, 0.9, 0.1) for i in range(4)]
        assert select_config(m, cfgs)[0] == 0

    def test_no_defined_metrics(self):
        cfgs = [MatchConfig.uniform(0.95)]
        with pytest.raises(SelectionError):
            select_config([self.mk(0, None, None)], cfgs)


class TestPersistence:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        ds = build_random_dataset(rng, 30, 30)
        s = sample_session(ds, n_contacts=15, n_weights=2, seed=9)
        apply_label(s, s.pair_ids[0], "match", "ann", timestamp=5.0)
        save_session(s, tmp_path / "sess")
        from linkforge.tuning import append_label_row
        append_label_row(tmp_path / "sess", s.label_log[0])
        loaded = load_session(tmp_path / "sess")
        assert loaded.session_id == s.session_id
        assert loaded.pair_ids == s.pair_ids
        assert loaded.configs == s.configs
        assert np.array_equal(loaded.classifications, s.classifications)
        assert np.allclose(loaded.sims, s.sims, equal_nan=True)
        assert loaded.labels[s.pair_ids[0]]["label"] == "match"
        # metrics identical after reload
        assert [m.to_dict() for m in config_metrics(loaded)] == \
               [m.to_dict() for m in config_metrics(s)]

    def test_chosen_config_payload(self):
        s = manual_session([[1, 0]])
        payload = chosen_config_payload(s, 0)
        cfg = MatchConfig.from_dict(payload)
        assert cfg == s.configs[0]
