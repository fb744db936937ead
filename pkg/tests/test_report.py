import json

import pytest

from linkforge.matcher import Match, MatchResult
from linkforge.records import CommunityDataset, ContactRecord, ResidentRecord
from linkforge.report import CommunityReport, data_quality_report, emit_reports
from linkforge.similarity import FieldSimilarities


def contact(cid, age=None, village=None, in_registry=None, namer="R1"):
    return ContactRecord(
        contact_id=cid, namer_id=namer, domain="money", raw_name="x",
        reported_age=age, reported_village=village, village_in_registry=in_registry,
    )


def result_with(matched_ids):
    return MatchResult(matched=[
        Match(cid, "R2", "R1", "money", 1.0, "blocked", FieldSimilarities())
        for cid in matched_ids
    ])


def dataset_with(contacts):
    residents = [
        ResidentRecord("R1", "a", "v", "H1", age=30),
        ResidentRecord("R2", "b", "v", "H2", age=10),
    ]
    return CommunityDataset("demo", residents, contacts, {"v"})


class TestDataQuality:
    def test_missing_age_metric(self):
        contacts = [contact(f"C{i}", age=None if i < 40 else 20, village="v",
                            in_registry=True) for i in range(100)]
        rep = data_quality_report(dataset_with(contacts), result_with([]))
        assert rep.pct_contacts_missing_age == pytest.approx(40.0)
        assert rep.n_enumerated == 2
        assert rep.n_adults == 1

    def test_matched_and_in_community_metrics(self):
        # 100 contacts: 80 in community; 50 matched, 48 of them in-community
        contacts = []
        for i in range(100):
            in_comm = i < 80
            contacts.append(contact(
                f"C{i:03d}", age=30,
                village="v" if in_comm else "far",
                in_registry=True if in_comm else False,
            ))
        matched = [f"C{i:03d}" for i in range(48)] + ["C080", "C081"]
        rep = data_quality_report(dataset_with(contacts), result_with(matched))
        assert rep.pct_contacts_matched == pytest.approx(50.0)
        assert rep.pct_in_community_matched == pytest.approx(60.0)
        assert rep.pct_contacts_outside_community == pytest.approx(20.0)
        assert not rep.in_community_match_capped

    def test_full_in_community_match_rate_not_flagged(self):
        # every in-community contact matched; out-of-community matches do not
        # enter the numerator, so the rate tops out at exactly 100
        contacts = [
            contact("C0", village="v", in_registry=True),
            contact("C1", village="far", in_registry=False),
            contact("C2", village="far", in_registry=False),
        ]
        rep = data_quality_report(dataset_with(contacts), result_with(["C0", "C1"]))
        assert rep.pct_in_community_matched == 100.0
        assert rep.pct_in_community_matched_raw == 100.0
        assert not rep.in_community_match_capped

    def test_zero_contacts_undefined(self):
        rep = data_quality_report(dataset_with([]), result_with([]))
        assert rep.pct_contacts_matched is None
        assert rep.pct_contacts_missing_age is None

    def test_blank_village_counted_outside_and_reported(self):
        contacts = [contact("C0", village=None), contact("C1", village="v", in_registry=True)]
        rep = data_quality_report(dataset_with(contacts), result_with([]))
        assert rep.pct_contacts_outside_community == pytest.approx(50.0)
        assert rep.pct_contacts_missing_village == pytest.approx(50.0)


class TestEmitReports:
    def make_report(self, cid="demo"):
        rep = CommunityReport(community_id=cid, n_enumerated=10, n_adults=5,
                              n_namers=3, contacts_total=20)
        rep.pct_contacts_matched = 50.0
        rep.graph_stats = {"all": {
            "n_nodes": 10, "n_undirected_edges": 4, "cross_household_fraction": 0.5,
            "average_degree": 0.8, "transitivity": 0.0, "reciprocity": 0.0,
            "average_path_length": 1.0, "top_cc_coverage": 0.4,
            "path_length_sampled": False,
        }}
        rep.assortativity = {"age": 0.5, "sex": None, "village": 1.0}
        return rep

    def test_three_files_plus_json(self, tmp_path):
        paths = emit_reports([self.make_report()], tmp_path)
        for key in ("table1", "table2", "assortativity", "json"):
            assert paths[key].exists()

    def test_undefined_rendered_empty_not_zero(self, tmp_path):
        paths = emit_reports([self.make_report()], tmp_path)
        lines = paths["assortativity"].read_text().splitlines()
        header = lines[0].split(",")
        row = lines[1].split(",")
        cell = dict(zip(header, row))
        assert cell["sex"] == ""
        assert cell["age"] == "0.500000"
        table1 = paths["table1"].read_text().splitlines()
        t1 = dict(zip(table1[0].split(","), table1[1].split(",")))
        assert t1["pct_contacts_missing_age"] == ""

    def test_rows_sorted_by_community(self, tmp_path):
        reports = [self.make_report("zeta"), self.make_report("alpha")]
        paths = emit_reports(reports, tmp_path)
        lines = paths["table1"].read_text().splitlines()
        assert lines[1].startswith("alpha,")
        assert lines[2].startswith("zeta,")

    def test_reemission_byte_identical(self, tmp_path):
        reports = [self.make_report()]
        paths = emit_reports(reports, tmp_path / "a")
        first = {k: p.read_bytes() for k, p in paths.items()}
        paths2 = emit_reports(reports, tmp_path / "b")
        second = {k: p.read_bytes() for k, p in paths2.items()}
        assert first == second

    def test_empty_reports_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_reports([], tmp_path)

    def test_json_round_trips(self, tmp_path):
        paths = emit_reports([self.make_report()], tmp_path)
        data = json.loads(paths["json"].read_text())
        assert data[0]["community_id"] == "demo"
        assert data[0]["assortativity"]["sex"] is None
