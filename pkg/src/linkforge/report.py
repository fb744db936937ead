"""Community-level data-quality, linkage, and network reports.

Undefined is never rendered as zero: metrics with an empty denominator
carry None and become empty CSV cells.  Column schemas are documented in
docs/report-schema.md and emission is deterministic, so re-running on
the same inputs reproduces the files byte for byte.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .netgraph import ASSORTATIVITY_ATTRIBUTES, NODE_FILTERS


@dataclass
class CommunityReport:
    community_id: str
    n_enumerated: int = 0
    n_adults: int = 0
    n_namers: int = 0
    contacts_total: int = 0
    pct_contacts_missing_age: float | None = None
    pct_contacts_missing_village: float | None = None      # blank share of metric 2
    pct_contacts_outside_community: float | None = None    # metric 2 (blank + out-of-registry)
    pct_contacts_matched: float | None = None
    pct_in_community_matched: float | None = None
    pct_in_community_matched_raw: float | None = None
    in_community_match_capped: bool = False
    cross_household_fraction: float | None = None
    graph_stats: dict = field(default_factory=dict)        # node_filter -> GraphStats dict
    assortativity: dict = field(default_factory=dict)      # attribute -> float | None

    def to_dict(self) -> dict:
        return {
            "community_id": self.community_id,
            "n_enumerated": self.n_enumerated,
            "n_adults": self.n_adults,
            "n_namers": self.n_namers,
            "contacts_total": self.contacts_total,
            "pct_contacts_missing_age": self.pct_contacts_missing_age,
            "pct_contacts_missing_village": self.pct_contacts_missing_village,
            "pct_contacts_outside_community": self.pct_contacts_outside_community,
            "pct_contacts_matched": self.pct_contacts_matched,
            "pct_in_community_matched": self.pct_in_community_matched,
            "pct_in_community_matched_raw": self.pct_in_community_matched_raw,
            "in_community_match_capped": self.in_community_match_capped,
            "cross_household_fraction": self.cross_household_fraction,
            "graph_stats": self.graph_stats,
            "assortativity": self.assortativity,
        }


def _pct(numerator: int, denominator: int) -> float | None:
    if denominator == 0:
        return None
    return 100.0 * numerator / denominator


def data_quality_report(dataset, match_result) -> CommunityReport:
    """Population counts and the five data-quality/linkage metrics.

    In-community means the contact's standardized village is in the
    registry; the matched-in-community rate can exceed 100% (out-of-
    village reports that still matched), so it is capped with a flag and
    the raw value kept.
    """
    contacts = dataset.contacts
    n_contacts = len(contacts)
    report = CommunityReport(
        community_id=dataset.community_id,
        n_enumerated=len(dataset.residents),
        n_adults=sum(1 for r in dataset.residents if r.is_adult),
        n_namers=len({c.namer_id for c in contacts}),
        contacts_total=n_contacts,
    )
    if n_contacts == 0:
        return report

    missing_age = sum(1 for c in contacts if c.reported_age is None)
    missing_village = sum(1 for c in contacts if not c.reported_village)
    outside = sum(1 for c in contacts
                  if not c.reported_village or c.village_in_registry is False)
    in_community = n_contacts - outside

    matched_ids = match_result.matched_contact_ids()
    matched = len(matched_ids)
    in_community_matched = sum(
        1 for c in contacts
        if c.contact_id in matched_ids
        and c.reported_village and c.village_in_registry is not False
    )

    report.pct_contacts_missing_age = _pct(missing_age, n_contacts)
    report.pct_contacts_missing_village = _pct(missing_village, n_contacts)
    report.pct_contacts_outside_community = _pct(outside, n_contacts)
    report.pct_contacts_matched = _pct(matched, n_contacts)
    raw = _pct(in_community_matched, in_community)
    report.pct_in_community_matched_raw = raw
    if raw is not None and raw > 100.0:
        report.pct_in_community_matched = 100.0
        report.in_community_match_capped = True
    else:
        report.pct_in_community_matched = raw
    return report


TABLE1_COLUMNS = (
    "community_id", "n_enumerated", "n_adults", "n_namers", "contacts_total",
    "pct_contacts_missing_age", "pct_contacts_missing_village",
    "pct_contacts_outside_community", "pct_contacts_matched",
    "pct_in_community_matched", "pct_in_community_matched_raw",
    "in_community_match_capped",
)

TABLE2_COLUMNS = (
    "community_id", "node_filter", "n_nodes", "n_undirected_edges",
    "cross_household_fraction", "average_degree", "transitivity",
    "reciprocity", "average_path_length", "top_cc_coverage",
)

ASSORTATIVITY_COLUMNS = ("community_id", *ASSORTATIVITY_ATTRIBUTES)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def emit_reports(reports, outdir) -> dict:
    """table1.csv, table2.csv, assortativity.csv, report.json for >= 1 community.

    Rows are sorted by community id; undefined metrics become empty
    cells.
    """
    if not reports:
        raise ValueError("need at least one community report")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    reports = sorted(reports, key=lambda r: r.community_id)

    paths = {
        "table1": outdir / "table1.csv",
        "table2": outdir / "table2.csv",
        "assortativity": outdir / "assortativity.csv",
        "json": outdir / "report.json",
    }

    with open(paths["table1"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE1_COLUMNS)
        for r in reports:
            d = r.to_dict()
            writer.writerow([_cell(d[col]) for col in TABLE1_COLUMNS])

    with open(paths["table2"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE2_COLUMNS)
        for r in reports:
            for node_filter in NODE_FILTERS:
                stats = r.graph_stats.get(node_filter)
                if stats is None:
                    continue
                row = {"community_id": r.community_id, "node_filter": node_filter, **stats}
                writer.writerow([_cell(row.get(col)) for col in TABLE2_COLUMNS])

    with open(paths["assortativity"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ASSORTATIVITY_COLUMNS)
        for r in reports:
            writer.writerow([
                r.community_id,
                *[_cell(r.assortativity.get(attr)) for attr in ASSORTATIVITY_ATTRIBUTES],
            ])

    payload = [r.to_dict() for r in reports]
    paths["json"].write_text(
        json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n",
        encoding="utf-8")
    return paths
