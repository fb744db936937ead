"""Canonical data model and CSV ingest for residents and contacts.

Ingest is deterministic: identical input bytes produce identical record
lists, and contact surrogate ids are derived from the community id and
the data-row ordinal (dropped rows still consume ordinals, so ids stay
stable under re-export).
"""

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import DataError, SchemaError

SEXES = ("female", "male")
DOMAINS = ("money", "health", "emotional", "free_time", "food")
MAX_CONTACTS_PER_DOMAIN = 6
ADULT_AGE = 15
AGE_MIN = 0
AGE_MAX = 120

COVARIATE_FIELDS = ("education", "occupation", "wealth_index", "alcohol_use", "contraception_use")

DEFAULT_RESIDENT_SCHEMA = {
    "id": "resident_id",
    "name": "name",
    "age": "age",
    "sex": "sex",
    "village": "village",
    "household": "household_id",
    "stable": "resident_6mo",
    "education": "education",
    "occupation": "occupation",
    "wealth_index": "wealth_index",
    "alcohol_use": "alcohol_use",
    "contraception_use": "contraception_use",
}
RESIDENT_REQUIRED = ("id", "name", "village", "household")

DEFAULT_CONTACT_SCHEMA = {
    "namer": "namer_id",
    "domain": "domain",
    "name": "name",
    "age": "age",
    "village": "village",
}
CONTACT_REQUIRED = ("namer", "domain", "name")


@dataclass
class ResidentRecord:
    resident_id: str
    raw_name: str
    village: str
    household_id: str
    age: int | None = None
    sex: str | None = None
    is_stable: bool = False
    covariates: dict = field(default_factory=dict)
    name_components: list = field(default_factory=list)
    nickname_tokens: list = field(default_factory=list)
    honorific_tokens: list = field(default_factory=list)
    unusable: bool = False
    village_in_registry: bool = True

    @property
    def is_adult(self) -> bool:
        return self.age is not None and self.age >= ADULT_AGE


@dataclass
class ContactRecord:
    contact_id: str
    namer_id: str
    domain: str
    raw_name: str
    reported_age: int | None = None
    reported_village: str | None = None
    imputed_sex: str | None = None
    name_components: list = field(default_factory=list)
    nickname_tokens: list = field(default_factory=list)
    honorific_tokens: list = field(default_factory=list)
    unusable: bool = False
    village_in_registry: bool | None = None


@dataclass
class CommunityDataset:
    community_id: str
    residents: list
    contacts: list
    village_registry: set

    def resident_index(self) -> dict:
        return {r.resident_id: r for r in self.residents}

    def shallow_copy(self) -> "CommunityDataset":
        return CommunityDataset(
            community_id=self.community_id,
            residents=[replace(r) for r in self.residents],
            contacts=[replace(c) for c in self.contacts],
            village_registry=set(self.village_registry),
        )


@dataclass
class LoadReport:
    path: str
    rows_in: int = 0
    records_out: int = 0
    dropped: int = 0
    warnings: list = field(default_factory=list)
    drop_reasons: dict = field(default_factory=dict)

    def warn(self, message: str) -> None:
        self.warnings.append(message)

    def drop(self, reason: str) -> None:
        self.dropped += 1
        self.drop_reasons[reason] = self.drop_reasons.get(reason, 0) + 1

    def consistent(self) -> bool:
        return self.rows_in == self.records_out + self.dropped


def contact_surrogate_id(community_id: str, ordinal: int) -> str:
    return f"{community_id}-C{ordinal:06d}"


def _resolve_schema(header, schema, required, default_schema, path):
    mapping = dict(default_schema)
    if schema:
        mapping.update(schema)
    for logical in required:
        col = mapping.get(logical)
        if col not in header:
            raise SchemaError(f"{path}: required column {col!r} (field {logical!r}) not found")
    return {k: v for k, v in mapping.items() if v in header}


def parse_age(raw: str | None, report: LoadReport, where: str) -> int | None:
    if raw is None or not raw.strip():
        return None
    try:
        age = int(raw.strip())
    except ValueError:
        report.warn(f"{where}: malformed age {raw!r} treated as missing")
        return None
    if not AGE_MIN <= age <= AGE_MAX:
        report.warn(f"{where}: age {age} outside [{AGE_MIN}, {AGE_MAX}] treated as missing")
        return None
    return age


def parse_sex(raw: str | None, report: LoadReport, where: str) -> str | None:
    if raw is None or not raw.strip():
        return None
    val = raw.strip().casefold()
    if val in {"f", "female"}:
        return "female"
    if val in {"m", "male"}:
        return "male"
    report.warn(f"{where}: unrecognized sex {raw!r} treated as missing")
    return None


def parse_bool(raw: str | None) -> bool:
    if raw is None:
        return False
    return raw.strip().casefold() in {"1", "true", "yes", "y"}


def parse_domain(raw: str | None) -> str | None:
    if raw is None:
        return None
    val = raw.strip().casefold().replace("-", "_").replace(" ", "_")
    return val if val in DOMAINS else None


def _read_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise SchemaError(f"{path}: empty file, header row required")
            header = list(reader.fieldnames)
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except csv.Error as exc:
        raise DataError(f"unparseable CSV {path}: {exc}") from exc
    return header, rows


def load_residents(path, schema=None) -> tuple[list, LoadReport]:
    """Resident records from a CSV file; duplicate resident ids are fatal."""
    header, rows = _read_rows(path)
    cols = _resolve_schema(header, schema, RESIDENT_REQUIRED, DEFAULT_RESIDENT_SCHEMA, path)
    report = LoadReport(path=str(path), rows_in=len(rows))
    records = []
    seen = set()
    for i, row in enumerate(rows):
        where = f"{path}:{i + 2}"
        rid = (row.get(cols["id"]) or "").strip()
        if not rid:
            report.drop("missing_id")
            report.warn(f"{where}: blank resident id, row dropped")
            continue
        if rid in seen:
            raise DataError(f"{where}: duplicate resident_id {rid!r}")
        seen.add(rid)
        covariates = {}
        for cov in COVARIATE_FIELDS:
            col = cols.get(cov)
            if col:
                val = (row.get(col) or "").strip()
                if val:
                    covariates[cov] = val
        records.append(ResidentRecord(
            resident_id=rid,
            raw_name=(row.get(cols["name"]) or "").strip(),
            village=(row.get(cols["village"]) or "").strip(),
            household_id=(row.get(cols["household"]) or "").strip(),
            age=parse_age(row.get(cols.get("age", "")), report, where),
            sex=parse_sex(row.get(cols.get("sex", "")), report, where),
            is_stable=parse_bool(row.get(cols.get("stable", ""))),
            covariates=covariates,
        ))
    report.records_out = len(records)
    return records, report


def load_contacts(path, residents, community_id, schema=None) -> tuple[list, LoadReport]:
    """Contact records from a CSV file, with surrogate ids assigned by row.

    Rows with a blank name, an unknown namer, a non-adult namer, or an
    unknown domain are dropped and counted.  A namer exceeding the
    per-domain cap keeps the extra rows but triggers a warning.
    """
    header, rows = _read_rows(path)
    cols = _resolve_schema(header, schema, CONTACT_REQUIRED, DEFAULT_CONTACT_SCHEMA, path)
    report = LoadReport(path=str(path), rows_in=len(rows))
    resident_by_id = {r.resident_id: r for r in residents}
    records = []
    domain_counts: dict = {}
    for i, row in enumerate(rows):
        where = f"{path}:{i + 2}"
        raw_name = (row.get(cols["name"]) or "").strip()
        if not raw_name:
            report.drop("empty_name")
            continue
        namer_id = (row.get(cols["namer"]) or "").strip()
        namer = resident_by_id.get(namer_id)
        if namer is None:
            report.drop("unknown_namer")
            report.warn(f"{where}: namer {namer_id!r} not found, row dropped")
            continue
        if not namer.is_adult:
            report.drop("non_adult_namer")
            report.warn(f"{where}: namer {namer_id!r} is not an adult, row dropped")
            continue
        domain = parse_domain(row.get(cols["domain"]))
        if domain is None:
            report.drop("unknown_domain")
            report.warn(f"{where}: unrecognized domain {row.get(cols['domain'])!r}, row dropped")
            continue
        key = (namer_id, domain)
        domain_counts[key] = domain_counts.get(key, 0) + 1
        if domain_counts[key] == MAX_CONTACTS_PER_DOMAIN + 1:
            report.warn(f"{where}: namer {namer_id!r} exceeds {MAX_CONTACTS_PER_DOMAIN} {domain} contacts")
        village = (row.get(cols.get("village", "")) or "").strip()
        records.append(ContactRecord(
            contact_id=contact_surrogate_id(community_id, i),
            namer_id=namer_id,
            domain=domain,
            raw_name=raw_name,
            reported_age=parse_age(row.get(cols.get("age", "")), report, where),
            reported_village=village or None,
        ))
    report.records_out = len(records)
    return records, report


def load_villages(path) -> set:
    """Village registry from a one-column CSV (header required)."""
    header, rows = _read_rows(path)
    col = header[0]
    return {v for v in ((row.get(col) or "").strip() for row in rows) if v}


def load_community(community_id, residents_path, contacts_path, villages_path=None,
                   resident_schema=None, contact_schema=None):
    """Assemble a CommunityDataset from its CSV files.

    The village registry is the provided villages file (if any) extended
    with the residents' village names, so the registry always covers the
    census side.
    """
    residents, res_report = load_residents(residents_path, resident_schema)
    contacts, con_report = load_contacts(contacts_path, residents, community_id, contact_schema)
    registry = load_villages(villages_path) if villages_path else set()
    dataset = CommunityDataset(
        community_id=community_id,
        residents=residents,
        contacts=contacts,
        village_registry=registry,
    )
    return dataset, {"residents": res_report, "contacts": con_report}


def write_residents_csv(residents, path) -> None:
    fields = ["resident_id", "name", "age", "sex", "village", "household_id", "resident_6mo",
              *COVARIATE_FIELDS]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for r in residents:
            writer.writerow([
                r.resident_id,
                r.raw_name,
                "" if r.age is None else r.age,
                "" if r.sex is None else r.sex,
                r.village,
                r.household_id,
                "1" if r.is_stable else "0",
                *[r.covariates.get(cov, "") for cov in COVARIATE_FIELDS],
            ])


def write_contacts_csv(contacts, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["namer_id", "domain", "name", "age", "village"])
        for c in contacts:
            writer.writerow([
                c.namer_id,
                c.domain,
                c.raw_name,
                "" if c.reported_age is None else c.reported_age,
                c.reported_village or "",
            ])


def write_villages_csv(registry, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["village"])
        for v in sorted(registry):
            writer.writerow([v])


def export_community(dataset, outdir) -> dict:
    """Canonical three-file export; returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "residents": outdir / "residents.csv",
        "contacts": outdir / "contacts.csv",
        "villages": outdir / "villages.csv",
    }
    write_residents_csv(dataset.residents, paths["residents"])
    write_contacts_csv(dataset.contacts, paths["contacts"])
    write_villages_csv(dataset.village_registry, paths["villages"])
    return paths
