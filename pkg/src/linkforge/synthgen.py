"""Synthetic census communities with planted ground-truth contact links.

Communities carry realistic structure (villages, households, ages,
covariates) and contacts are generated by sampling true alters with
village/age homophily, then corrupting fields per a profile.  The truth
file maps every contact to its alter (or OUTSIDE), which is what the
quantitative acceptance tests score against.  Corruption touches contact
records only; resident records stay clean.
"""

import csv
import string
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .records import DOMAINS, MAX_CONTACTS_PER_DOMAIN, contact_surrogate_id

OUTSIDE = "OUTSIDE"

VILLAGE_STEMS = (
    "nsiika", "bugono", "kamuge", "kitwe", "rubaare", "nyamrisra",
    "magunga", "kisegi", "merikit", "kadama", "ruhoko", "mitooma",
)
EXTERNAL_PLACES = ("kampala", "nairobi", "mbale", "mbarara", "kisumu", "jinja", "eldoret")
NICKNAME_PREFIXES = ("min", "wuon", "nyar", "nya")
ROMAN = {"1": "I", "2": "II", "3": "III", "4": "IV", "5": "V", "6": "VI",
         "7": "VII", "8": "VIII", "9": "IX", "10": "X", "11": "XI", "12": "XII"}

EDUCATION_LEVELS = ("none", "primary", "secondary", "tertiary")
OCCUPATIONS = ("farmer", "trader", "fisher", "teacher", "boda", "none")


@dataclass
class CorruptionProfile:
    """Field-corruption rates applied to generated contacts."""

    typo_rate: float = 0.0            # per name token
    token_drop_rate: float = 0.0
    nickname_prefix_rate: float = 0.0
    missing_age_rate: float = 0.0
    age_jitter_sd: float = 0.0        # years
    village_typo_rate: float = 0.0
    out_of_community_rate: float = 0.0
    domain_means: dict = field(default_factory=lambda: {d: 0.9 for d in DOMAINS})

    def __post_init__(self):
        for f in fields(self):
            if f.name in ("domain_means", "age_jitter_sd"):
                continue
            val = getattr(self, f.name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{f.name} must be in [0, 1], got {val}")
        if self.age_jitter_sd < 0:
            raise ValueError("age_jitter_sd must be nonnegative")

    @classmethod
    def zero_corruption(cls) -> "CorruptionProfile":
        return cls()

    @classmethod
    def moderate(cls) -> "CorruptionProfile":
        return cls(typo_rate=0.05, token_drop_rate=0.05, nickname_prefix_rate=0.04,
                   missing_age_rate=0.3, age_jitter_sd=2.0, village_typo_rate=0.08,
                   out_of_community_rate=0.15)


@dataclass
class SyntheticCommunity:
    community_id: str
    resident_rows: list
    contact_rows: list
    villages: list
    truth: dict   # contact_id -> resident_id | OUTSIDE


def load_name_bank(bank: str = "east_africa"):
    """(given_names, sex_by_given, family_names) from a packaged bank file."""
    path = resources.files("linkforge").joinpath("data", f"names_{bank}.csv")
    given, family = [], []
    sex_by_given = {}
    with path.open(encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            name = row["name"].strip()
            if row["kind"] == "given":
                given.append(name)
                sex_by_given[name] = row["sex"].strip()
            else:
                family.append(name)
    return given, sex_by_given, family


def _title(tokens) -> str:
    return " ".join(t.capitalize() for t in tokens)


def _typo(token: str, rng) -> str:
    if not token:
        return token
    ops = ["substitute", "insert"]
    if len(token) >= 2:
        ops += ["delete", "transpose"]
    op = ops[rng.integers(len(ops))]
    i = int(rng.integers(len(token)))
    letters = string.ascii_lowercase
    if op == "substitute":
        return token[:i] + letters[rng.integers(26)] + token[i + 1 :]
    if op == "insert":
        return token[:i] + letters[rng.integers(26)] + token[i:]
    if op == "delete":
        return token[:i] + token[i + 1 :]
    j = min(i + 1, len(token) - 1)
    lst = list(token)
    lst[i], lst[j] = lst[j], lst[i]
    return "".join(lst)


def _romanize_village(village: str) -> str:
    tokens = village.split()
    return " ".join(ROMAN.get(t, t) for t in tokens)


def _sample_age(rng) -> int:
    if rng.uniform() < 0.45:
        return int(rng.integers(0, 15))
    return min(90, 15 + int(rng.exponential(18.0)))


def _make_name(rng, given, sex_by_given, family, sex):
    pool = [g for g in given if sex_by_given[g] == sex]
    comps = [pool[rng.integers(len(pool))]]
    u = rng.uniform()
    if u < 0.35:
        comps.append(given[rng.integers(len(given))])
    comps.append(family[rng.integers(len(family))])
    if rng.uniform() < 0.05:
        comps.append(family[rng.integers(len(family))])
    if rng.uniform() < 0.02:
        comps = comps[:1]
    return comps


def generate_community(community_id: str, n_residents: int, n_villages: int,
                       profile: CorruptionProfile, seed: int,
                       name_bank: str = "east_africa") -> SyntheticCommunity:
    """One community plus its truth map, fully determined by the seed."""
    if n_residents < 10:
        raise ValueError("need at least 10 residents")
    rng = np.random.default_rng(seed)
    given, sex_by_given, family = load_name_bank(name_bank)

    n_stems = len(VILLAGE_STEMS)
    villages = [f"{VILLAGE_STEMS[i % n_stems]} {i // n_stems + 1}" for i in range(n_villages)]

    resident_rows = []
    components = []
    village_idx = np.empty(n_residents, np.int64)
    ages = np.empty(n_residents, np.int64)
    household = 0
    i = 0
    while i < n_residents:
        size = min(1 + int(rng.poisson(3.0)), n_residents - i)
        v = int(rng.integers(n_villages))
        wealth = str(1 + int(rng.integers(5)))
        for _ in range(size):
            sex = ("female", "male")[int(rng.integers(2))]
            age = _sample_age(rng)
            comps = _make_name(rng, given, sex_by_given, family, sex)
            adult = age >= 15
            education = EDUCATION_LEVELS[int(rng.integers(len(EDUCATION_LEVELS)))] if adult else (
                "primary" if age >= 6 else "none")
            row = {
                "resident_id": f"{community_id}-R{i:05d}",
                "name": _title(comps),
                "age": age,
                "sex": sex,
                "village": _title(villages[v].split()),
                "household_id": f"{community_id}-H{household:05d}",
                "resident_6mo": "1" if rng.uniform() < 0.9 else "0",
                "education": education,
                "occupation": OCCUPATIONS[int(rng.integers(len(OCCUPATIONS)))] if adult else "student",
                "wealth_index": wealth,
                "alcohol_use": ("yes", "no")[int(rng.integers(2))] if adult and rng.uniform() > 0.05 else "",
                "contraception_use": ("yes", "no")[int(rng.integers(2))] if adult and rng.uniform() > 0.1 else "",
            }
            resident_rows.append(row)
            components.append(comps)
            village_idx[i] = v
            ages[i] = age
            i += 1
        household += 1

    is_adult = ages >= 15
    child_weight = np.where(is_adult, 1.0, 0.3)

    contact_rows = []
    truth = {}
    domain_means = profile.domain_means
    for namer in range(n_residents):
        if not is_adult[namer]:
            continue
        same_village = (village_idx == village_idx[namer]).astype(np.float64)
        affinity = np.exp(-np.abs(ages - ages[namer]) / 10.0)
        weights = (1.0 + 4.0 * same_village + 2.0 * affinity) * child_weight
        weights[namer] = 0.0
        weights /= weights.sum()
        for domain in DOMAINS:
            n_named = min(int(rng.poisson(domain_means.get(domain, 0.9))),
                          MAX_CONTACTS_PER_DOMAIN)
            for _ in range(n_named):
                ordinal = len(contact_rows)
                contact_id = contact_surrogate_id(community_id, ordinal)
                if rng.uniform() < profile.out_of_community_rate:
                    sex = ("female", "male")[int(rng.integers(2))]
                    comps = _make_name(rng, given, sex_by_given, family, sex)
                    age_val = int(rng.integers(15, 80)) if rng.uniform() < 0.6 else None
                    village = (_title([EXTERNAL_PLACES[int(rng.integers(len(EXTERNAL_PLACES)))]])
                               if rng.uniform() < 0.7 else "")
                    truth[contact_id] = OUTSIDE
                else:
                    alter = int(rng.choice(n_residents, p=weights))
                    comps = list(components[alter])
                    if len(comps) >= 2 and rng.uniform() < profile.token_drop_rate:
                        comps.pop(int(rng.integers(len(comps))))
                    comps = [
                        _typo(t, rng) if rng.uniform() < profile.typo_rate else t
                        for t in comps
                    ]
                    if rng.uniform() < profile.nickname_prefix_rate:
                        comps = [NICKNAME_PREFIXES[int(rng.integers(len(NICKNAME_PREFIXES)))]] + comps
                    if rng.uniform() < profile.missing_age_rate:
                        age_val = None
                    else:
                        jitter = rng.normal(0.0, profile.age_jitter_sd) if profile.age_jitter_sd else 0.0
                        age_val = int(np.clip(round(ages[alter] + jitter), 0, 120))
                    village = villages[village_idx[alter]]
                    if rng.uniform() < profile.village_typo_rate:
                        if rng.uniform() < 0.5:
                            village = _romanize_village(village)
                        else:
                            tokens = village.split()
                            k = int(rng.integers(len(tokens)))
                            tokens[k] = _typo(tokens[k], rng)
                            village = " ".join(tokens)
                    village = _title(village.split())
                    truth[contact_id] = resident_rows[alter]["resident_id"]
                contact_rows.append({
                    "namer_id": resident_rows[namer]["resident_id"],
                    "domain": domain,
                    "name": _title(comps),
                    "age": "" if age_val is None else age_val,
                    "village": village,
                })

    return SyntheticCommunity(
        community_id=community_id,
        resident_rows=resident_rows,
        contact_rows=contact_rows,
        villages=[_title(v.split()) for v in villages],
        truth=truth,
    )


def sex_table_rows(name_bank: str = "east_africa") -> list:
    given, sex_by_given, _ = load_name_bank(name_bank)
    return [(g, sex_by_given[g]) for g in given]


def write_community(synth: SyntheticCommunity, outdir) -> dict:
    """records-module CSVs, truth.csv, and ready-to-use lookup tables."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "residents": outdir / "residents.csv",
        "contacts": outdir / "contacts.csv",
        "villages": outdir / "villages.csv",
        "truth": outdir / "truth.csv",
    }
    res_fields = list(synth.resident_rows[0].keys())
    with open(paths["residents"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=res_fields)
        writer.writeheader()
        writer.writerows(synth.resident_rows)
    with open(paths["contacts"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["namer_id", "domain", "name", "age", "village"])
        writer.writeheader()
        writer.writerows(synth.contact_rows)
    with open(paths["villages"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["village"])
        for v in synth.villages:
            writer.writerow([v])
    with open(paths["truth"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["contact_id", "true_resident_id"])
        for cid, rid in synth.truth.items():
            writer.writerow([cid, rid])

    tables_dir = outdir / "tables"
    tables_dir.mkdir(exist_ok=True)
    src = resources.files("linkforge").joinpath("data")
    for name in ("nicknames.csv", "honorifics.csv"):
        (tables_dir / name).write_text(
            src.joinpath(name).read_text(encoding="utf-8"), encoding="utf-8")
    with open(tables_dir / "sex_names.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "sex"])
        writer.writerows(sex_table_rows())
    (tables_dir / "village_fixes.csv").write_text("variant,canonical\n", encoding="utf-8")
    paths["tables"] = tables_dir
    return paths


def load_truth(path) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["contact_id"]: row["true_resident_id"] for row in csv.DictReader(fh)}
