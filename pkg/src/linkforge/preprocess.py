"""Cleaning pipeline: name standardization, lookups, sex and village fixes.

All transforms are pure per-record functions driven by lookup tables;
re-running the pipeline on its own output is a fixed point.  Nickname
prefixes (e.g. "nyar" = daughter-of) and honorifics are pulled out of the
component list and stored separately; resident sex from the census is
never overwritten, while contact sex is imputed from the first name.
"""

import csv
import itertools
import unicodedata
from dataclasses import dataclass, field

from .errors import DataError
from .records import CommunityDataset
from .similarity import jaro_winkler

MAX_NAME_COMPONENTS = 4
VILLAGE_SNAP_THRESHOLD = 0.95

DEFAULT_ROMAN_NUMERALS = {
    "i": "1", "ii": "2", "iii": "3", "iv": "4", "v": "5", "vi": "6",
    "vii": "7", "viii": "8", "ix": "9", "x": "10", "xi": "11", "xii": "12",
}


@dataclass
class LookupTables:
    """Normalized lookup tables driving the cleaning passes."""

    nickname_prefixes: dict = field(default_factory=dict)   # token -> semantic tag
    honorifics: set = field(default_factory=set)
    sex_by_first_name: dict = field(default_factory=dict)
    village_fixes: dict = field(default_factory=dict)       # variant -> canonical
    roman_numeral_map: dict = field(default_factory=lambda: dict(DEFAULT_ROMAN_NUMERALS))


@dataclass
class StandardizedName:
    components: list
    nickname_tokens: list
    honorific_tokens: list

    @property
    def unusable(self) -> bool:
        return not self.components


@dataclass(frozen=True)
class NameVariantSet:
    owner_id: str
    variants: tuple


@dataclass
class PreprocessReport:
    community_id: str
    residents_processed: int = 0
    contacts_processed: int = 0
    nickname_fraction: float = 0.0
    village_fix_fraction: float = 0.0
    sex_imputed_fraction: float = 0.0
    unusable_residents: int = 0
    unusable_contacts: int = 0
    out_of_registry_contacts: int = 0
    registry_added_from_residents: list = field(default_factory=list)


def _read_table(path, n_cols):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        return [row for row in reader if row and any(cell.strip() for cell in row[:n_cols])]


def load_lookup_tables(nicknames_path=None, honorifics_path=None,
                       sex_names_path=None, village_fixes_path=None) -> LookupTables:
    """Tables from CSV files; keys are trimmed and case-folded on load.

    A first name mapped to both sexes in the input file is a validation
    error.
    """
    tables = LookupTables()
    if nicknames_path:
        for row in _read_table(nicknames_path, 2):
            prefix = row[0].strip().casefold()
            tag = row[1].strip() if len(row) > 1 else ""
            if prefix:
                tables.nickname_prefixes[prefix] = tag
    if honorifics_path:
        for row in _read_table(honorifics_path, 1):
            token = normalize_text(row[0])
            if token:
                tables.honorifics.add(token)
    if sex_names_path:
        for row in _read_table(sex_names_path, 2):
            name = row[0].strip().casefold()
            sex = row[1].strip().casefold() if len(row) > 1 else ""
            sex = {"f": "female", "m": "male"}.get(sex, sex)
            if sex not in {"female", "male"}:
                raise DataError(f"{sex_names_path}: invalid sex {row[1]!r} for name {row[0]!r}")
            existing = tables.sex_by_first_name.get(name)
            if existing is not None and existing != sex:
                raise DataError(f"{sex_names_path}: name {row[0]!r} mapped to both sexes")
            tables.sex_by_first_name[name] = sex
    if village_fixes_path:
        for row in _read_table(village_fixes_path, 2):
            variant = normalize_text(row[0])
            canonical = normalize_text(row[1]) if len(row) > 1 else ""
            if variant and canonical:
                tables.village_fixes[variant] = canonical
    return tables


def _strip_punctuation(text: str) -> str:
    return "".join(ch for ch in text if not unicodedata.category(ch).startswith("P"))


def normalize_text(text: str) -> str:
    """Trim, case-fold, delete punctuation, collapse internal whitespace."""
    return " ".join(_strip_punctuation(text.casefold()).split())


def standardize_name(raw: str, tables: LookupTables) -> StandardizedName:
    """Tokenize a free-text name, extracting nicknames and honorifics.

    At most four components are kept; overflow tokens are concatenated
    into the fourth.
    """
    components = []
    nicknames = []
    honorifics = []
    for token in normalize_text(raw).split():
        if token in tables.honorifics:
            honorifics.append(token)
        elif token in tables.nickname_prefixes:
            nicknames.append(token)
        else:
            components.append(token)
    if len(components) > MAX_NAME_COMPONENTS:
        head = components[: MAX_NAME_COMPONENTS - 1]
        head.append("".join(components[MAX_NAME_COMPONENTS - 1 :]))
        components = head
    return StandardizedName(components, nicknames, honorifics)


def permute_name_variants(components, owner_id: str = "") -> NameVariantSet:
    """All distinct orderings of the components (k <= 4, so at most 24)."""
    if not 1 <= len(components) <= MAX_NAME_COMPONENTS:
        raise ValueError(f"need 1..{MAX_NAME_COMPONENTS} components, got {len(components)}")
    variants = tuple(dict.fromkeys(itertools.permutations(components)))
    return NameVariantSet(owner_id=owner_id, variants=variants)


def impute_sex(first_component: str | None, table: dict) -> str | None:
    """Lookup-table sex imputation; misses stay missing, never guessed."""
    if not first_component:
        return None
    return table.get(first_component)


def standardize_village(raw: str, tables: LookupTables, registry: set,
                        fuzzy: bool = True) -> tuple[str, bool, bool]:
    """(canonical, in_registry, changed) for one village string.

    Already-canonical names are never remapped.  Otherwise: roman-numeral
    token normalization, then the exact fix table, then (when *fuzzy*) a
    conservative snap to the registry (similarity >= 0.95 with a unique
    argmax); failing all three the normalized input passes through
    flagged out-of-registry.  Change counting is relative to the
    normalized input, so pure case or whitespace cleanup does not count
    as a fix.
    """
    base = normalize_text(raw)
    if base in registry:
        return base, True, False
    current = " ".join(tables.roman_numeral_map.get(tok, tok) for tok in base.split())
    if current in registry:
        return current, True, current != base
    current = tables.village_fixes.get(current, current)
    if current in registry:
        return current, True, current != base
    if fuzzy and registry and current:
        scored = [(jaro_winkler(current, cand), cand) for cand in sorted(registry)]
        best_sim, best = max(scored)
        if best_sim >= VILLAGE_SNAP_THRESHOLD and sum(s == best_sim for s, _ in scored) == 1:
            return best, True, True
    return current, False, current != base


def preprocess_dataset(dataset: CommunityDataset, tables: LookupTables):
    """Standardized copy of the dataset plus a per-community report.

    Residents are standardized first (no fuzzy snapping: the census side
    defines the community's villages) and their villages extend the
    registry; contacts are then standardized against the full registry.
    Idempotent at the token level: a second pass reproduces the same
    output.
    """
    out = dataset.shallow_copy()
    registry = {normalize_text(v) for v in out.village_registry if normalize_text(v)}
    report = PreprocessReport(community_id=out.community_id)

    added = []
    for r in out.residents:
        std = standardize_name(r.raw_name, tables)
        r.name_components = std.components
        r.nickname_tokens = std.nickname_tokens
        r.honorific_tokens = std.honorific_tokens
        r.unusable = std.unusable
        if r.unusable:
            report.unusable_residents += 1
        village, in_registry, _ = standardize_village(r.village, tables, registry, fuzzy=False)
        if not in_registry and village:
            added.append(village)
        r.village = village
        r.village_in_registry = True
    registry.update(added)
    report.registry_added_from_residents = sorted(set(added))

    for variant, canonical in tables.village_fixes.items():
        if canonical not in registry:
            raise DataError(
                f"village fix target {canonical!r} (from {variant!r}) not in the registry"
            )

    nicknamed = 0
    village_fixed = 0
    villages_seen = 0
    imputed = 0
    for c in out.contacts:
        std = standardize_name(c.raw_name, tables)
        c.name_components = std.components
        c.nickname_tokens = std.nickname_tokens
        c.honorific_tokens = std.honorific_tokens
        c.unusable = std.unusable
        if c.unusable:
            report.unusable_contacts += 1
        if std.nickname_tokens:
            nicknamed += 1
        c.imputed_sex = impute_sex(
            std.components[0] if std.components else None, tables.sex_by_first_name
        )
        if c.imputed_sex is not None:
            imputed += 1
        if c.reported_village:
            villages_seen += 1
            village, in_registry, changed = standardize_village(c.reported_village, tables, registry)
            c.reported_village = village or None
            c.village_in_registry = in_registry
            if changed:
                village_fixed += 1
            if not in_registry:
                report.out_of_registry_contacts += 1
        else:
            c.reported_village = None
            c.village_in_registry = None

    out.village_registry = registry
    report.residents_processed = len(out.residents)
    report.contacts_processed = len(out.contacts)
    if out.contacts:
        report.nickname_fraction = nicknamed / len(out.contacts)
        report.sex_imputed_fraction = imputed / len(out.contacts)
    if villages_seen:
        report.village_fix_fraction = village_fixed / villages_seen
    return out, report
