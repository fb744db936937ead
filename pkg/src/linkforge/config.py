"""Pipeline configuration: a TOML file validated into a typed structure.

Relative paths resolve against the config file's directory.  The match
command requires exactly one config source: inline weights+quantile, a
match-config JSON file, or a tuning-session directory (its
chosen_config.json).
"""

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .epilink import MatchConfig
from .errors import ConfigError
from .matcher import DEFAULT_PAIR_BUDGET
from .netgraph import NODE_FILTERS

DEFAULT_PORT = 8571


@dataclass
class CommunitySpec:
    id: str
    residents: Path
    contacts: Path
    villages: Path | None = None
    truth: Path | None = None


@dataclass
class PipelineConfig:
    base_dir: Path
    output_dir: Path
    seed: int = 0
    threads: int = 0
    tables: dict = field(default_factory=dict)
    communities: list = field(default_factory=list)
    resident_columns: dict | None = None
    contact_columns: dict | None = None
    match_inline: MatchConfig | None = None
    match_config_file: Path | None = None
    match_session: Path | None = None
    pair_budget: int = DEFAULT_PAIR_BUDGET
    frequency_scope: str = "community"
    tune_n_contacts: int = 1000
    tune_n_weights: int = 1000
    tune_min_tpr: float = 0.85
    node_filters: tuple = ("all", "adult", "stable_adult")
    path_sources: int | None = None
    service_host: str = "127.0.0.1"
    service_port: int = DEFAULT_PORT

    def resolve_match_config(self) -> MatchConfig:
        sources = [s for s in (self.match_inline, self.match_config_file, self.match_session)
                   if s is not None]
        if len(sources) != 1:
            raise ConfigError(
                "match needs exactly one config source: [match] weights+quantile, "
                "config_file, or session")
        if self.match_inline is not None:
            return self.match_inline
        if self.match_config_file is not None:
            return MatchConfig.from_json_file(self.match_config_file)
        chosen = self.match_session / "chosen_config.json"
        if not chosen.exists():
            raise ConfigError(f"no chosen_config.json in session {self.match_session} "
                              "(run the tuning review first)")
        return MatchConfig.from_json_file(chosen)


def _path(base: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


def load_pipeline_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc

    base = path.parent.resolve()
    project = raw.get("project", {})
    cfg = PipelineConfig(
        base_dir=base,
        output_dir=_path(base, project.get("output_dir", "out")),
        seed=int(project.get("seed", 0)),
        threads=int(project.get("threads", 0)),
    )

    for key, value in raw.get("tables", {}).items():
        if key not in {"nicknames", "honorifics", "sex_names", "village_fixes"}:
            raise ConfigError(f"unknown [tables] key {key!r}")
        cfg.tables[key] = _path(base, value)

    for entry in raw.get("community", []):
        try:
            spec = CommunitySpec(
                id=str(entry["id"]),
                residents=_path(base, entry["residents"]),
                contacts=_path(base, entry["contacts"]),
                villages=_path(base, entry["villages"]) if "villages" in entry else None,
                truth=_path(base, entry["truth"]) if "truth" in entry else None,
            )
        except KeyError as exc:
            raise ConfigError(f"[[community]] entry missing key {exc}") from exc
        cfg.communities.append(spec)

    columns = raw.get("columns", {})
    cfg.resident_columns = columns.get("residents")
    cfg.contact_columns = columns.get("contacts")

    match = raw.get("match", {})
    if "weights" in match or "quantile" in match:
        if not ("weights" in match and "quantile" in match):
            raise ConfigError("[match] inline config needs both weights and quantile")
        cfg.match_inline = MatchConfig(weights=tuple(float(w) for w in match["weights"]),
                                       quantile=float(match["quantile"]))
    if "config_file" in match:
        cfg.match_config_file = _path(base, match["config_file"])
    if "session" in match:
        cfg.match_session = _path(base, match["session"])
    cfg.pair_budget = int(match.get("pair_budget", DEFAULT_PAIR_BUDGET))
    cfg.frequency_scope = match.get("frequency_scope", "community")
    if cfg.frequency_scope not in {"community", "global"}:
        raise ConfigError("frequency_scope must be 'community' or 'global'")

    tune = raw.get("tune", {})
    cfg.tune_n_contacts = int(tune.get("n_contacts", 1000))
    cfg.tune_n_weights = int(tune.get("n_weights", 1000))
    cfg.tune_min_tpr = float(tune.get("min_tpr", 0.85))

    network = raw.get("network", {})
    filters = tuple(network.get("node_filters", NODE_FILTERS))
    for f in filters:
        if f not in NODE_FILTERS:
            raise ConfigError(f"unknown node filter {f!r}")
    cfg.node_filters = filters
    sources = int(network.get("path_sources", 0))
    cfg.path_sources = sources if sources > 0 else None

    service = raw.get("service", {})
    cfg.service_host = service.get("host", "127.0.0.1")
    cfg.service_port = int(service.get("port", DEFAULT_PORT))
    return cfg


def validate_paths(cfg: PipelineConfig) -> list:
    """Existence check for every referenced input path; returns problems."""
    problems = []
    if not cfg.communities:
        problems.append("no [[community]] entries")
    for spec in cfg.communities:
        for label, p in (("residents", spec.residents), ("contacts", spec.contacts),
                         ("villages", spec.villages), ("truth", spec.truth)):
            if p is not None and not p.exists():
                problems.append(f"community {spec.id}: {label} file {p} does not exist")
    for key, p in cfg.tables.items():
        if p is not None and not p.exists():
            problems.append(f"tables.{key}: {p} does not exist")
    if cfg.match_config_file is not None and not cfg.match_config_file.exists():
        problems.append(f"match.config_file {cfg.match_config_file} does not exist")
    if cfg.match_session is not None and not cfg.match_session.exists():
        problems.append(f"match.session {cfg.match_session} does not exist")
    return problems
