"""Hyperparameter search over (weights, quantile) with human-labeled evaluation.

A tuning session samples contacts, runs the blocked stage once to get
per-pair similarity vectors, then evaluates every sampled weight vector
against every quantile in the grid.  Classified pair sets are stored as
packed bitsets over a shared pair universe, so one labeling pass scores
all configurations.  Labels attach to pairs and are append-only with
last-write-wins semantics.
"""

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .epilink import MatchConfig, average_frequency, field_columns, p_weights_from, \
    solve_error_rates, threshold_from_scores
from .errors import DataError, SelectionError
from .matcher import iter_blocked_pairs, prepare_community, score_batch
from .similarity import FIELDS

DEFAULT_QUANTILE_GRID = (0.92, 0.93, 0.94, 0.95, 0.96, 0.97, 0.98)
LABELS = ("match", "nonmatch", "unsure")
_BITSET_MAGIC = b"LFCB\x01"
_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)

PAIR_SEP = "|"


def pair_id_for(resident_id: str, contact_id: str) -> str:
    return f"{resident_id}{PAIR_SEP}{contact_id}"


@dataclass
class TuningSession:
    session_id: str
    community_id: str
    seed: int
    quantile_grid: tuple
    sampled_contact_ids: list
    configs: list                    # MatchConfig, weight-major then quantile
    pair_ids: list
    pair_resident_ids: list
    pair_contact_ids: list
    sims: np.ndarray                 # (n_pairs, 7)
    classifications: np.ndarray      # (n_configs, ceil(n_pairs/8)) packed uint8
    score_mean: np.ndarray
    classified_fraction: np.ndarray
    records_view: dict               # record id -> display dict
    labels: dict = field(default_factory=dict)   # pair_id -> latest row
    label_log: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def n_pairs(self) -> int:
        return len(self.pair_ids)

    @property
    def n_configs(self) -> int:
        return len(self.configs)

    def pair_index(self, pair_id: str) -> int:
        try:
            return self._pair_pos[pair_id]
        except AttributeError:
            self._pair_pos = {p: i for i, p in enumerate(self.pair_ids)}
            return self._pair_pos[pair_id]

    def classified_bits(self, config_id: int) -> np.ndarray:
        return np.unpackbits(self.classifications[config_id], count=self.n_pairs).astype(bool)

    def config_bits_at(self, pair_positions: np.ndarray) -> np.ndarray:
        """(n_configs, len(positions)) classification bits at given pairs."""
        bytes_idx = pair_positions // 8
        shifts = 7 - (pair_positions % 8)
        return (self.classifications[:, bytes_idx] >> shifts) & 1


@dataclass
class ConfigMetrics:
    config_id: int
    tp: int
    fp: int
    fn: int
    tn: int
    tpr: float | None
    fpr: float | None
    labeled_coverage: float | None

    def to_dict(self) -> dict:
        return {
            "config_id": self.config_id, "tp": self.tp, "fp": self.fp,
            "fn": self.fn, "tn": self.tn, "tpr": self.tpr, "fpr": self.fpr,
            "labeled_coverage": self.labeled_coverage,
        }


def sample_weights(rng, n_weights: int) -> np.ndarray:
    """Uniform draws from the 7-simplex via normalized unit-rate exponentials."""
    raw = rng.exponential(1.0, size=(n_weights, len(FIELDS)))
    return raw / raw.sum(axis=1, keepdims=True)


def _display_view(record, kind: str) -> dict:
    if kind == "resident":
        return {
            "kind": kind, "id": record.resident_id, "name": record.raw_name,
            "components": list(record.name_components), "age": record.age,
            "sex": record.sex, "village": record.village,
            "household": record.household_id,
        }
    return {
        "kind": kind, "id": record.contact_id, "name": record.raw_name,
        "components": list(record.name_components), "age": record.reported_age,
        "sex": record.imputed_sex, "village": record.reported_village,
        "namer": record.namer_id, "domain": record.domain,
    }


def sample_session(dataset, n_contacts: int = 1000, n_weights: int = 1000,
                   quantile_grid=DEFAULT_QUANTILE_GRID, seed: int = 0,
                   session_id: str | None = None) -> TuningSession:
    """Build a session: sample contacts, block, score every configuration.

    The pair universe is the blocked candidate set (self pairs excluded);
    configurations are ordered weight-major then by quantile.
    """
    rng = np.random.default_rng(seed)
    prep = prepare_community(dataset)
    usable = prep.usable_contact_indices()
    warnings = []
    if len(usable) < n_contacts:
        warnings.append(
            f"only {len(usable)} usable contacts available, requested {n_contacts}; using all")
        sampled = np.sort(usable)
    else:
        sampled = np.sort(rng.choice(usable, size=n_contacts, replace=False))

    weights_mat = sample_weights(rng, n_weights)

    chunks = []
    for pair_res, pair_con, _ in iter_blocked_pairs(prep, sampled):
        keep = prep.con_namer_idx[pair_con] != pair_res
        chunks.append((pair_res[keep], pair_con[keep]))
    if chunks:
        pair_res = np.concatenate([c[0] for c in chunks])
        pair_con = np.concatenate([c[1] for c in chunks])
    else:
        pair_res = np.empty(0, np.int64)
        pair_con = np.empty(0, np.int64)
    n_pairs = len(pair_res)

    sims, _ = score_batch(prep, pair_res, pair_con, np.ones(len(FIELDS)))
    present = ~np.isnan(sims)
    sims_filled = np.nan_to_num(sims, nan=0.0)

    cols = field_columns(dataset)
    freqs = np.array([average_frequency(cols[name])[0] for name in FIELDS])

    n_configs = n_weights * len(quantile_grid)
    row_bytes = (n_pairs + 7) // 8
    classifications = np.zeros((n_configs, row_bytes), np.uint8)
    configs = []
    score_sum = np.zeros(n_pairs)
    score_cnt = np.zeros(n_pairs)
    classified_counts = np.zeros(n_pairs)
    for wi in range(n_weights):
        w = weights_mat[wi]
        p = p_weights_from(freqs, solve_error_rates(w, freqs))
        num = sims_filled @ p
        den = present @ p
        with np.errstate(invalid="ignore"):
            scores = np.where(den > 0, num / den, np.nan)
        defined = ~np.isnan(scores)
        score_sum[defined] += scores[defined]
        score_cnt[defined] += 1
        defined_scores = scores[defined]
        for qi, q in enumerate(quantile_grid):
            cfg_idx = wi * len(quantile_grid) + qi
            configs.append(MatchConfig(weights=tuple(float(x) for x in w), quantile=float(q)))
            fit = threshold_from_scores(defined_scores, q)
            with np.errstate(invalid="ignore"):
                classified = scores >= fit.t
            classified_counts += classified
            if n_pairs:
                classifications[cfg_idx] = np.packbits(classified)

    with np.errstate(invalid="ignore"):
        score_mean = np.where(score_cnt > 0, score_sum / np.maximum(score_cnt, 1), np.nan)
    classified_fraction = classified_counts / max(n_configs, 1)

    records_view = {}
    residents = dataset.residents
    contacts = dataset.contacts
    for r_idx in set(pair_res.tolist()):
        rec = residents[r_idx]
        records_view[rec.resident_id] = _display_view(rec, "resident")
    for c_idx in set(pair_con.tolist()):
        rec = contacts[c_idx]
        records_view[rec.contact_id] = _display_view(rec, "contact")

    res_ids = [prep.res_ids[r] for r in pair_res]
    con_ids = [prep.con_ids[c] for c in pair_con]
    return TuningSession(
        session_id=session_id or f"{dataset.community_id}-tune-{seed}",
        community_id=dataset.community_id,
        seed=seed,
        quantile_grid=tuple(quantile_grid),
        sampled_contact_ids=[prep.con_ids[int(c)] for c in sampled],
        configs=configs,
        pair_ids=[pair_id_for(r, c) for r, c in zip(res_ids, con_ids)],
        pair_resident_ids=res_ids,
        pair_contact_ids=con_ids,
        sims=sims,
        classifications=classifications,
        score_mean=score_mean,
        classified_fraction=classified_fraction,
        records_view=records_view,
        warnings=warnings,
    )


def apply_label(session: TuningSession, pair_id: str, label: str, annotator: str,
                timestamp: float | None = None) -> dict:
    """Record a label for a pair; relabeling keeps the prior rows as history."""
    if label not in LABELS:
        raise ValueError(f"label must be one of {LABELS}, got {label!r}")
    try:
        session.pair_index(pair_id)
    except KeyError:
        raise KeyError(f"unknown pair {pair_id!r}") from None
    row = {
        "pair_id": pair_id,
        "label": label,
        "annotator": annotator,
        "timestamp": time.time() if timestamp is None else float(timestamp),
    }
    session.label_log.append(row)
    session.labels[pair_id] = row
    return row


def config_metrics(session: TuningSession) -> list:
    """Confusion counts per configuration over labeled (non-unsure) pairs."""
    labeled = [(pid, row["label"]) for pid, row in session.labels.items()
               if row["label"] != "unsure"]
    if not labeled:
        raise DataError("no labeled pairs; label at least one pair first")
    positions = np.array([session.pair_index(pid) for pid, _ in labeled], np.int64)
    truth = np.array([lab == "match" for _, lab in labeled], bool)
    bits = session.config_bits_at(positions).astype(bool)

    # packbits pads the final byte with zeros, so byte-level popcounts are exact
    popcount = _POPCOUNT[session.classifications].sum(axis=1, dtype=np.int64) \
        if session.n_pairs else np.zeros(session.n_configs, np.int64)

    out = []
    for cfg_idx in range(session.n_configs):
        c = bits[cfg_idx]
        tp = int(np.sum(c & truth))
        fp = int(np.sum(c & ~truth))
        fn = int(np.sum(~c & truth))
        tn = int(np.sum(~c & ~truth))
        tpr = tp / (tp + fn) if tp + fn else None
        fpr = fp / (fp + tn) if fp + tn else None
        n_classified = int(popcount[cfg_idx])
        coverage = (tp + fp) / n_classified if n_classified else None
        out.append(ConfigMetrics(cfg_idx, tp, fp, fn, tn, tpr, fpr, coverage))
    return out


def select_config(metrics, configs, min_tpr: float = 0.85):
    """Lowest FPR subject to TPR >= min_tpr; returns (config_id, warning).

    Ties break toward higher TPR, then lower quantile, then lower config
    id.  When nothing clears the TPR bar the best-TPR config is returned
    with a warning.
    """
    defined = [m for m in metrics if m.tpr is not None and m.fpr is not None]
    if not defined:
        raise SelectionError("no configuration has defined TPR and FPR")
    feasible = [m for m in defined if m.tpr >= min_tpr]
    if feasible:
        best = min(feasible, key=lambda m: (m.fpr, -m.tpr, configs[m.config_id].quantile,
                                            m.config_id))
        return best.config_id, None
    best = min(defined, key=lambda m: (-m.tpr, m.fpr, configs[m.config_id].quantile,
                                       m.config_id))
    return best.config_id, (
        f"no configuration reached TPR >= {min_tpr}; picked best TPR {best.tpr:.3f}"
    )


def chosen_config_payload(session: TuningSession, config_id: int) -> dict:
    cfg = session.configs[config_id]
    return {
        "config_id": config_id,
        "weights": list(cfg.weights),
        "quantile": cfg.quantile,
        "session_id": session.session_id,
    }


# -- session persistence -------------------------------------------------

def save_session(session: TuningSession, outdir) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    meta = {
        "session_id": session.session_id,
        "community_id": session.community_id,
        "seed": session.seed,
        "quantile_grid": list(session.quantile_grid),
        "n_pairs": session.n_pairs,
        "n_configs": session.n_configs,
        "sampled_contact_ids": session.sampled_contact_ids,
        "warnings": session.warnings,
    }
    (outdir / "session.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    with open(outdir / "configs.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["config_id", *[f"w_{name}" for name in FIELDS], "quantile"])
        for i, cfg in enumerate(session.configs):
            writer.writerow([i, *[repr(w) for w in cfg.weights], cfg.quantile])
    with open(outdir / "pairs.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair_id", "resident_id", "contact_id",
                         *[f"sim_{name}" for name in FIELDS],
                         "score_mean", "classified_fraction"])
        for i, pid in enumerate(session.pair_ids):
            sims = ["" if np.isnan(v) else repr(float(v)) for v in session.sims[i]]
            mean = session.score_mean[i]
            writer.writerow([
                pid, session.pair_resident_ids[i], session.pair_contact_ids[i], *sims,
                "" if np.isnan(mean) else repr(float(mean)),
                repr(float(session.classified_fraction[i])),
            ])
    (outdir / "records.json").write_text(
        json.dumps(session.records_view, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    with open(outdir / "classifications.bin", "wb") as fh:
        fh.write(_BITSET_MAGIC)
        fh.write(np.uint64(session.n_configs).tobytes())
        fh.write(np.uint64(session.n_pairs).tobytes())
        fh.write(session.classifications.tobytes())
    labels_path = outdir / "labels.csv"
    if not labels_path.exists():
        with open(labels_path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerow(["pair_id", "label", "annotator", "timestamp"])
    return outdir


def append_label_row(session_dir, row: dict, fsync: bool = True) -> None:
    """Durably append one label row to the session's label log."""
    import os

    path = Path(session_dir) / "labels.csv"
    with open(path, "a", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerow(
            [row["pair_id"], row["label"], row["annotator"], repr(row["timestamp"])])
        fh.flush()
        if fsync:
            os.fsync(fh.fileno())


def load_session(session_dir) -> TuningSession:
    session_dir = Path(session_dir)
    meta = json.loads((session_dir / "session.json").read_text(encoding="utf-8"))

    configs = []
    with open(session_dir / "configs.csv", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            configs.append(MatchConfig(
                weights=tuple(float(row[f"w_{name}"]) for name in FIELDS),
                quantile=float(row["quantile"]),
            ))

    pair_ids, res_ids, con_ids = [], [], []
    sims_rows, means, fracs = [], [], []
    with open(session_dir / "pairs.csv", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            pair_ids.append(row["pair_id"])
            res_ids.append(row["resident_id"])
            con_ids.append(row["contact_id"])
            sims_rows.append([float(row[f"sim_{name}"]) if row[f"sim_{name}"] else np.nan
                              for name in FIELDS])
            means.append(float(row["score_mean"]) if row["score_mean"] else np.nan)
            fracs.append(float(row["classified_fraction"]))

    with open(session_dir / "classifications.bin", "rb") as fh:
        magic = fh.read(len(_BITSET_MAGIC))
        if magic != _BITSET_MAGIC:
            raise DataError(f"{session_dir}: bad classifications.bin header")
        n_configs = int(np.frombuffer(fh.read(8), np.uint64)[0])
        n_pairs = int(np.frombuffer(fh.read(8), np.uint64)[0])
        row_bytes = (n_pairs + 7) // 8
        data = np.frombuffer(fh.read(), np.uint8).reshape(n_configs, row_bytes).copy()

    records_view = json.loads((session_dir / "records.json").read_text(encoding="utf-8"))

    session = TuningSession(
        session_id=meta["session_id"],
        community_id=meta["community_id"],
        seed=meta["seed"],
        quantile_grid=tuple(meta["quantile_grid"]),
        sampled_contact_ids=meta["sampled_contact_ids"],
        configs=configs,
        pair_ids=pair_ids,
        pair_resident_ids=res_ids,
        pair_contact_ids=con_ids,
        sims=np.asarray(sims_rows, np.float64).reshape(len(pair_ids), len(FIELDS)),
        classifications=data,
        score_mean=np.asarray(means, np.float64),
        classified_fraction=np.asarray(fracs, np.float64),
        records_view=records_view,
        warnings=meta.get("warnings", []),
    )
    labels_path = session_dir / "labels.csv"
    if labels_path.exists():
        with open(labels_path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                apply_label(session, row["pair_id"], row["label"], row["annotator"],
                            float(row["timestamp"]))
    return session
