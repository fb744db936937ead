"""Candidate generation and two-stage matching with rule-based post-filtering.

Stage 1 blocks on exact agreement in at least one of first/middle/last
name (under contact name permutations), village, or sex; stage 2 rescans
the stage-1 leftovers against every resident with the same weights and
quantile.  Scoring streams over candidate batches twice: one pass to
collect the score multiset for threshold fitting, one to classify, so
memory stays flat regardless of candidate volume.
"""

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .epilink import FieldStats, MatchConfig, field_stats, threshold_from_scores
from .errors import BudgetExceededError
from .similarity import (
    DEFAULT_PREFIX_SCALE,
    FieldSimilarities,
    name_field_candidates,
    name_fields,
)

BLOCK_KEYS = ("first", "middle", "last", "village", "sex")
DEFAULT_PAIR_BUDGET = 500_000_000
BATCH_PAIRS = 1 << 18

_SEX_CODE = {"female": 0, "male": 1}

GOOD_NAME_MEAN = 0.9
VERY_GOOD_NAME_MEAN = 0.95
GOOD_AGE_STRICT = 5   # resident younger than 15
GOOD_AGE_RELAXED = 10
GOOD_VILLAGE_SIM = 0.9
MIN_NAME_COMPONENTS = 2


@dataclass
class PreparedCommunity:
    """Numpy-side view of a pre-processed community for the scoring kernels."""

    dataset: object
    pool_data: np.ndarray
    pool_offs: np.ndarray
    res_ids: list
    res_name_ids: np.ndarray
    res_village: np.ndarray
    res_honor: np.ndarray
    res_age: np.ndarray
    res_sex: np.ndarray
    res_usable: np.ndarray
    con_ids: list
    con_namer_idx: np.ndarray
    con_cand_ids: np.ndarray
    con_cand_offs: np.ndarray
    con_village: np.ndarray
    con_honor: np.ndarray
    con_age: np.ndarray
    con_sex: np.ndarray
    con_usable: np.ndarray

    @property
    def n_residents(self) -> int:
        return len(self.res_ids)

    @property
    def n_contacts(self) -> int:
        return len(self.con_ids)

    def usable_contact_indices(self) -> np.ndarray:
        return np.nonzero(self.con_usable)[0]


def prepare_community(dataset) -> PreparedCommunity:
    """Intern every field string into a codepoint pool and build index arrays.

    Records flagged unusable (no name components) are excluded from
    matching on both sides; nameless pairs carry no linkage information.
    """
    pool: dict = {}
    strings: list = []

    def intern(value: str) -> int:
        idx = pool.get(value)
        if idx is None:
            idx = len(strings)
            pool[value] = idx
            strings.append(value)
        return idx

    residents = dataset.residents
    contacts = dataset.contacts
    n_res = len(residents)
    n_con = len(contacts)

    res_name_ids = np.full((n_res, 3), -1, np.int64)
    res_village = np.full(n_res, -1, np.int64)
    res_honor = np.full(n_res, -1, np.int64)
    res_age = np.full(n_res, np.nan, np.float64)
    res_sex = np.full(n_res, -1, np.int8)
    res_usable = np.zeros(n_res, bool)
    res_ids = []
    for i, r in enumerate(residents):
        res_ids.append(r.resident_id)
        first, middle, last = name_fields(r.name_components)
        for f, val in enumerate((first, middle, last)):
            if val:
                res_name_ids[i, f] = intern(val)
        if r.village:
            res_village[i] = intern(r.village)
        honor = " ".join(r.honorific_tokens)
        if honor:
            res_honor[i] = intern(honor)
        if r.age is not None:
            res_age[i] = float(r.age)
        res_sex[i] = _SEX_CODE.get(r.sex, -1)
        res_usable[i] = not r.unusable and bool(r.name_components)

    res_pos = {rid: i for i, rid in enumerate(res_ids)}
    con_ids = []
    con_namer_idx = np.full(n_con, -1, np.int64)
    cand_ids: list = []
    cand_offs = np.zeros(3 * n_con + 1, np.int64)
    con_village = np.full(n_con, -1, np.int64)
    con_honor = np.full(n_con, -1, np.int64)
    con_age = np.full(n_con, np.nan, np.float64)
    con_sex = np.full(n_con, -1, np.int8)
    con_usable = np.zeros(n_con, bool)
    for i, c in enumerate(contacts):
        con_ids.append(c.contact_id)
        con_namer_idx[i] = res_pos.get(c.namer_id, -1)
        firsts, middles, lasts = name_field_candidates(c.name_components)
        for f, vals in enumerate((firsts, middles, lasts)):
            cand_ids.extend(intern(v) for v in vals)
            cand_offs[i * 3 + f + 1] = len(cand_ids)
        if c.reported_village:
            con_village[i] = intern(c.reported_village)
        honor = " ".join(c.honorific_tokens)
        if honor:
            con_honor[i] = intern(honor)
        if c.reported_age is not None:
            con_age[i] = float(c.reported_age)
        con_sex[i] = _SEX_CODE.get(c.imputed_sex, -1)
        con_usable[i] = not c.unusable and bool(c.name_components)

    pool_offs = np.zeros(len(strings) + 1, np.int64)
    for i, s in enumerate(strings):
        pool_offs[i + 1] = pool_offs[i] + len(s)
    pool_data = np.empty(int(pool_offs[-1]), np.int32)
    for i, s in enumerate(strings):
        start = pool_offs[i]
        for j, ch in enumerate(s):
            pool_data[start + j] = ord(ch)

    return PreparedCommunity(
        dataset=dataset,
        pool_data=pool_data,
        pool_offs=pool_offs,
        res_ids=res_ids,
        res_name_ids=res_name_ids,
        res_village=res_village,
        res_honor=res_honor,
        res_age=res_age,
        res_sex=res_sex,
        res_usable=res_usable,
        con_ids=con_ids,
        con_namer_idx=con_namer_idx,
        con_cand_ids=np.asarray(cand_ids, np.int64),
        con_cand_offs=cand_offs,
        con_village=con_village,
        con_honor=con_honor,
        con_age=con_age,
        con_sex=con_sex,
        con_usable=con_usable,
    )


def iter_blocked_pairs(prep: PreparedCommunity, contact_indices=None, batch_pairs=BATCH_PAIRS):
    """Candidate batches (res_idx, con_idx, key_bitmask) from inverted indexes.

    A pair is emitted exactly when resident and contact agree exactly on
    at least one of the five blocking fields; bit i of the mask marks
    agreement on BLOCK_KEYS[i].  No cross product is materialized.
    """
    if contact_indices is None:
        contact_indices = prep.usable_contact_indices()

    name_maps = [defaultdict(list) for _ in range(3)]
    village_map = defaultdict(list)
    sex_map = defaultdict(list)
    for i in np.nonzero(prep.res_usable)[0]:
        for f in range(3):
            vid = prep.res_name_ids[i, f]
            if vid >= 0:
                name_maps[f][vid].append(i)
        if prep.res_village[i] >= 0:
            village_map[prep.res_village[i]].append(i)
        if prep.res_sex[i] >= 0:
            sex_map[int(prep.res_sex[i])].append(i)
    name_maps = [{k: np.asarray(v, np.int64) for k, v in m.items()} for m in name_maps]
    village_map = {k: np.asarray(v, np.int64) for k, v in village_map.items()}
    sex_map = {k: np.asarray(v, np.int64) for k, v in sex_map.items()}

    mask = np.zeros(prep.n_residents, np.uint8)
    buf_res, buf_con, buf_key = [], [], []
    buffered = 0
    for c in contact_indices:
        c = int(c)
        for f in range(3):
            for k in range(prep.con_cand_offs[c * 3 + f], prep.con_cand_offs[c * 3 + f + 1]):
                hit = name_maps[f].get(prep.con_cand_ids[k])
                if hit is not None:
                    mask[hit] |= 1 << f
        if prep.con_village[c] >= 0:
            hit = village_map.get(prep.con_village[c])
            if hit is not None:
                mask[hit] |= 1 << 3
        if prep.con_sex[c] >= 0:
            hit = sex_map.get(int(prep.con_sex[c]))
            if hit is not None:
                mask[hit] |= 1 << 4
        nz = np.nonzero(mask)[0]
        if len(nz):
            buf_res.append(nz)
            buf_con.append(np.full(len(nz), c, np.int64))
            buf_key.append(mask[nz].copy())
            buffered += len(nz)
            mask[nz] = 0
        if buffered >= batch_pairs:
            yield np.concatenate(buf_res), np.concatenate(buf_con), np.concatenate(buf_key)
            buf_res, buf_con, buf_key = [], [], []
            buffered = 0
    if buffered:
        yield np.concatenate(buf_res), np.concatenate(buf_con), np.concatenate(buf_key)


def iter_all_pairs(prep: PreparedCommunity, contact_indices, pair_budget=DEFAULT_PAIR_BUDGET,
                   batch_pairs=BATCH_PAIRS):
    """Full cross-product batches for the unblocked stage, behind a budget guard."""
    res_all = np.nonzero(prep.res_usable)[0]
    total = len(res_all) * len(contact_indices)
    if total > pair_budget:
        raise BudgetExceededError(
            f"unblocked stage needs {total} pairs, budget is {pair_budget}; "
            "sample contacts or raise the pair budget"
        )
    if len(res_all) == 0:
        return
    per_chunk = max(1, batch_pairs // max(1, len(res_all)))
    for start in range(0, len(contact_indices), per_chunk):
        chunk = contact_indices[start : start + per_chunk]
        n = len(res_all) * len(chunk)
        pair_res = np.tile(res_all, len(chunk))
        pair_con = np.repeat(np.asarray(chunk, np.int64), len(res_all))
        yield pair_res, pair_con, np.zeros(n, np.uint8)


def score_batch(prep: PreparedCommunity, pair_res, pair_con, p_weights,
                prefix_scale=DEFAULT_PREFIX_SCALE):
    """Similarity matrix and epiweight scores for one batch of index pairs."""
    n = len(pair_res)
    sims = np.empty((n, 7), np.float64)
    scores = np.empty(n, np.float64)
    _kernels.score_pairs(
        prep.pool_data, prep.pool_offs,
        prep.res_name_ids, prep.res_village, prep.res_honor, prep.res_age, prep.res_sex,
        prep.con_cand_ids, prep.con_cand_offs,
        prep.con_village, prep.con_honor, prep.con_age, prep.con_sex,
        np.ascontiguousarray(pair_res, np.int64), np.ascontiguousarray(pair_con, np.int64),
        np.ascontiguousarray(p_weights, np.float64), prefix_scale,
        sims, scores,
    )
    return sims, scores


@dataclass
class CandidatePair:
    """One blocked (resident, contact) candidate; sims/score set once scored."""

    resident_id: str
    contact_id: str
    blocking_keys_hit: frozenset
    stage: str = "blocked"
    sims: FieldSimilarities | None = None
    score: float | None = None


def block_candidates(dataset_or_prep, contact_indices=None, scored_with: FieldStats = None):
    """Object view over the blocked-candidate stream.

    Yields CandidatePair skeletons (pass *scored_with* to fill sims and
    scores).  The batch generator iter_blocked_pairs is the form the
    matching stages consume; this wrapper exists for library users and
    tooling.
    """
    prep = dataset_or_prep if isinstance(dataset_or_prep, PreparedCommunity) \
        else prepare_community(dataset_or_prep)
    for pair_res, pair_con, keymask in iter_blocked_pairs(prep, contact_indices):
        if scored_with is not None:
            sims, scores = score_batch(prep, pair_res, pair_con, scored_with.p_weights)
        for row in range(len(pair_res)):
            keys = frozenset(
                BLOCK_KEYS[b] for b in range(len(BLOCK_KEYS)) if keymask[row] & (1 << b))
            pair = CandidatePair(
                resident_id=prep.res_ids[pair_res[row]],
                contact_id=prep.con_ids[pair_con[row]],
                blocking_keys_hit=keys,
            )
            if scored_with is not None:
                pair.sims = FieldSimilarities.from_array(sims[row])
                pair.score = None if np.isnan(scores[row]) else float(scores[row])
            yield pair


@dataclass
class Match:
    contact_id: str
    resident_id: str
    namer_id: str
    domain: str
    score: float
    stage: str
    sims: FieldSimilarities


@dataclass
class MatchResult:
    matched: list = field(default_factory=list)
    unmatched_contact_ids: list = field(default_factory=list)
    dropped: dict = field(default_factory=dict)
    threshold_fits: dict = field(default_factory=dict)

    def matched_contact_ids(self) -> set:
        return {m.contact_id for m in self.matched}

    def count_drop(self, reason: str, n: int = 1) -> None:
        if n:
            self.dropped[reason] = self.dropped.get(reason, 0) + int(n)


@dataclass(frozen=True)
class PairFlags:
    good_name: bool
    very_good_name: bool
    good_age: bool
    good_village: bool


def _classify(prep, gen_factory, config, stats, contact_indices, stage):
    """Two streaming passes: fit the threshold, then resolve best matches."""
    p = stats.p_weights
    n_self = 0
    n_undefined = 0
    n_scored = 0
    score_chunks = []
    for pair_res, pair_con, _ in gen_factory():
        keep = prep.con_namer_idx[pair_con] != pair_res
        n_self += len(pair_res) - int(keep.sum())
        pair_res = pair_res[keep]
        pair_con = pair_con[keep]
        if not len(pair_res):
            continue
        _, scores = score_batch(prep, pair_res, pair_con, p)
        defined = ~np.isnan(scores)
        n_undefined += len(scores) - int(defined.sum())
        n_scored += int(defined.sum())
        score_chunks.append(scores[defined])

    all_scores = np.concatenate(score_chunks) if score_chunks else np.empty(0)
    fit = threshold_from_scores(all_scores, config.quantile)
    t = fit.t

    best_score = np.full(prep.n_contacts, -np.inf)
    best_res = np.full(prep.n_contacts, -1, np.int64)
    n_above = 0
    for pair_res, pair_con, _ in gen_factory():
        keep = prep.con_namer_idx[pair_con] != pair_res
        pair_res = pair_res[keep]
        pair_con = pair_con[keep]
        if not len(pair_res):
            continue
        _, scores = score_batch(prep, pair_res, pair_con, p)
        qual = np.nonzero(scores >= t)[0]
        n_above += len(qual)
        for k in qual:
            c = pair_con[k]
            r = pair_res[k]
            s = scores[k]
            if s > best_score[c]:
                best_score[c] = s
                best_res[c] = r
            elif s == best_score[c] and prep.res_ids[r] < prep.res_ids[best_res[c]]:
                best_res[c] = r

    result = MatchResult(threshold_fits={stage: fit})
    result.count_drop("self_match", n_self)
    result.count_drop("undefined_score", n_undefined)
    result.count_drop("below_threshold", n_scored - n_above)
    contacts = prep.dataset.contacts
    matched_idx = []
    for c in contact_indices:
        c = int(c)
        if best_res[c] >= 0:
            matched_idx.append(c)
        else:
            result.unmatched_contact_ids.append(prep.con_ids[c])
    if matched_idx:
        midx = np.asarray(matched_idx, np.int64)
        sims, scores = score_batch(prep, best_res[midx], midx, p)
        for row, c in enumerate(matched_idx):
            rec = contacts[c]
            result.matched.append(Match(
                contact_id=prep.con_ids[c],
                resident_id=prep.res_ids[best_res[c]],
                namer_id=rec.namer_id,
                domain=rec.domain,
                score=float(scores[row]),
                stage=stage,
                sims=FieldSimilarities.from_array(sims[row]),
            ))
    return result


def match_stage(dataset_or_prep, config: MatchConfig, blocked: bool = True,
                contact_indices=None, stats: FieldStats | None = None,
                pair_budget: int = DEFAULT_PAIR_BUDGET) -> MatchResult:
    """One matching stage over the given contacts (defaults to all usable).

    Unusable contacts (no name components) never enter a stage; when the
    default contact set is used they are reported as unmatched.
    """
    prep = dataset_or_prep if isinstance(dataset_or_prep, PreparedCommunity) \
        else prepare_community(dataset_or_prep)
    if stats is None:
        stats = field_stats(prep.dataset, config)
    report_unusable = contact_indices is None
    if contact_indices is None:
        contact_indices = prep.usable_contact_indices()
    else:
        contact_indices = np.asarray(contact_indices, np.int64)

    if blocked:
        gen_factory = lambda: iter_blocked_pairs(prep, contact_indices)  # noqa: E731
    else:
        gen_factory = lambda: iter_all_pairs(prep, contact_indices, pair_budget)  # noqa: E731
    result = _classify(prep, gen_factory, config, stats, contact_indices,
                       "blocked" if blocked else "unblocked")
    if report_unusable:
        for i in np.nonzero(~prep.con_usable)[0]:
            result.unmatched_contact_ids.append(prep.con_ids[int(i)])
    return result


def run_two_stage(dataset_or_prep, config: MatchConfig, stats: FieldStats | None = None,
                  pair_budget: int = DEFAULT_PAIR_BUDGET) -> MatchResult:
    """Blocked stage, then an unblocked stage over its unmatched contacts.

    Both stages share the same weight vector and quantile; every contact
    resolves in at most one stage.
    """
    prep = dataset_or_prep if isinstance(dataset_or_prep, PreparedCommunity) \
        else prepare_community(dataset_or_prep)
    if stats is None:
        stats = field_stats(prep.dataset, config)

    stage1 = match_stage(prep, config, blocked=True, stats=stats)
    stage1_unmatched = set(stage1.unmatched_contact_ids)
    unmatched_usable = [
        i for i in prep.usable_contact_indices()
        if prep.con_ids[int(i)] in stage1_unmatched
    ]
    stage2 = match_stage(prep, config, blocked=False,
                         contact_indices=np.asarray(unmatched_usable, np.int64),
                         stats=stats, pair_budget=pair_budget)

    combined = MatchResult(
        matched=stage1.matched + stage2.matched,
        unmatched_contact_ids=sorted(
            (set(stage1.unmatched_contact_ids) - stage2.matched_contact_ids())
            | set(stage2.unmatched_contact_ids)
        ),
        threshold_fits={**stage1.threshold_fits, **stage2.threshold_fits},
    )
    for part in (stage1, stage2):
        for reason, n in part.dropped.items():
            combined.count_drop(reason, n)
    return combined


def pair_flags(match: Match, resident, contact) -> PairFlags:
    """Post-processing quality flags for one accepted match."""
    name_sims = match.sims.name_values()
    both_two_fields = (
        len(resident.name_components) >= MIN_NAME_COMPONENTS
        and len(contact.name_components) >= MIN_NAME_COMPONENTS
    )
    name_mean = sum(name_sims) / len(name_sims) if name_sims else 0.0
    good_name = both_two_fields and name_mean > GOOD_NAME_MEAN
    very_good_name = both_two_fields and name_mean > VERY_GOOD_NAME_MEAN

    good_age = False
    if contact.reported_age is not None and resident.age is not None:
        limit = GOOD_AGE_STRICT if resident.age < 15 else GOOD_AGE_RELAXED
        good_age = abs(resident.age - contact.reported_age) <= limit

    good_village = match.sims.village is not None and match.sims.village > GOOD_VILLAGE_SIM
    return PairFlags(good_name, very_good_name, good_age, good_village)


def removal_rules(flags: PairFlags) -> list:
    """Which of the three removal rules fire for these flags."""
    fired = []
    if not flags.good_name and not flags.good_village:
        fired.append("a")
    if not flags.very_good_name and not flags.good_age:
        fired.append("b")
    if not flags.good_age and not flags.good_village:
        fired.append("c")
    return fired


def postprocess_filter(matches, flags_list):
    """Drop matches tripping any removal rule; counts are per rule.

    A match violating several rules is counted under each.
    """
    kept = []
    removed = []
    counts = {"a": 0, "b": 0, "c": 0}
    for match, flags in zip(matches, flags_list):
        fired = removal_rules(flags)
        if fired:
            removed.append(match)
            for rule in fired:
                counts[rule] += 1
        else:
            kept.append(match)
    return kept, removed, counts


def postprocess_result(result: MatchResult, dataset) -> MatchResult:
    """Apply the post-processing rules to a MatchResult, updating drop counts."""
    residents = dataset.resident_index()
    contacts = {c.contact_id: c for c in dataset.contacts}
    flags_list = [
        pair_flags(m, residents[m.resident_id], contacts[m.contact_id])
        for m in result.matched
    ]
    kept, removed, counts = postprocess_filter(result.matched, flags_list)
    out = MatchResult(
        matched=kept,
        unmatched_contact_ids=sorted(
            set(result.unmatched_contact_ids) | {m.contact_id for m in removed}
        ),
        dropped=dict(result.dropped),
        threshold_fits=dict(result.threshold_fits),
    )
    for rule, n in counts.items():
        out.count_drop(f"postprocess_rule_{rule}", n)
    return out
