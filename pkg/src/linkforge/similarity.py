"""Field-level similarity: Jaro, Jaro-Winkler, age, and per-pair vectors.

Similarities are oriented so that identical values score 1.  Two empty
strings score 0 (the no-matching-characters branch), but empty strings
never reach these functions in the pipeline: blank fields are treated as
missing upstream.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels

# canonical field order for weight vectors and similarity matrices
FIELDS = ("first", "middle", "last", "age", "village", "sex", "honorific")

DEFAULT_PREFIX_SCALE = 0.1


def _codes(s: str) -> np.ndarray:
    return np.array([ord(ch) for ch in s], dtype=np.int32)


def jaro(s1: str, s2: str) -> float:
    return float(_kernels.jaro_codes(_codes(s1), _codes(s2)))


def jaro_winkler(s1: str, s2: str, p: float = DEFAULT_PREFIX_SCALE) -> float:
    if not 0.0 <= p <= 0.25:
        raise ValueError(f"prefix scale must be in [0, 0.25], got {p}")
    return float(_kernels.jaro_winkler_codes(_codes(s1), _codes(s2), p))


def age_similarity(a1: int, a2: int) -> float:
    """1 - |difference|/100, clamped at 0. Both ages must be present."""
    return max(0.0, 1.0 - abs(a1 - a2) / 100.0)


@dataclass(frozen=True)
class FieldSimilarities:
    """Per-field similarities for one (resident, contact) pair; None = missing."""

    first: float | None = None
    middle: float | None = None
    last: float | None = None
    age: float | None = None
    village: float | None = None
    sex: float | None = None
    honorific: float | None = None

    def as_array(self) -> np.ndarray:
        """Vector in canonical field order with nan for missing entries."""
        return np.array(
            [np.nan if v is None else v for v in
             (self.first, self.middle, self.last, self.age,
              self.village, self.sex, self.honorific)],
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, arr) -> "FieldSimilarities":
        vals = [None if np.isnan(v) else float(v) for v in arr]
        return cls(*vals)

    def name_values(self) -> list[float]:
        return [v for v in (self.first, self.middle, self.last) if v is not None]


def name_fields(components: list[str]) -> tuple[str | None, str | None, str | None]:
    """Project name components onto (first, middle, last).

    first = leading token; last = trailing token when there are >= 2
    tokens; middle = the space-joined tokens in between when >= 3.
    """
    k = len(components)
    if k == 0:
        return None, None, None
    first = components[0]
    last = components[-1] if k >= 2 else None
    middle = " ".join(components[1:-1]) if k >= 3 else None
    return first, middle, last


def name_field_candidates(components: list[str]) -> tuple[list[str], list[str], list[str]]:
    """Distinct per-field values reachable through permutations of *components*.

    Any token can lead a permutation (first) or close one (last, when
    there are >= 2 tokens).  The middle slot holds one token for 3
    components and an ordered pair for 4, mirroring :func:`name_fields`
    applied to each permutation.
    """
    k = len(components)
    if k == 0:
        return [], [], []
    distinct = list(dict.fromkeys(components))
    firsts = distinct
    lasts = distinct if k >= 2 else []
    if k == 3:
        middles = distinct
    elif k == 4:
        middles = list(dict.fromkeys(
            f"{a} {b}"
            for i, a in enumerate(components)
            for j, b in enumerate(components)
            if i != j
        ))
    else:
        middles = []
    return firsts, middles, lasts


def field_similarity_vector(resident, contact, p: float = DEFAULT_PREFIX_SCALE) -> FieldSimilarities:
    """Seven-field similarity vector for a pre-processed (resident, contact) pair.

    Name fields take the maximum over the contact's name permutations of
    positionally aligned Jaro-Winkler scores; the resident's field order
    is kept as enumerated.  Missing fields yield missing entries; sex is
    exact-equality; honorifics present on one side only score 0.
    """
    r_first, r_middle, r_last = name_fields(resident.name_components)
    c_firsts, c_middles, c_lasts = name_field_candidates(contact.name_components)

    def best(target: str | None, cands: list[str]) -> float | None:
        if target is None or not cands:
            return None
        return max(jaro_winkler(target, cand, p) for cand in cands)

    first = best(r_first, c_firsts)
    middle = best(r_middle, c_middles)
    last = best(r_last, c_lasts)

    age = None
    if resident.age is not None and contact.reported_age is not None:
        age = age_similarity(resident.age, contact.reported_age)

    village = None
    if resident.village and contact.reported_village:
        village = jaro_winkler(resident.village, contact.reported_village, p)

    sex = None
    if resident.sex is not None and contact.imputed_sex is not None:
        sex = 1.0 if resident.sex == contact.imputed_sex else 0.0

    r_hon = " ".join(resident.honorific_tokens)
    c_hon = " ".join(contact.honorific_tokens)
    if not r_hon and not c_hon:
        honorific = None
    elif r_hon and c_hon:
        honorific = jaro_winkler(r_hon, c_hon, p)
    else:
        honorific = 0.0

    return FieldSimilarities(first, middle, last, age, village, sex, honorific)
