"""EpiLink scoring: field statistics, error rates, epiweight, thresholding.

The match score for a pair is a normalized weighted average of field
similarities, with per-field weights p_i = log2((1 - e_i) / f_i) derived
from average field frequencies f_i and error rates e_i.  Error rates are
the box-constrained least-squares projection of the tunable weight
vector.  The classification threshold comes from a generalized Pareto
fit to the upper tail of the score distribution (peaks over threshold).
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError, InsufficientDataError, UndefinedScoreError
from .similarity import FIELDS, FieldSimilarities, name_fields

QUANTILE_MIN = 0.90
QUANTILE_MAX = 0.99
TAIL_QUANTILE = 0.95  # quantile of the fitted exceedance distribution used as t
MIN_SCORES_FOR_FIT = 100
MIN_EXCEEDANCES = 100  # below this the GPD MLE is unreliable; use the empirical rule
SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class MatchConfig:
    """Tunable hyperparameters: a weight vector on the 7-simplex and a quantile."""

    weights: tuple[float, ...]
    quantile: float

    def __post_init__(self):
        if len(self.weights) != len(FIELDS):
            raise ConfigError(f"expected {len(FIELDS)} weights, got {len(self.weights)}")
        if any(w < 0 for w in self.weights):
            raise ConfigError("weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > SIMPLEX_TOL:
            raise ConfigError(f"weights must sum to 1 (got {sum(self.weights)!r})")
        if not QUANTILE_MIN <= self.quantile <= QUANTILE_MAX:
            raise ConfigError(
                f"exceedance quantile must be in [{QUANTILE_MIN}, {QUANTILE_MAX}], got {self.quantile}"
            )

    def to_dict(self) -> dict:
        return {"weights": list(self.weights), "quantile": self.quantile}

    @classmethod
    def from_dict(cls, d: dict) -> "MatchConfig":
        try:
            return cls(weights=tuple(float(w) for w in d["weights"]), quantile=float(d["quantile"]))
        except KeyError as exc:
            raise ConfigError(f"match config missing key: {exc}") from exc

    @classmethod
    def from_json_file(cls, path) -> "MatchConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def uniform(cls, quantile: float = 0.95) -> "MatchConfig":
        n = len(FIELDS)
        return cls(weights=tuple(1.0 / n for _ in range(n)), quantile=quantile)


@dataclass
class FieldStats:
    """Per-field frequencies, error rates, and derived log-ratio weights."""

    frequencies: np.ndarray
    error_rates: np.ndarray
    p_weights: np.ndarray
    degenerate_fields: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "frequencies": [float(x) for x in self.frequencies],
            "error_rates": [float(x) for x in self.error_rates],
            "p_weights": [float(x) for x in self.p_weights],
            "degenerate_fields": list(self.degenerate_fields),
        }


def average_frequency(values) -> tuple[float, bool]:
    """1 / (distinct non-missing values); (1.0, True) when all are missing.

    The degenerate flag marks a field whose weight collapses to zero and
    is therefore ignored by the score.
    """
    distinct = {v for v in values if v is not None}
    if not distinct:
        return 1.0, True
    return 1.0 / len(distinct), False


def solve_error_rates(weights, frequencies) -> np.ndarray:
    """Componentwise minimizer of sum (x_i - w_i)^2 s.t. 0 <= x_i <= 1 - f_i."""
    w = np.asarray(weights, dtype=np.float64)
    f = np.asarray(frequencies, dtype=np.float64)
    return np.clip(w, 0.0, 1.0 - f)


def p_weights_from(frequencies, error_rates) -> np.ndarray:
    f = np.asarray(frequencies, dtype=np.float64)
    e = np.asarray(error_rates, dtype=np.float64)
    return np.log2((1.0 - e) / f)


def field_columns(dataset) -> dict[str, list]:
    """Field value columns over residents and contacts of one community.

    Contact name fields use the components in enumerated order (the
    permutations are a matching device, not data).
    """
    cols: dict[str, list] = {name: [] for name in FIELDS}
    for r in dataset.residents:
        first, middle, last = name_fields(r.name_components)
        cols["first"].append(first)
        cols["middle"].append(middle)
        cols["last"].append(last)
        cols["age"].append(r.age)
        cols["village"].append(r.village or None)
        cols["sex"].append(r.sex)
        cols["honorific"].append(" ".join(r.honorific_tokens) or None)
    for c in dataset.contacts:
        first, middle, last = name_fields(c.name_components)
        cols["first"].append(first)
        cols["middle"].append(middle)
        cols["last"].append(last)
        cols["age"].append(c.reported_age)
        cols["village"].append(c.reported_village or None)
        cols["sex"].append(c.imputed_sex)
        cols["honorific"].append(" ".join(c.honorific_tokens) or None)
    return cols


def field_stats(dataset_or_columns, config: MatchConfig) -> FieldStats:
    """FieldStats for one community under a given weight vector."""
    if isinstance(dataset_or_columns, dict):
        cols = dataset_or_columns
    else:
        cols = field_columns(dataset_or_columns)
    freqs = np.empty(len(FIELDS))
    degenerate = []
    for i, name in enumerate(FIELDS):
        freqs[i], degen = average_frequency(cols[name])
        if degen:
            degenerate.append(name)
    errors = solve_error_rates(config.weights, freqs)
    p = p_weights_from(freqs, errors)
    return FieldStats(freqs, errors, p, degenerate)


def merge_field_columns(columns_list) -> dict[str, list]:
    """Pool field columns across communities (global frequency scope)."""
    merged: dict[str, list] = {name: [] for name in FIELDS}
    for cols in columns_list:
        for name in FIELDS:
            merged[name].extend(cols[name])
    return merged


def epiweight(sims: FieldSimilarities, stats: FieldStats) -> float:
    """Normalized weighted similarity over present fields, in [0, 1].

    Raises UndefinedScoreError when no present field carries positive
    weight (the pair has no information).
    """
    num = 0.0
    den = 0.0
    for p, s in zip(stats.p_weights, sims.as_array()):
        if math.isnan(s):
            continue
        num += p * s
        den += p
    if den <= 0.0:
        raise UndefinedScoreError("no present field with positive weight")
    return num / den


@dataclass
class ThresholdFit:
    """Exceedance threshold, GPD tail fit, and the classification threshold."""

    u: float
    sigma: float
    xi: float
    t: float
    n_scores: int
    n_exceedances: int
    log_likelihood: float
    fallback: bool

    def to_dict(self) -> dict:
        return {
            "exceedance_threshold": self.u,
            "gpd_scale": self.sigma,
            "gpd_shape": self.xi,
            "classification_threshold": self.t,
            "n_scores": self.n_scores,
            "n_exceedances": self.n_exceedances,
            "log_likelihood": self.log_likelihood,
            "fallback": self.fallback,
        }


def _gpd_nll(log_sigma: float, xi: float, y: np.ndarray) -> float:
    sigma = math.exp(log_sigma)
    n = len(y)
    if abs(xi) < 1e-10:
        return n * log_sigma + float(np.sum(y)) / sigma
    z = 1.0 + xi * y / sigma
    if np.any(z <= 0.0):
        return 1e30  # outside the support; finite so the simplex can recover
    return n * log_sigma + (1.0 + 1.0 / xi) * float(np.sum(np.log(z)))


def _pwm_init(y: np.ndarray) -> tuple[float, float]:
    """Probability-weighted-moments starting point for the GPD MLE."""
    ys = np.sort(y)
    n = len(ys)
    b0 = float(ys.mean())
    b1 = float(np.sum(ys * (n - np.arange(1, n + 1)) / (n - 1)) / n)
    denom = b0 - 2.0 * b1
    if denom <= 0 or b0 <= 0:
        return max(b0, 1e-12), 0.1
    sigma = 2.0 * b0 * b1 / denom
    xi = -(b0 / denom - 2.0)
    if sigma <= 0:
        return max(b0, 1e-12), 0.1
    return sigma, xi


def _gpd_tail_quantile(u: float, sigma: float, xi: float, tail: float = TAIL_QUANTILE) -> float:
    if abs(xi) < 1e-10:
        return u + sigma * math.log(1.0 / (1.0 - tail))
    return u + sigma / xi * ((1.0 - tail) ** -xi - 1.0)


def fit_gpd_threshold(scores, q: float) -> ThresholdFit:
    """Classification threshold from a peaks-over-threshold Pareto fit.

    u is the empirical q-quantile of the scores; a GPD is fit by maximum
    likelihood (PWM-initialized) to the exceedances above u, and t is the
    95% quantile of the fitted exceedance distribution.  With fewer than
    100 exceedances or a failed fit, t falls back to the empirical 95%
    quantile of the exceeding scores (fallback flag set).
    """
    if not QUANTILE_MIN <= q <= QUANTILE_MAX:
        raise ConfigError(f"exceedance quantile must be in [{QUANTILE_MIN}, {QUANTILE_MAX}], got {q}")
    scores = np.asarray(scores, dtype=np.float64)
    scores = scores[~np.isnan(scores)]
    if len(scores) < MIN_SCORES_FOR_FIT:
        raise InsufficientDataError(
            f"need at least {MIN_SCORES_FOR_FIT} scores to fit a threshold, got {len(scores)}"
        )
    return _threshold_fit(scores, q)


def threshold_from_scores(scores, q: float) -> ThresholdFit:
    """fit_gpd_threshold with a degenerate-sample escape hatch.

    Matching must also work on tiny datasets where a tail fit is
    meaningless; below the fitting minimum the empirical fallback rule is
    applied directly (fallback flag set).
    """
    scores = np.asarray(scores, dtype=np.float64)
    scores = scores[~np.isnan(scores)]
    if len(scores) == 0:
        return ThresholdFit(math.inf, math.nan, math.nan, math.inf, 0, 0, math.nan, True)
    if len(scores) < MIN_SCORES_FOR_FIT:
        u = float(np.quantile(scores, q))
        exceed = scores[scores > u]
        t = float(np.quantile(exceed, TAIL_QUANTILE)) if len(exceed) else u
        return ThresholdFit(u, math.nan, math.nan, t, len(scores), len(exceed), math.nan, True)
    return _threshold_fit(scores, q)


def _threshold_fit(scores: np.ndarray, q: float) -> ThresholdFit:
    u = float(np.quantile(scores, q))
    exceed = scores[scores > u] - u
    n_exc = len(exceed)
    if n_exc < MIN_EXCEEDANCES:
        values = scores[scores > u]
        t = float(np.quantile(values, TAIL_QUANTILE)) if n_exc else u
        return ThresholdFit(u, math.nan, math.nan, t, len(scores), n_exc, math.nan, True)

    sigma0, xi0 = _pwm_init(exceed)
    res = minimize(
        lambda theta: _gpd_nll(theta[0], theta[1], exceed),
        x0=np.array([math.log(sigma0), xi0]),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-10, "maxiter": 2000},
    )
    if not res.success or not np.all(np.isfinite(res.x)) or not res.fun < 1e29:
        t = float(np.quantile(scores[scores > u], TAIL_QUANTILE))
        return ThresholdFit(u, math.nan, math.nan, t, len(scores), n_exc, math.nan, True)
    sigma = math.exp(float(res.x[0]))
    xi = float(res.x[1])
    t = _gpd_tail_quantile(u, sigma, xi)
    return ThresholdFit(u, sigma, xi, t, len(scores), n_exc, -float(res.fun), False)
