"""Estimators turning shot records into the published quantities.

Point values: spin means, the correlation function K in both its simplified
(constant intermediate designation) and dichotomic forms, the fringe contrast,
the superposition witness and the violation significance.

Uncertainties: 1-sigma errors by stratified bootstrap (histogram + Gaussian
least-squares fit) and, independently, by Monte Carlo redraws from the
per-arm multinomial laws, with exact Clopper-Pearson intervals available for
single binomial fractions.  Every estimator ignores Removed records
(post-selection) and both resampling routes are counter-seeded, so results
are reproducible and shard-order independent.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit
from scipy.stats import beta as beta_dist

from .experiment import Arm, ShotTable
from .rng import derive_key, uniform_block

_TAG_BOOTSTRAP = 301
_TAG_MONTE_CARLO = 302

# One-sigma equal-tailed coverage used to bridge exact intervals to a sigma.
ONE_SIGMA_CONFIDENCE = 0.6827


class Method(enum.Enum):
    BOOTSTRAP = "bootstrap"
    MONTE_CARLO_CP = "monte_carlo_cp"
    EXACT = "exact"


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    sigma: float
    method: Method
    n_shots_used: int
    clamped: bool = False

    def __post_init__(self):
        if self.sigma < 0.0:
            raise ValueError("sigma must be non-negative")
        if self.n_shots_used < 1:
            raise ValueError("estimates require at least one shot")


@dataclass(frozen=True)
class CorrelationSet:
    """The three two-time correlators of the dichotomic test."""

    q2q1: EstimateWithError
    q3q2: EstimateWithError
    q3q1: EstimateWithError

    def __post_init__(self):
        for name in ("q2q1", "q3q2", "q3q1"):
            v = getattr(self, name).value
            if not -1.0 <= v <= 1.0:
                raise ValueError(f"correlator {name} out of [-1, 1]: {v}")


def _detector_counts(records) -> tuple[int, int]:
    n_d1, n_d2, _ = ShotTable.coerce(records).counts()
    return n_d1, n_d2


def mean_q3(records) -> EstimateWithError:
    """Mean of the final-readout value (+1 for D1, -1 for D2), Removed shots
    excluded."""
    n_d1, n_d2 = _detector_counts(records)
    n = n_d1 + n_d2
    if n == 0:
        raise ValueError("no detector records after post-selection")
    v = (n_d1 - n_d2) / n
    sigma = math.sqrt(max(0.0, 1.0 - v * v) / n)
    return EstimateWithError(v, sigma, Method.EXACT, n)


def mean_q3_intercepted(records_up, records_down) -> EstimateWithError:
    """Final-readout mean conditioned on the intermediate negative
    measurement, the two interception arms weighted equally."""
    up = mean_q3(records_up)
    down = mean_q3(records_down)
    value = 0.5 * (up.value + down.value)
    sigma = 0.5 * math.hypot(up.sigma, down.sigma)
    return EstimateWithError(value, sigma, Method.EXACT, up.n_shots_used + down.n_shots_used)


def estimate_K_simplified(
    records_without_q2, records_intercept_up, records_intercept_down
) -> EstimateWithError:
    """K = 1 + <Q3>_with - <Q3>_without; 2 for an undisturbed superposition,
    1 in the fully decohered limit."""
    with_q2 = mean_q3_intercepted(records_intercept_up, records_intercept_down)
    without = mean_q3(records_without_q2)
    return EstimateWithError(
        1.0 + with_q2.value - without.value,
        math.hypot(with_q2.sigma, without.sigma),
        Method.EXACT,
        with_q2.n_shots_used + without.n_shots_used,
    )


def estimate_K_dichotomic(correlators: CorrelationSet) -> EstimateWithError:
    """K = <Q2Q1> + <Q3Q2> - <Q3Q1>; pi/3 pulses give 3/2 ideally."""
    c = correlators
    value = c.q2q1.value + c.q3q2.value - c.q3q1.value
    sigma = math.sqrt(c.q2q1.sigma**2 + c.q3q2.sigma**2 + c.q3q1.sigma**2)
    n = c.q2q1.n_shots_used + c.q3q2.n_shots_used + c.q3q1.n_shots_used
    return EstimateWithError(value, sigma, Method.EXACT, n)


def estimate_contrast(records) -> EstimateWithError:
    """Fringe contrast C = 1 - 2*p_up at the calibrated minimum, clamped to
    [0, 1] with the clamping flagged."""
    m = mean_q3(records)
    c = -m.value  # 1 - 2*p_up equals -(p_up - p_down)
    clamped = c < 0.0
    return EstimateWithError(max(0.0, c), m.sigma, Method.EXACT, m.n_shots_used, clamped)


def quantum_witness(k: float) -> float:
    """Superposition witness W = |K - 1| (equals the contrast)."""
    return abs(k - 1.0)


def violation_significance(k: EstimateWithError) -> float:
    """(K - 1) / sigma; values <= 0 mean no violation of the classical bound."""
    if k.sigma <= 0.0:
        raise ValueError("significance requires a positive sigma")
    return (k.value - 1.0) / k.sigma


def _arm_mean(table: ShotTable, arm: Arm, protocol_id: str | None = None) -> float:
    sub = table.filter(protocol_id=protocol_id, arm=arm)
    n_d1, n_d2, _ = sub.counts()
    n = n_d1 + n_d2
    if n == 0:
        raise ValueError(f"arm {arm.value} has no detector records")
    return (n_d1 - n_d2) / n


def k_simplified(table) -> float:
    """Value-only K of a (single-wait) three-arm table; resampling statistic."""
    table = ShotTable.coerce(table)
    with_q2 = 0.5 * (
        _arm_mean(table, Arm.INTERCEPT_UP) + _arm_mean(table, Arm.INTERCEPT_DOWN)
    )
    return 1.0 + with_q2 - _arm_mean(table, Arm.WITHOUT_Q2)


def dichotomic_correlations(table) -> CorrelationSet:
    """The three correlator estimates from a dichotomic campaign table."""
    table = ShotTable.coerce(table)
    q2q1 = mean_q3(table.filter(protocol_id="dichotomic_q2q1"))
    up = mean_q3(table.filter(protocol_id="dichotomic_q3q2", arm=Arm.INTERCEPT_UP))
    down = mean_q3(table.filter(protocol_id="dichotomic_q3q2", arm=Arm.INTERCEPT_DOWN))
    # Survivors of an up-interception are in the down branch: Q2 = -1.
    q3q2 = EstimateWithError(
        0.5 * (down.value - up.value),
        0.5 * math.hypot(up.sigma, down.sigma),
        Method.EXACT,
        up.n_shots_used + down.n_shots_used,
    )
    q3q1 = mean_q3(table.filter(protocol_id="dichotomic_q3q1"))
    return CorrelationSet(q2q1=q2q1, q3q2=q3q2, q3q1=q3q1)


def k_dichotomic(table) -> float:
    """Value-only dichotomic K; resampling statistic."""
    table = ShotTable.coerce(table)
    c12 = _arm_mean(table, Arm.WITHOUT_Q2, "dichotomic_q2q1")
    m_up = _arm_mean(table, Arm.INTERCEPT_UP, "dichotomic_q3q2")
    m_down = _arm_mean(table, Arm.INTERCEPT_DOWN, "dichotomic_q3q2")
    c23 = 0.5 * (m_down - m_up)
    c13 = _arm_mean(table, Arm.WITHOUT_Q2, "dichotomic_q3q1")
    return c12 + c23 - c13


def _bootstrap_redraw(codes: np.ndarray, key: int) -> np.ndarray:
    n = len(codes)
    idx = (uniform_block(key, n) * n).astype(np.int64)
    return codes[idx]


def _multinomial_redraw(codes: np.ndarray, key: int) -> np.ndarray:
    n = len(codes)
    counts = np.bincount(codes, minlength=3)
    t0 = counts[0] / n
    t01 = (counts[0] + counts[1]) / n
    u = uniform_block(key, n)
    return ((u >= t0).astype(np.uint8) + (u >= t01).astype(np.uint8))


def _resample_values(table, statistic, n_resamples, seed, tag, redraw) -> np.ndarray:
    if n_resamples < 100:
        raise ValueError(f"n_resamples must be >= 100, got {n_resamples}")
    table = ShotTable.coerce(table)
    if len(table) == 0:
        raise ValueError("cannot resample an empty record set")
    strata = table.strata()
    values = np.empty(n_resamples)
    codes = np.empty(len(table), dtype=np.uint8)
    for r in range(n_resamples):
        for si, (_, idx) in enumerate(strata):
            key = derive_key(seed, (tag, r, si))
            codes[idx] = redraw(table.outcome_code[idx], key)
        values[r] = statistic(table.with_outcomes(codes))
    return values


@dataclass(frozen=True)
class BootstrapResult:
    """Fitted sigma plus the plain resample standard deviation for diagnosis."""

    sigma: float
    sigma_plain: float
    n_resamples: int


def _gaussian(x, amp, mu, sigma):
    return amp * np.exp(-0.5 * ((x - mu) / sigma) ** 2)


def _fit_sigma(values: np.ndarray) -> BootstrapResult:
    plain = float(np.std(values, ddof=1))
    if plain == 0.0:
        return BootstrapResult(0.0, 0.0, len(values))
    try:
        counts, edges = np.histogram(values, bins="fd")
    except (ValueError, MemoryError):
        return BootstrapResult(plain, plain, len(values))
    if int((counts > 0).sum()) < 4:
        # Too few occupied bins for a three-parameter fit.
        return BootstrapResult(plain, plain, len(values))
    centers = 0.5 * (edges[:-1] + edges[1:])
    try:
        popt, _ = curve_fit(
            _gaussian,
            centers,
            counts.astype(float),
            p0=(float(counts.max()), float(values.mean()), plain),
            maxfev=10000,
        )
        fitted = abs(float(popt[2]))
    except (RuntimeError, ValueError):
        return BootstrapResult(plain, plain, len(values))
    if not math.isfinite(fitted) or fitted <= 0.0:
        return BootstrapResult(plain, plain, len(values))
    return BootstrapResult(fitted, plain, len(values))


def bootstrap_distribution(
    records, statistic, n_resamples: int = 10_000, seed: int = 0
) -> BootstrapResult:
    """Stratified bootstrap of `statistic`: each (protocol, wait, arm) stratum
    is resampled with replacement independently; the resampled distribution is
    histogrammed (Freedman-Diaconis width) and fit with a Gaussian."""
    values = _resample_values(
        records, statistic, n_resamples, seed, _TAG_BOOTSTRAP, _bootstrap_redraw
    )
    return _fit_sigma(values)


def bootstrap_sigma(records, statistic, n_resamples: int = 10_000, seed: int = 0) -> float:
    """Fitted Gaussian sigma of the bootstrapped statistic (0 for degenerate
    input)."""
    return bootstrap_distribution(records, statistic, n_resamples, seed).sigma


def monte_carlo_sigma(records, statistic, n_resamples: int = 10_000, seed: int = 0) -> float:
    """Sigma by synthetic redraws: per-stratum outcome probabilities are
    estimated from counts and datasets are redrawn from those multinomial
    laws; returns the sample standard deviation of the statistic."""
    values = _resample_values(
        records, statistic, n_resamples, seed, _TAG_MONTE_CARLO, _multinomial_redraw
    )
    return float(np.std(values, ddof=1))


def clopper_pearson(successes: int, trials: int, confidence: float = ONE_SIGMA_CONFIDENCE):
    """Exact equal-tailed binomial interval (lo, hi) covering successes/trials."""
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError(f"invalid counts: {successes}/{trials}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    tail = 0.5 * (1.0 - confidence)
    lo = 0.0 if successes == 0 else float(beta_dist.ppf(tail, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(
        beta_dist.ppf(1.0 - tail, successes + 1, trials - successes)
    )
    return lo, hi


def clopper_pearson_sigma(successes: int, trials: int) -> float:
    """Half-width of the 1-sigma-equivalent (68.27%) exact interval."""
    lo, hi = clopper_pearson(successes, trials)
    return 0.5 * (hi - lo)
