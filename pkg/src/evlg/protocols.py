"""Experiment sequences composed from the qubit channels.

Covers the spin interferometer with and without the intermediate negative
measurement, the dichotomic pi/3 variant, the optical Mach-Zehnder bomb test
(single round and repeated), the Zeno variant, and the phase calibration that
pins the fringe minimum.

Every stochastic operation takes an explicit stream of uniform variates; the
deterministic `ramsey_outcome_distribution` is the closed-form counterpart of
`run_ramsey` (interception handled as a two-outcome ensemble) and doubles as
the oracle the Monte Carlo paths are checked against.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .qubit import (
    Branch,
    CoherenceModel,
    Pulse,
    QubitState,
    apply_dephasing,
    apply_rotation,
    apply_spin_flip,
    measure_projective,
    negative_measurement,
    pure_state,
)

_TWO_PI = 2.0 * math.pi


def _wrap_angle(phi: float) -> float:
    """Reduce into [0, 2*pi); guards the x % 2pi == 2pi rounding corner."""
    phi = phi % _TWO_PI
    return 0.0 if phi >= _TWO_PI else phi


class ShotOutcome(enum.Enum):
    D1 = "D1"
    D2 = "D2"
    REMOVED = "Removed"


class BombOutcome(enum.Enum):
    EXPLODED = "Exploded"
    D1 = "D1"
    D2 = "D2"


class RepeatedOutcome(enum.Enum):
    RESCUED = "Rescued"
    EXPLODED = "Exploded"
    INCONCLUSIVE = "Inconclusive"


class CorrelationPair(enum.Enum):
    Q2Q1 = "q2q1"
    Q3Q2 = "q3q2"
    Q3Q1 = "q3q1"


@dataclass(frozen=True)
class RamseyConfig:
    """One interferometer sequence: pulse, wait, pulse, readout.

    `intercept` set to a branch inserts the ideal negative measurement right
    after the first pulse.  `phase_offset` is an extra phase applied to the
    second pulse only (the calibration knob; 0 is the calibrated minimum).
    """

    pulse_theta: float = 0.5 * math.pi
    pulse_phi: float = 0.0
    wait_us: float = 0.0
    coherence: CoherenceModel = CoherenceModel()
    t1_us: float = math.inf
    intercept: Branch | None = None
    phase_offset: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.pulse_theta <= math.pi:
            raise ValueError(f"pulse_theta must lie in (0, pi], got {self.pulse_theta}")
        if self.wait_us < 0.0:
            raise ValueError(f"wait_us must be >= 0, got {self.wait_us}")
        if not self.t1_us > 0.0:
            raise ValueError(f"t1_us must be > 0 (inf allowed), got {self.t1_us}")

    def first_pulse(self) -> Pulse:
        return Pulse(self.pulse_theta, _wrap_angle(self.pulse_phi))

    def second_pulse(self) -> Pulse:
        return Pulse(self.pulse_theta, _wrap_angle(self.pulse_phi + self.phase_offset))


@dataclass(frozen=True)
class BombTestConfig:
    """Mach-Zehnder bomb tester: first-splitter branch-B probability and
    device contrast when unobstructed."""

    bomb_present: bool = True
    branch_b_probability: float = 0.5
    contrast: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.branch_b_probability < 1.0:
            raise ValueError(
                f"branch_b_probability must lie in (0, 1), got {self.branch_b_probability}"
            )
        if not 0.0 <= self.contrast <= 1.0:
            raise ValueError(f"contrast must lie in [0, 1], got {self.contrast}")


def _evolve_wait(state: QubitState, config: RamseyConfig) -> QubitState:
    state = apply_dephasing(state, config.wait_us, config.coherence)
    return apply_spin_flip(state, config.wait_us, config.t1_us)


def run_ramsey(config: RamseyConfig, rand_stream) -> ShotOutcome:
    """One shot of the sequence; returns D1 (up), D2 (down) or Removed.

    Draw order: one variate for the negative measurement if `intercept` is
    set, then one for the final projective readout.
    """
    state = apply_rotation(pure_state(Branch.UP), config.first_pulse())
    if config.intercept is not None:
        survived = negative_measurement(state, config.intercept, rand_stream.uniform())
        if survived is None:
            return ShotOutcome.REMOVED
        state = survived
    state = _evolve_wait(state, config)
    state = apply_rotation(state, config.second_pulse())
    branch, _ = measure_projective(state, rand_stream.uniform())
    return ShotOutcome.D1 if branch is Branch.UP else ShotOutcome.D2


def ramsey_outcome_distribution(config: RamseyConfig) -> tuple[float, float, float]:
    """Exact (p_d1, p_d2, p_removed) for `run_ramsey`, summing to 1."""
    state = apply_rotation(pure_state(Branch.UP), config.first_pulse())
    weight = 1.0
    p_removed = 0.0
    if config.intercept is not None:
        p_removed = state.population(config.intercept)
        weight = 1.0 - p_removed
        state = pure_state(config.intercept.other)
    state = _evolve_wait(state, config)
    state = apply_rotation(state, config.second_pulse())
    return (weight * state.rho_uu, weight * state.rho_dd, p_removed)


def run_dichotomic(
    config: RamseyConfig, correlation_pair: CorrelationPair, rand_stream
) -> tuple[int, int] | None:
    """One shot of the pi/3 variant; returns (q_early, q_late) in {-1, +1}.

    Q(t1) = +1 by preparation.  For the Q3Q2 pair the intermediate value
    comes from an ideal negative measurement whose intercepted branch is
    chosen up/down with equal probability per shot; removed shots return
    None and are post-selected away by the caller.
    """
    if not math.isclose(config.pulse_theta, math.pi / 3.0, rel_tol=0.0, abs_tol=1e-12):
        raise ValueError(
            f"dichotomic protocol requires pulse_theta = pi/3, got {config.pulse_theta}"
        )
    if correlation_pair is CorrelationPair.Q2Q1:
        state = apply_rotation(pure_state(Branch.UP), config.first_pulse())
        branch, _ = measure_projective(state, rand_stream.uniform())
        return (1, 1 if branch is Branch.UP else -1)
    if correlation_pair is CorrelationPair.Q3Q1:
        outcome = run_ramsey(replace(config, intercept=None), rand_stream)
        return (1, 1 if outcome is ShotOutcome.D1 else -1)
    # Q3Q2: interleave the two interception branches 50/50.
    intercept = Branch.UP if rand_stream.uniform() < 0.5 else Branch.DOWN
    outcome = run_ramsey(replace(config, intercept=intercept), rand_stream)
    if outcome is ShotOutcome.REMOVED:
        return None
    q2 = 1 if intercept.other is Branch.UP else -1
    q3 = 1 if outcome is ShotOutcome.D1 else -1
    return (q2, q3)


def dichotomic_correlator_expectations(
    config: RamseyConfig,
) -> tuple[float, float, float]:
    """Exact (<Q2Q1>, <Q3Q2>, <Q3Q1>) for the pi/3 protocol.

    The Q3Q2 value weights the two interception sub-protocols equally, the
    same convention the estimators use.
    """
    base = replace(config, intercept=None)
    after_first = apply_rotation(pure_state(Branch.UP), base.first_pulse())
    c12 = after_first.rho_uu - after_first.rho_dd

    per_branch = []
    for intercepted in (Branch.UP, Branch.DOWN):
        q2 = 1.0 if intercepted.other is Branch.UP else -1.0
        state = pure_state(intercepted.other)
        state = _evolve_wait(state, base)
        state = apply_rotation(state, base.second_pulse())
        per_branch.append(q2 * (state.rho_uu - state.rho_dd))
    c23 = 0.5 * (per_branch[0] + per_branch[1])

    p_d1, p_d2, _ = ramsey_outcome_distribution(base)
    c13 = p_d1 - p_d2
    return (c12, c23, c13)


def run_mz_bomb_test(config: BombTestConfig, rand_stream) -> BombOutcome:
    """Single round of the optical bomb test.

    Live bomb: explode with the branch-B probability, otherwise the photon
    took branch A and the second splitter routes it to the dark port D1 with
    that same probability.  Dud: dark-port probability (1 - contrast)/2.
    """
    eps = config.branch_b_probability
    if config.bomb_present:
        if rand_stream.uniform() < eps:
            return BombOutcome.EXPLODED
        return BombOutcome.D1 if rand_stream.uniform() < eps else BombOutcome.D2
    alpha = 0.5 * (1.0 - config.contrast)
    return BombOutcome.D1 if rand_stream.uniform() < alpha else BombOutcome.D2


def run_repeated_bomb_test(
    config: BombTestConfig, max_rounds: int, rand_stream
) -> RepeatedOutcome:
    """Repeat single rounds on a live bomb until rescue, explosion or budget."""
    if max_rounds < 1:
        raise ValueError(f"max_rounds must be >= 1, got {max_rounds}")
    if not config.bomb_present:
        raise ValueError("repeated bomb test requires bomb_present=True")
    for _ in range(max_rounds):
        outcome = run_mz_bomb_test(config, rand_stream)
        if outcome is BombOutcome.D1:
            return RepeatedOutcome.RESCUED
        if outcome is BombOutcome.EXPLODED:
            return RepeatedOutcome.EXPLODED
    return RepeatedOutcome.INCONCLUSIVE


def zeno_block_probability(n_cycles: int) -> float:
    """Per-cycle probability sin^2(pi/(2N)) that the object absorbs the probe."""
    if n_cycles < 1:
        raise ValueError(f"n_cycles must be >= 1, got {n_cycles}")
    s = math.sin(0.5 * math.pi / n_cycles)
    return s * s


def zeno_success_probability(n_cycles: int) -> float:
    """Probability cos^(2N)(pi/(2N)) that N weak-rotation cycles detect a live
    object without triggering it.

    Each cycle rotates the probe by a Bloch angle pi/N (a pi/(2N) rotation of
    the polarization plane) and intercepts the transferred branch, so the
    per-cycle survival is cos^2(pi/(2N)); monotone in N and -> 1 as N -> inf.
    """
    if n_cycles < 1:
        raise ValueError(f"n_cycles must be >= 1, got {n_cycles}")
    if n_cycles == 1:
        return 0.0  # cos^2(pi/2) exactly; float cos(pi/2) is only ~6e-17
    return math.cos(0.5 * math.pi / n_cycles) ** (2 * n_cycles)


def run_zeno_cycle_chain(n_cycles: int, rand_stream) -> bool:
    """Sequential-channel shot of the Zeno tester: True if the live object is
    detected without absorption.  Independent route checked against
    `zeno_success_probability`."""
    if n_cycles < 1:
        raise ValueError(f"n_cycles must be >= 1, got {n_cycles}")
    pulse = Pulse(math.pi / n_cycles)
    state = pure_state(Branch.UP)
    for _ in range(n_cycles):
        state = apply_rotation(state, pulse)
        survived = negative_measurement(state, Branch.DOWN, rand_stream.uniform())
        if survived is None:
            return False
        state = survived
    return True


def _p_d1_with_extra_phase(config: RamseyConfig, extra: float) -> float:
    shifted = replace(
        config, phase_offset=(config.phase_offset + extra) % _TWO_PI
    )
    return ramsey_outcome_distribution(shifted)[0]


def calibrate_phase(config: RamseyConfig) -> float:
    """Second-pulse phase minimizing the dark-port probability.

    Scans a 1024-point grid over [0, 2*pi) and refines the best point with a
    golden-section pass; under the package's rotation convention the result
    is 0 whenever no extra offset has been dialed in.
    """
    if config.intercept is not None:
        raise ValueError("calibration runs on the sequence without interception")
    n = 1024
    step = _TWO_PI / n
    values = [_p_d1_with_extra_phase(config, i * step) for i in range(n)]
    best = min(range(n), key=values.__getitem__)

    lo = (best - 1) * step
    hi = (best + 1) * step
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1 = _p_d1_with_extra_phase(config, x1 % _TWO_PI)
    f2 = _p_d1_with_extra_phase(config, x2 % _TWO_PI)
    while hi - lo > 1e-10:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = _p_d1_with_extra_phase(config, x1 % _TWO_PI)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = _p_d1_with_extra_phase(config, x2 % _TWO_PI)
    return (0.5 * (lo + hi)) % _TWO_PI
