"""Closed-form hypothesis-testing figures of merit for the bomb tester.

The device model matches the protocols module: two identical splitters with
branch-B probability eps, so a surviving photon reaches the dark port with
probability eps and the single-trial power is (1-eps)*eps.  Every formula
here is cross-checked against the Monte Carlo protocols in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

from .protocols import zeno_success_probability


@dataclass(frozen=True)
class TestFigures:
    """Single-trial outcome probabilities of the tester.

    power: live bomb correctly flagged without triggering (true positive).
    alpha: dud flagged anyway (false positive, dark-port leakage).
    explode_prob / inconclusive_prob: remaining live-bomb outcomes.
    """

    power: float
    alpha: float
    explode_prob: float
    inconclusive_prob: float

    def __post_init__(self):
        for name in ("power", "alpha", "explode_prob", "inconclusive_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


def single_trial_figures(branch_b_probability: float, contrast: float) -> TestFigures:
    """Figures for one round: power (1-eps)*eps, explosion eps, false-positive
    rate (1-contrast)/2."""
    eps = branch_b_probability
    if not 0.0 < eps < 1.0:
        raise ValueError(f"branch_b_probability must lie in (0, 1), got {eps}")
    if not 0.0 <= contrast <= 1.0:
        raise ValueError(f"contrast must lie in [0, 1], got {contrast}")
    return TestFigures(
        power=(1.0 - eps) * eps,
        alpha=0.5 * (1.0 - contrast),
        explode_prob=eps,
        inconclusive_prob=(1.0 - eps) * (1.0 - eps),
    )


def repeated_trial_power(branch_b_probability: float) -> float:
    """Infinite-round rescue probability (1-eps)/(2-eps): 1/3 for balanced
    splitters, approaching 1/2 as the interrogating branch gets weak."""
    eps = branch_b_probability
    if not 0.0 < eps < 1.0:
        raise ValueError(f"branch_b_probability must lie in (0, 1), got {eps}")
    return (1.0 - eps) / (2.0 - eps)


def alpha_from_witness(witness: float) -> float:
    """False-positive probability (1 - W)/2 of a tester with witness W."""
    if not 0.0 <= witness <= 1.0:
        raise ValueError(f"witness must lie in [0, 1], got {witness}")
    return 0.5 * (1.0 - witness)


def zeno_cycles_for_power(target_power: float) -> int:
    """Smallest cycle count N whose Zeno success probability reaches the
    target, by doubling then bisection (N=1 never succeeds, so N >= 2)."""
    if not 0.0 < target_power < 1.0:
        raise ValueError(f"target_power must lie in (0, 1), got {target_power}")
    hi = 1
    while zeno_success_probability(hi) < target_power:
        hi *= 2
        if hi > 2**40:  # unreachable for targets < 1
            raise RuntimeError("cycle search diverged")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if zeno_success_probability(mid) >= target_power:
            hi = mid
        else:
            lo = mid
    return hi
