"""Exact two-level density-operator states and the channels the protocols use.

State convention: the pseudo-spin basis is {up, down}; the state is stored as
the populations plus the single independent coherence rho_ud (rho_du is its
conjugate).  Rotations follow

    R(theta, phi) = exp(-i*(theta/2)*(cos(phi)*sigma_x + sin(phi)*sigma_y))

with |up> along +z.  Under this convention two pi/2 pulses with phi=0 compose
to a pi pulse taking up -> down, so the calibrated fringe phase is 0.

All channels are pure value transformations; randomness enters only through
explicit uniform variates supplied by the caller.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

_ATOL = 1e-9  # construction-time validity slack (channels hold 1e-12 per step)


class Branch(enum.Enum):
    UP = "up"
    DOWN = "down"

    @property
    def other(self) -> "Branch":
        return Branch.DOWN if self is Branch.UP else Branch.UP


class DecayShape(enum.Enum):
    EXPONENTIAL = "exponential"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class CoherenceModel:
    """Coherence decay law: exp(-t/tau) or exp(-(t/tau)^2), tau in microseconds."""

    shape: DecayShape = DecayShape.EXPONENTIAL
    tau_us: float = 130.0

    def __post_init__(self):
        if not self.tau_us > 0.0:
            raise ValueError(f"coherence tau_us must be > 0, got {self.tau_us}")

    def factor(self, wait_us: float) -> float:
        """Coherence survival factor c(t) in (0, 1]."""
        if wait_us < 0.0:
            raise ValueError(f"wait_us must be >= 0, got {wait_us}")
        x = wait_us / self.tau_us
        if self.shape is DecayShape.EXPONENTIAL:
            return math.exp(-x)
        return math.exp(-(x * x))


@dataclass(frozen=True)
class Pulse:
    """Spin rotation by angle theta about the equatorial axis at phase phi."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta < 2.0 * math.pi:
            raise ValueError(f"pulse theta must lie in [0, 2*pi), got {self.theta}")
        if not 0.0 <= self.phi < 2.0 * math.pi:
            raise ValueError(f"pulse phi must lie in [0, 2*pi), got {self.phi}")


@dataclass(frozen=True)
class QubitState:
    """Density operator of the two-level system.

    Invariants (enforced on construction within a small tolerance):
    populations non-negative and summing to 1, |rho_ud|^2 <= rho_uu*rho_dd.
    """

    rho_uu: float
    rho_dd: float
    rho_ud: complex

    def __post_init__(self):
        if self.rho_uu < -_ATOL or self.rho_dd < -_ATOL:
            raise ValueError("populations must be non-negative")
        if abs(self.rho_uu + self.rho_dd - 1.0) > _ATOL:
            raise ValueError("populations must sum to 1")
        if abs(self.rho_ud) ** 2 > self.rho_uu * self.rho_dd + _ATOL:
            raise ValueError("coherence violates positivity")

    def purity(self) -> float:
        """Tr(rho^2); 1 for pure states, 1/2 for the maximally mixed state."""
        return self.rho_uu**2 + self.rho_dd**2 + 2.0 * abs(self.rho_ud) ** 2

    def population(self, branch: Branch) -> float:
        return self.rho_uu if branch is Branch.UP else self.rho_dd


def pure_state(branch: Branch) -> QubitState:
    """Projector onto a basis state (purity 1)."""
    if branch is Branch.UP:
        return QubitState(1.0, 0.0, 0j)
    return QubitState(0.0, 1.0, 0j)


def populations(state: QubitState) -> tuple[float, float]:
    return (state.rho_uu, state.rho_dd)


def apply_rotation(state: QubitState, pulse: Pulse) -> QubitState:
    """Unitary conjugation by R(theta, phi); trace and purity preserving."""
    c = math.cos(0.5 * pulse.theta)
    s = math.sin(0.5 * pulse.theta)
    a, b, m = state.rho_uu, state.rho_dd, state.rho_ud
    cross = 2.0 * c * s * (math.sin(pulse.phi) * m.real + math.cos(pulse.phi) * m.imag)
    a2 = c * c * a + s * s * b - cross
    b2 = s * s * a + c * c * b + cross
    phase = cmath.exp(-1j * pulse.phi)
    m2 = c * c * m + s * s * phase * phase * m.conjugate() + 1j * c * s * phase * (a - b)
    return QubitState(a2, b2, m2)


def apply_dephasing(state: QubitState, wait_us: float, model: CoherenceModel) -> QubitState:
    """Scale the coherence by c(t); populations untouched."""
    if wait_us < 0.0:
        raise ValueError(f"wait_us must be >= 0, got {wait_us}")
    return QubitState(state.rho_uu, state.rho_dd, state.rho_ud * model.factor(wait_us))


def spin_flip_probability(wait_us: float, t1_us: float) -> float:
    """Probability 1 - exp(-t/T1) that the depolarizing flip channel acts."""
    if wait_us < 0.0:
        raise ValueError(f"wait_us must be >= 0, got {wait_us}")
    if not t1_us > 0.0:
        raise ValueError(f"t1_us must be > 0 (inf allowed), got {t1_us}")
    if math.isinf(t1_us):
        return 0.0
    return -math.expm1(-wait_us / t1_us)


def apply_spin_flip(state: QubitState, wait_us: float, t1_us: float) -> QubitState:
    """Depolarize toward the equal mixture with probability 1 - exp(-t/T1).

    Diagonal -> (1-p)*diag + p*(1/2, 1/2); coherence scaled by (1-p).
    """
    p = spin_flip_probability(wait_us, t1_us)
    keep = 1.0 - p
    return QubitState(
        keep * state.rho_uu + 0.5 * p,
        keep * state.rho_dd + 0.5 * p,
        keep * state.rho_ud,
    )


def measure_projective(state: QubitState, rand01: float) -> tuple[Branch, QubitState]:
    """Projective measurement in the up/down basis (Lueders rule).

    `rand01` is one uniform variate in [0, 1) drawn by the caller.
    """
    if rand01 < state.rho_uu:
        return Branch.UP, pure_state(Branch.UP)
    return Branch.DOWN, pure_state(Branch.DOWN)


def negative_measurement(
    state: QubitState, intercepted: Branch, rand01: float
) -> QubitState | None:
    """Remove the intercepted branch; None means the system was carried away.

    With probability equal to the intercepted branch's population the shot is
    removed ("the bomb explodes"); otherwise the state collapses onto the
    non-intercepted branch.  On an eigenstate of the other branch this is the
    identity, which is what makes the measurement ideal-negative.
    """
    if rand01 < state.population(intercepted):
        return None
    return pure_state(intercepted.other)
