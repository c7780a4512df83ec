"""Independent oracles the tests check the package against.

Everything here is deliberately written from scratch on plain numpy matrices
and exact tail sums, not by calling back into the package's channel or
statistics code.
"""

from __future__ import annotations

import math
from math import comb

import numpy as np


def rotation_matrix(theta: float, phi: float) -> np.ndarray:
    """exp(-i*(theta/2)*(cos(phi)*sx + sin(phi)*sy)) built by eigendecomposition."""
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    sy = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
    gen = math.cos(phi) * sx + math.sin(phi) * sy
    vals, vecs = np.linalg.eigh(gen)
    return vecs @ np.diag(np.exp(-0.5j * theta * vals)) @ vecs.conj().T


def rho_matrix(rho_uu: float, rho_dd: float, rho_ud: complex) -> np.ndarray:
    return np.array([[rho_uu, rho_ud], [np.conj(rho_ud), rho_dd]], dtype=complex)


def rotate_rho(rho: np.ndarray, theta: float, phi: float) -> np.ndarray:
    u = rotation_matrix(theta, phi)
    return u @ rho @ u.conj().T


def dephase_rho(rho: np.ndarray, factor: float) -> np.ndarray:
    out = rho.copy()
    out[0, 1] *= factor
    out[1, 0] *= factor
    return out


def spin_flip_rho(rho: np.ndarray, p: float) -> np.ndarray:
    return (1.0 - p) * rho + p * np.trace(rho).real * 0.5 * np.eye(2, dtype=complex)


def ramsey_distribution(
    theta: float,
    phi: float,
    phi2: float,
    coherence_factor: float,
    flip_probability: float,
    intercept: str | None,
) -> tuple[float, float, float]:
    """(p_d1, p_d2, p_removed) of the full sequence by matrix algebra.

    intercept: None, "up" or "down"; survivors collapse on the other branch.
    """
    rho = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    rho = rotate_rho(rho, theta, phi)
    weight = 1.0
    p_removed = 0.0
    if intercept is not None:
        idx = 0 if intercept == "up" else 1
        p_removed = rho[idx, idx].real
        weight = 1.0 - p_removed
        rho = np.zeros((2, 2), dtype=complex)
        rho[1 - idx, 1 - idx] = 1.0
    rho = dephase_rho(rho, coherence_factor)
    rho = spin_flip_rho(rho, flip_probability)
    rho = rotate_rho(rho, theta, phi2)
    return (weight * rho[0, 0].real, weight * rho[1, 1].real, p_removed)


def binomial_cdf(k: int, n: int, p: float) -> float:
    """Exact tail sum of the binomial CDF."""
    if p <= 0.0:
        return 1.0
    if p >= 1.0:
        return 0.0 if k < n else 1.0
    return sum(comb(n, j) * p**j * (1.0 - p) ** (n - j) for j in range(0, k + 1))


def clopper_pearson_bisect(successes: int, trials: int, confidence: float):
    """Exact interval by bisection on the binomial tails."""
    tail = 0.5 * (1.0 - confidence)

    def solve(f, lo, hi):
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if f(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    if successes == 0:
        lo = 0.0
    else:
        # largest p with P[X >= successes] <= tail
        lo = solve(lambda p: tail - (1.0 - binomial_cdf(successes - 1, trials, p)), 0.0, 1.0)
    if successes == trials:
        hi = 1.0
    else:
        # smallest p with P[X <= successes] <= tail
        hi = solve(lambda p: binomial_cdf(successes, trials, p) - tail, 0.0, 1.0)
    return lo, hi


def repeated_rescue_series(eps: float, rounds: int) -> float:
    """Rescue probability by explicit geometric summation over rounds."""
    per_round_rescue = (1.0 - eps) * eps
    per_round_continue = (1.0 - eps) ** 2
    return per_round_rescue * sum(per_round_continue**k for k in range(rounds))
