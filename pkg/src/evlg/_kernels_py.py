"""Pure-Python (numpy) shot-sampling kernels.

Fallback backend used when the compiled extension is unavailable.  The two
backends must stay in lockstep: same splitmix64 stream construction, same
variate positions per shot, same double-precision operation order, so that
records are bit-identical whichever backend is active.  Any change here must
be mirrored in _kernels_cy.pyx.

Uniform variate positions per shot (unused positions are simply never read;
each shot owns its stream, so this costs nothing):

  ramsey:    0 prep flip | 1 interception (if any) | next readout | next label flip
  mz:        0 explode (live) or dark port (dud) | 1 dark port (live)
  repeated:  2r explode | 2r+1 dark port, round r = 0, 1, ...
  zeno:      c interception of cycle c
"""

from __future__ import annotations

import numpy as np

from .rng import GAMMA, mix64, mix64_vec as _mix_vec

_MASK = 0xFFFFFFFFFFFFFFFF
_U53 = 1.0 / 9007199254740992.0

OUTCOME_D1 = 0
OUTCOME_D2 = 1
OUTCOME_REMOVED = 2

MZ_D1 = 0
MZ_D2 = 1
MZ_EXPLODED = 2

REP_RESCUED = 0
REP_EXPLODED = 1
REP_INCONCLUSIVE = 2

INTERCEPT_NONE = 0
INTERCEPT_UP = 1
INTERCEPT_DOWN = 2


def derive_keys(seed: int, f1: int, f2: int, start: int, n: int) -> np.ndarray:
    """Vector of per-shot stream keys; equals rng.derive_key(seed, (f1, f2, i))."""
    h = seed & _MASK
    for f in (f1, f2):
        h = mix64(((h ^ (f & _MASK)) + GAMMA) & _MASK)
    shots = np.arange(start, start + n, dtype=np.uint64)
    return _mix_vec((np.uint64(h) ^ shots) + np.uint64(GAMMA))


def _u01(keys: np.ndarray, position: int) -> np.ndarray:
    inc = np.uint64(((position + 1) * GAMMA) & _MASK)
    z = _mix_vec(keys + inc)
    return (z >> np.uint64(11)).astype(np.float64) * _U53


def _rotate(a, b, mr, mi, c, s, cp, sp):
    # Mirrors qubit.apply_rotation decomposed to reals; op order is part of
    # the backend-equality contract.
    cc = c * c
    ss = s * s
    cs = c * s
    c2p = cp * cp - sp * sp
    s2p = 2.0 * cp * sp
    d = a - b
    cross = 2.0 * cs * (sp * mr + cp * mi)
    na = cc * a + ss * b - cross
    nb = ss * a + cc * b + cross
    nmr = cc * mr + ss * (c2p * mr - s2p * mi) + cs * d * sp
    nmi = cc * mi - ss * (c2p * mi + s2p * mr) + cs * d * cp
    return na, nb, nmr, nmi


def ramsey_fill(
    out: np.ndarray,
    seed: int,
    wait_index: int,
    arm_code: int,
    start: int,
    c1: float, s1: float, cp1: float, sp1: float,
    c2: float, s2: float, cp2: float, sp2: float,
    coh: float,
    keep: float,
    half_flip: float,
    intercept_code: int,
    prep_error: float,
    readout_error: float,
) -> None:
    n = out.shape[0]
    keys = derive_keys(seed, wait_index, arm_code, start, n)

    flipped = _u01(keys, 0) < prep_error
    a = np.where(flipped, 0.0, 1.0)
    b = np.where(flipped, 1.0, 0.0)
    mr = np.zeros(n)
    mi = np.zeros(n)

    a, b, mr, mi = _rotate(a, b, mr, mi, c1, s1, cp1, sp1)

    if intercept_code != INTERCEPT_NONE:
        p_int = a if intercept_code == INTERCEPT_UP else b
        removed = _u01(keys, 1) < p_int
        survivor_up = 1.0 if intercept_code == INTERCEPT_DOWN else 0.0
        a = np.full(n, survivor_up)
        b = np.full(n, 1.0 - survivor_up)
        mr = np.zeros(n)
        mi = np.zeros(n)
        k_meas, k_flip = 2, 3
    else:
        removed = np.zeros(n, dtype=bool)
        k_meas, k_flip = 1, 2

    mr = mr * coh
    mi = mi * coh
    a = keep * a + half_flip
    b = keep * b + half_flip
    mr = keep * mr
    mi = keep * mi

    a, b, mr, mi = _rotate(a, b, mr, mi, c2, s2, cp2, sp2)

    up = _u01(keys, k_meas) < a
    up = up ^ (_u01(keys, k_flip) < readout_error)
    res = np.where(up, OUTCOME_D1, OUTCOME_D2).astype(np.uint8)
    res[removed] = OUTCOME_REMOVED
    out[:] = res


def mz_fill(
    out: np.ndarray,
    seed: int,
    tag: int,
    variant: int,
    start: int,
    bomb_present: int,
    eps: float,
    alpha: float,
) -> None:
    n = out.shape[0]
    keys = derive_keys(seed, tag, variant, start, n)
    if bomb_present:
        exploded = _u01(keys, 0) < eps
        dark = _u01(keys, 1) < eps
        res = np.where(dark, MZ_D1, MZ_D2).astype(np.uint8)
        res[exploded] = MZ_EXPLODED
    else:
        res = np.where(_u01(keys, 0) < alpha, MZ_D1, MZ_D2).astype(np.uint8)
    out[:] = res


def repeated_fill(
    out: np.ndarray,
    seed: int,
    tag: int,
    variant: int,
    start: int,
    eps: float,
    max_rounds: int,
) -> None:
    n = out.shape[0]
    out[:] = REP_INCONCLUSIVE
    keys = derive_keys(seed, tag, variant, start, n)
    active = np.arange(n)
    for r in range(max_rounds):
        if active.size == 0:
            break
        k = keys[active]
        exploded = _u01(k, 2 * r) < eps
        rescued = ~exploded & (_u01(k, 2 * r + 1) < eps)
        out[active[exploded]] = REP_EXPLODED
        out[active[rescued]] = REP_RESCUED
        active = active[~(exploded | rescued)]


def zeno_fill(
    out: np.ndarray,
    seed: int,
    tag: int,
    variant: int,
    start: int,
    n_cycles: int,
    p_block: float,
) -> None:
    n = out.shape[0]
    out[:] = 1
    keys = derive_keys(seed, tag, variant, start, n)
    active = np.arange(n)
    for c in range(n_cycles):
        if active.size == 0:
            break
        absorbed = _u01(keys[active], c) < p_block
        out[active[absorbed]] = 0
        active = active[~absorbed]
