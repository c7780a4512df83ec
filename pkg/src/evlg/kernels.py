"""Kernel backend selection and the batch sampling API.

At import time the compiled extension is preferred; setting the environment
variable EVLG_PURE_PYTHON=1 (or a failed build) selects the numpy fallback.
Both backends consume identical precomputed double parameters (built here, in
one place) and produce bit-identical outcome arrays.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import _kernels_py
from .protocols import BombTestConfig, RamseyConfig, zeno_block_probability
from .qubit import Branch, spin_flip_probability

if os.environ.get("EVLG_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

# Outcome codes shared by both backends.
OUTCOME_D1 = _kernels_py.OUTCOME_D1
OUTCOME_D2 = _kernels_py.OUTCOME_D2
OUTCOME_REMOVED = _kernels_py.OUTCOME_REMOVED
MZ_D1 = _kernels_py.MZ_D1
MZ_D2 = _kernels_py.MZ_D2
MZ_EXPLODED = _kernels_py.MZ_EXPLODED
REP_RESCUED = _kernels_py.REP_RESCUED
REP_EXPLODED = _kernels_py.REP_EXPLODED
REP_INCONCLUSIVE = _kernels_py.REP_INCONCLUSIVE

# Stream tags for the non-interferometer kernels (wait-index slot of the key).
TAG_MZ = 101
TAG_REPEATED = 102
TAG_ZENO = 103

_INTERCEPT_CODE = {None: 0, Branch.UP: 1, Branch.DOWN: 2}


def backend() -> str:
    """Name of the active backend: "cython" or "python"."""
    return BACKEND


def available_backends() -> dict:
    """Importable kernel modules keyed by backend name (for benchmarks/tests)."""
    impls = {"python": _kernels_py}
    try:
        from . import _kernels_cy

        impls["cython"] = _kernels_cy
    except ImportError:
        pass
    return impls


@dataclass(frozen=True)
class RamseyKernelParams:
    """Shot-independent doubles for one (config, imperfections, wait) cell.

    Computed once so that every backend sees the exact same values; the
    kernels themselves never call transcendental functions.
    """

    c1: float
    s1: float
    cp1: float
    sp1: float
    c2: float
    s2: float
    cp2: float
    sp2: float
    coh: float
    keep: float
    half_flip: float
    intercept_code: int
    prep_error: float
    readout_error: float

    @classmethod
    def from_config(
        cls,
        config: RamseyConfig,
        prep_error: float = 0.0,
        readout_error: float = 0.0,
        second_theta: float | None = None,
    ) -> "RamseyKernelParams":
        p1 = config.first_pulse()
        p2 = config.second_pulse()
        theta2 = p2.theta if second_theta is None else second_theta
        flip = spin_flip_probability(config.wait_us, config.t1_us)
        return cls(
            c1=math.cos(0.5 * p1.theta),
            s1=math.sin(0.5 * p1.theta),
            cp1=math.cos(p1.phi),
            sp1=math.sin(p1.phi),
            c2=math.cos(0.5 * theta2),
            s2=math.sin(0.5 * theta2),
            cp2=math.cos(p2.phi),
            sp2=math.sin(p2.phi),
            coh=config.coherence.factor(config.wait_us),
            keep=1.0 - flip,
            half_flip=0.5 * flip,
            intercept_code=_INTERCEPT_CODE[config.intercept],
            prep_error=prep_error,
            readout_error=readout_error,
        )


def sample_ramsey(
    seed: int,
    wait_index: int,
    arm_code: int,
    start: int,
    n: int,
    params: RamseyKernelParams,
) -> np.ndarray:
    """Outcome codes for shots [start, start+n) of one campaign cell."""
    out = np.empty(n, dtype=np.uint8)
    _impl.ramsey_fill(
        out, seed, wait_index, arm_code, start,
        params.c1, params.s1, params.cp1, params.sp1,
        params.c2, params.s2, params.cp2, params.sp2,
        params.coh, params.keep, params.half_flip,
        params.intercept_code, params.prep_error, params.readout_error,
    )
    return out


def sample_mz(
    seed: int, config: BombTestConfig, n: int, start: int = 0, variant: int = 0
) -> np.ndarray:
    out = np.empty(n, dtype=np.uint8)
    alpha = 0.5 * (1.0 - config.contrast)
    _impl.mz_fill(
        out, seed, TAG_MZ, variant, start,
        1 if config.bomb_present else 0, config.branch_b_probability, alpha,
    )
    return out


def sample_repeated(
    seed: int,
    branch_b_probability: float,
    max_rounds: int,
    n: int,
    start: int = 0,
    variant: int = 0,
) -> np.ndarray:
    out = np.empty(n, dtype=np.uint8)
    _impl.repeated_fill(
        out, seed, TAG_REPEATED, variant, start, branch_b_probability, max_rounds
    )
    return out


def sample_zeno(
    seed: int, n_cycles: int, n: int, start: int = 0, variant: int = 0
) -> np.ndarray:
    """1 for shots where the live object is detected without absorption."""
    out = np.empty(n, dtype=np.uint8)
    _impl.zeno_fill(
        out, seed, TAG_ZENO, variant, start, n_cycles, zeno_block_probability(n_cycles)
    )
    return out
