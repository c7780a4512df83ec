"""Seeded shot-campaign engine and the record table it produces.

A campaign samples `shots_per_arm` shots for each (wait value, arm) cell,
with the imperfection model folded in.  Every shot owns a counter-based
stream keyed by (seed, wait_index, arm, shot_index), so a campaign is
reproducible bit-for-bit for any shard layout or thread count.

Records are kept columnar (`ShotTable`) and round-trip losslessly through a
line-oriented CSV with the fixed column order

    protocol_id,arm,wait_us,outcome,shot_index
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import kernels
from .protocols import RamseyConfig, ShotOutcome
from .qubit import Branch, DecayShape, CoherenceModel
from .rng import derive_key

CSV_HEADER = "protocol_id,arm,wait_us,outcome,shot_index"

# Sub-protocol tags folded into the seed for the dichotomic campaign so its
# sub-experiments draw independent streams.
_DICHO_TAG = {"q2q1": 201, "q3q2": 202, "q3q1": 203}


class Arm(enum.Enum):
    WITHOUT_Q2 = "without_q2"
    INTERCEPT_UP = "intercept_up"
    INTERCEPT_DOWN = "intercept_down"

    @property
    def code(self) -> int:
        return _ARM_CODE[self]

    @property
    def intercept(self) -> Branch | None:
        return _ARM_BRANCH[self]


_ARM_CODE = {Arm.WITHOUT_Q2: 0, Arm.INTERCEPT_UP: 1, Arm.INTERCEPT_DOWN: 2}
_ARM_BY_CODE = {v: k for k, v in _ARM_CODE.items()}
_ARM_BY_NAME = {a.value: a for a in Arm}
_ARM_BRANCH = {
    Arm.WITHOUT_Q2: None,
    Arm.INTERCEPT_UP: Branch.UP,
    Arm.INTERCEPT_DOWN: Branch.DOWN,
}

_OUTCOME_BY_CODE = {0: ShotOutcome.D1, 1: ShotOutcome.D2, 2: ShotOutcome.REMOVED}
_OUTCOME_CODE = {v: k for k, v in _OUTCOME_BY_CODE.items()}
_OUTCOME_NAME_BY_CODE = {k: v.value for k, v in _OUTCOME_BY_CODE.items()}
_OUTCOME_CODE_BY_NAME = {v: k for k, v in _OUTCOME_NAME_BY_CODE.items()}


@dataclass(frozen=True)
class ImperfectionModel:
    """State-preparation flip, readout label flip, and T1 spin-flip rate."""

    prep_error: float = 0.01
    readout_error: float = 0.01
    t1_us: float = math.inf

    def __post_init__(self):
        for name in ("prep_error", "readout_error"):
            v = getattr(self, name)
            if not 0.0 <= v < 0.5:
                raise ValueError(f"{name} must lie in [0, 0.5), got {v}")
        if not self.t1_us > 0.0:
            raise ValueError(f"t1_us must be > 0 (inf allowed), got {self.t1_us}")


IDEAL = ImperfectionModel(prep_error=0.0, readout_error=0.0, t1_us=math.inf)


@dataclass(frozen=True)
class ShotRecord:
    protocol_id: str
    arm: Arm
    wait_us: float
    outcome: ShotOutcome
    shot_index: int

    def __post_init__(self):
        if self.outcome is ShotOutcome.REMOVED and self.arm is Arm.WITHOUT_Q2:
            raise ValueError("Removed outcome is impossible without an interception arm")


class ShotTable:
    """Columnar shot records; the unit all estimators consume."""

    __slots__ = ("protocol_id", "arm_code", "wait_us", "outcome_code", "shot_index")

    def __init__(self, protocol_id, arm_code, wait_us, outcome_code, shot_index):
        self.protocol_id = np.asarray(protocol_id, dtype=np.str_)
        self.arm_code = np.asarray(arm_code, dtype=np.uint8)
        self.wait_us = np.asarray(wait_us, dtype=np.float64)
        self.outcome_code = np.asarray(outcome_code, dtype=np.uint8)
        self.shot_index = np.asarray(shot_index, dtype=np.int64)
        n = len(self.protocol_id)
        for col in (self.arm_code, self.wait_us, self.outcome_code, self.shot_index):
            if len(col) != n:
                raise ValueError("all columns must have equal length")
        bad = (self.outcome_code == _OUTCOME_CODE[ShotOutcome.REMOVED]) & (
            self.arm_code == Arm.WITHOUT_Q2.code
        )
        if bad.any():
            raise ValueError("Removed outcome in a without_q2 record")

    def __len__(self) -> int:
        return len(self.protocol_id)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ShotTable):
            return NotImplemented
        return (
            np.array_equal(self.protocol_id, other.protocol_id)
            and np.array_equal(self.arm_code, other.arm_code)
            and np.array_equal(self.wait_us, other.wait_us)
            and np.array_equal(self.outcome_code, other.outcome_code)
            and np.array_equal(self.shot_index, other.shot_index)
        )

    @classmethod
    def empty(cls) -> "ShotTable":
        return cls([], [], [], [], [])

    @classmethod
    def from_records(cls, records: Iterable[ShotRecord]) -> "ShotTable":
        records = list(records)
        return cls(
            [r.protocol_id for r in records],
            [r.arm.code for r in records],
            [r.wait_us for r in records],
            [_OUTCOME_CODE[r.outcome] for r in records],
            [r.shot_index for r in records],
        )

    @classmethod
    def coerce(cls, records) -> "ShotTable":
        if isinstance(records, ShotTable):
            return records
        return cls.from_records(records)

    @classmethod
    def concat(cls, tables: Sequence["ShotTable"]) -> "ShotTable":
        return cls(
            np.concatenate([t.protocol_id for t in tables]) if tables else [],
            np.concatenate([t.arm_code for t in tables]) if tables else [],
            np.concatenate([t.wait_us for t in tables]) if tables else [],
            np.concatenate([t.outcome_code for t in tables]) if tables else [],
            np.concatenate([t.shot_index for t in tables]) if tables else [],
        )

    def records(self) -> Iterator[ShotRecord]:
        for i in range(len(self)):
            yield ShotRecord(
                str(self.protocol_id[i]),
                _ARM_BY_CODE[int(self.arm_code[i])],
                float(self.wait_us[i]),
                _OUTCOME_BY_CODE[int(self.outcome_code[i])],
                int(self.shot_index[i]),
            )

    def take(self, indices) -> "ShotTable":
        return ShotTable(
            self.protocol_id[indices],
            self.arm_code[indices],
            self.wait_us[indices],
            self.outcome_code[indices],
            self.shot_index[indices],
        )

    def with_outcomes(self, outcome_code: np.ndarray) -> "ShotTable":
        """Same shots, substituted outcomes (resampling support)."""
        return ShotTable(
            self.protocol_id, self.arm_code, self.wait_us, outcome_code, self.shot_index
        )

    def filter(self, protocol_id=None, arm=None, wait_us=None) -> "ShotTable":
        mask = np.ones(len(self), dtype=bool)
        if protocol_id is not None:
            mask &= self.protocol_id == protocol_id
        if arm is not None:
            mask &= self.arm_code == arm.code
        if wait_us is not None:
            mask &= self.wait_us == wait_us
        return self.take(mask)

    def counts(self) -> tuple[int, int, int]:
        """(n_d1, n_d2, n_removed)."""
        c = np.bincount(self.outcome_code, minlength=3)
        return int(c[0]), int(c[1]), int(c[2])

    def waits(self) -> list[float]:
        return [float(w) for w in np.unique(self.wait_us)]

    def strata(self) -> list[tuple[tuple, np.ndarray]]:
        """Deterministically ordered (protocol_id, wait_us, arm) groups.

        Group order is lexicographic in the key; indices ascend within each
        group.  Both properties are part of the resampling-seed contract.
        """
        pid_vals, pid_inv = np.unique(self.protocol_id, return_inverse=True)
        wait_vals, wait_inv = np.unique(self.wait_us, return_inverse=True)
        combo = (pid_inv.astype(np.int64) * len(wait_vals) + wait_inv) * 3 + self.arm_code
        out = []
        for cv in np.unique(combo):
            idx = np.nonzero(combo == cv)[0]
            pid_i, rest = divmod(int(cv), 3 * len(wait_vals))
            wait_i, arm = divmod(rest, 3)
            key = (str(pid_vals[pid_i]), float(wait_vals[wait_i]), int(arm))
            out.append((key, idx.astype(np.int64)))
        return out

    def write_csv(self, path) -> None:
        path = Path(path)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(CSV_HEADER + "\n")
            for i in range(len(self)):
                f.write(
                    f"{self.protocol_id[i]},{_ARM_BY_CODE[int(self.arm_code[i])].value},"
                    f"{float(self.wait_us[i])!r},"
                    f"{_OUTCOME_NAME_BY_CODE[int(self.outcome_code[i])]},"
                    f"{int(self.shot_index[i])}\n"
                )

    @classmethod
    def read_csv(cls, path) -> "ShotTable":
        path = Path(path)
        pids, arms, waits, outs, idxs = [], [], [], [], []
        with open(path, "r", encoding="utf-8") as f:
            header = f.readline().rstrip("\n")
            if header != CSV_HEADER:
                raise ValueError(f"unexpected raw-table header: {header!r}")
            for lineno, line in enumerate(f, start=2):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != 5:
                    raise ValueError(f"malformed record on line {lineno}: {line!r}")
                pid, arm_name, wait, outcome_name, idx = parts
                if arm_name not in _ARM_BY_NAME:
                    raise ValueError(f"unknown arm {arm_name!r} on line {lineno}")
                if outcome_name not in _OUTCOME_CODE_BY_NAME:
                    raise ValueError(f"unknown outcome {outcome_name!r} on line {lineno}")
                pids.append(pid)
                arms.append(_ARM_BY_NAME[arm_name].code)
                waits.append(float(wait))
                outs.append(_OUTCOME_CODE_BY_NAME[outcome_name])
                idxs.append(int(idx))
        return cls(pids, arms, waits, outs, idxs)


@dataclass(frozen=True)
class CampaignConfig:
    """Everything a campaign needs; identical configs give identical tables."""

    seed: int
    wait_grid: Sequence[float]
    ramsey: RamseyConfig = RamseyConfig()
    imperfections: ImperfectionModel = field(default_factory=ImperfectionModel)
    shots_per_arm: int = 2000
    protocol_id: str = "lg_ramsey"

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit non-negative integer")
        if self.shots_per_arm < 1:
            raise ValueError(f"shots_per_arm must be >= 1, got {self.shots_per_arm}")
        grid = list(self.wait_grid)
        if not grid:
            raise ValueError("wait_grid must be non-empty")
        if any(w < 0 for w in grid):
            raise ValueError("wait_grid values must be non-negative")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("wait_grid must be strictly increasing")


def derive_arm_seed(seed: int, wait_index: int, arm: Arm, shot_index: int) -> int:
    """Stream key of one shot; permuting evaluation order never changes it."""
    return derive_key(seed, (wait_index, arm.code, shot_index))


def _chunks(n: int, pieces: int) -> list[tuple[int, int]]:
    pieces = max(1, min(pieces, n))
    size = -(-n // pieces)
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def _sample_cells(cells: list[dict], seed: int, shots: int, threads: int) -> list[np.ndarray]:
    """Sample outcome arrays for campaign cells, sharded but order-invariant."""
    outs = [np.empty(shots, dtype=np.uint8) for _ in cells]
    tasks = []
    for ci, cell in enumerate(cells):
        for lo, hi in _chunks(shots, threads):
            tasks.append((ci, lo, hi))

    def run(task):
        ci, lo, hi = task
        cell = cells[ci]
        outs[ci][lo:hi] = kernels.sample_ramsey(
            cell.get("seed", seed), cell["wait_index"], cell["arm"].code,
            lo, hi - lo, cell["params"],
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, tasks))
    else:
        for t in tasks:
            run(t)
    return outs


def _cell_table(protocol_id: str, arm: Arm, wait: float, outcomes: np.ndarray) -> ShotTable:
    n = len(outcomes)
    return ShotTable(
        np.full(n, protocol_id), np.full(n, arm.code, dtype=np.uint8),
        np.full(n, wait), outcomes, np.arange(n, dtype=np.int64),
    )


def sample_campaign(config: CampaignConfig, threads: int = 1) -> ShotTable:
    """All three arms over the wait grid; deterministic in (config, seed).

    The imperfection model owns the T1 channel: its t1_us supersedes whatever
    the RamseyConfig template carries.
    """
    imp = config.imperfections
    cells = []
    for wi, wait in enumerate(config.wait_grid):
        for arm in Arm:
            cfg = replace(
                config.ramsey, wait_us=wait, intercept=arm.intercept, t1_us=imp.t1_us
            )
            cells.append(
                {
                    "wait_index": wi,
                    "arm": arm,
                    "wait": wait,
                    "params": kernels.RamseyKernelParams.from_config(
                        cfg, imp.prep_error, imp.readout_error
                    ),
                }
            )
    outs = _sample_cells(cells, config.seed, config.shots_per_arm, threads)
    return ShotTable.concat(
        [
            _cell_table(config.protocol_id, c["arm"], c["wait"], o)
            for c, o in zip(cells, outs)
        ]
    )


def sample_dichotomic_campaign(config: CampaignConfig, threads: int = 1) -> ShotTable:
    """The pi/3 campaign: three sub-protocols sharing one seed.

    dichotomic_q2q1 reads out right after the first pulse (zero wait; the
    record's wait_us column carries the campaign wait for grouping),
    dichotomic_q3q2 runs the two interception arms, dichotomic_q3q1 the plain
    two-pulse sequence.
    """
    if not math.isclose(config.ramsey.pulse_theta, math.pi / 3.0, abs_tol=1e-12):
        raise ValueError("dichotomic campaign requires pulse_theta = pi/3")
    imp = config.imperfections
    cells = []
    for wi, wait in enumerate(config.wait_grid):
        q2q1_cfg = replace(config.ramsey, wait_us=0.0, intercept=None, t1_us=imp.t1_us)
        cells.append(
            {
                "sub": "q2q1", "arm": Arm.WITHOUT_Q2, "wait": wait, "wait_index": wi,
                "seed": derive_key(config.seed, (_DICHO_TAG["q2q1"],)),
                "params": kernels.RamseyKernelParams.from_config(
                    q2q1_cfg, imp.prep_error, imp.readout_error, second_theta=0.0
                ),
            }
        )
        for arm in (Arm.INTERCEPT_UP, Arm.INTERCEPT_DOWN):
            cfg = replace(
                config.ramsey, wait_us=wait, intercept=arm.intercept, t1_us=imp.t1_us
            )
            cells.append(
                {
                    "sub": "q3q2", "arm": arm, "wait": wait, "wait_index": wi,
                    "seed": derive_key(config.seed, (_DICHO_TAG["q3q2"],)),
                    "params": kernels.RamseyKernelParams.from_config(
                        cfg, imp.prep_error, imp.readout_error
                    ),
                }
            )
        q3q1_cfg = replace(config.ramsey, wait_us=wait, intercept=None, t1_us=imp.t1_us)
        cells.append(
            {
                "sub": "q3q1", "arm": Arm.WITHOUT_Q2, "wait": wait, "wait_index": wi,
                "seed": derive_key(config.seed, (_DICHO_TAG["q3q1"],)),
                "params": kernels.RamseyKernelParams.from_config(
                    q3q1_cfg, imp.prep_error, imp.readout_error
                ),
            }
        )
    outs = _sample_cells(cells, config.seed, config.shots_per_arm, threads)
    return ShotTable.concat(
        [
            _cell_table(f"dichotomic_{c['sub']}", c["arm"], c["wait"], o)
            for c, o in zip(cells, outs)
        ]
    )


def theory_band(
    wait_grid: Sequence[float],
    tau_low_us: float = 75.0,
    tau_high_us: float = 200.0,
    shape: DecayShape = DecayShape.EXPONENTIAL,
) -> list[tuple[float, float]]:
    """Per-wait (K_low, K_high) prediction band, K(t) = 1 + c(t) at the two
    coherence times."""
    if not tau_low_us < tau_high_us:
        raise ValueError("tau_low_us must be smaller than tau_high_us")
    low = CoherenceModel(shape, tau_low_us)
    high = CoherenceModel(shape, tau_high_us)
    return [(1.0 + low.factor(w), 1.0 + high.factor(w)) for w in wait_grid]
