"""Command-line front end.

Subcommands: lg-sweep (wait-time sweep of the correlation function K with
the theory band), dichotomic (the pi/3 variant), bombtest (closed-form vs
Monte Carlo figures of merit) and verify (recompute a sweep's summary from
its raw records and compare byte-for-byte).

Exit codes: 0 success, 2 config validation failure, 3 I/O failure,
4 internal invariant breach (verification mismatch).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .bombtest import repeated_trial_power, single_trial_figures
from .estimators import (
    bootstrap_sigma,
    dichotomic_correlations,
    estimate_contrast,
    estimate_K_dichotomic,
    estimate_K_simplified,
    k_dichotomic,
    k_simplified,
    monte_carlo_sigma,
    quantum_witness,
)
from .experiment import (
    Arm,
    CampaignConfig,
    ImperfectionModel,
    ShotTable,
    sample_campaign,
    sample_dichotomic_campaign,
    theory_band,
)
from .protocols import BombTestConfig, RamseyConfig, zeno_success_probability
from .qubit import CoherenceModel, DecayShape
from .rng import derive_key

LG_SUMMARY_HEADER = (
    "wait_us,K,sigma_bootstrap,sigma_mc,C,W,significance,K_theory_low,K_theory_high"
)
DICHO_SUMMARY_HEADER = (
    "wait_us,q2q1,sigma_q2q1,q3q2,sigma_q3q2,q3q1,sigma_q3q1,"
    "K,sigma_bootstrap,sigma_mc,significance"
)
BOMBTEST_HEADER = "metric,closed_form,monte_carlo,mc_sigma,shots"

_RESAMPLE_SEED_TAG = 777


class ConfigError(ValueError):
    """Invalid configuration; maps to exit code 2."""


class VerifyError(RuntimeError):
    """Stored outputs disagree with recomputation; maps to exit code 4."""


def _fmt(x: float) -> str:
    """Fixed 9-significant-digit float rendering for replayable tables."""
    return format(float(x), ".9g")


# ---------------------------------------------------------------------------
# config parsing


def _require(cfg: dict, key: str, path: str = ""):
    if key not in cfg:
        raise ConfigError(f"missing required config key '{path}{key}'")
    return cfg[key]


def _check_unknown(cfg: dict, allowed: set, path: str = "") -> None:
    for key in cfg:
        if key not in allowed:
            raise ConfigError(f"unknown config key '{path}{key}'")


def _as_number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"config key '{key}' must be a number")
    return float(value)


def _as_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"config key '{key}' must be an integer")
    return value


def _parse_config(raw: dict, command: str, seed_override=None, shots_override=None) -> dict:
    """Validate a run config (fail-closed) and return it fully resolved."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    _check_unknown(
        raw,
        {
            "seed", "shots_per_arm", "wait_grid_us", "pulse", "phase_offset_rad",
            "coherence", "imperfections", "protocol_id", "theory_band", "estimators",
        },
    )

    seed = _as_int(raw["seed"], "seed") if "seed" in raw else None
    if seed_override is not None:
        seed = seed_override
    if seed is None:
        raise ConfigError("missing required config key 'seed'")
    if not 0 <= seed < 2**64:
        raise ConfigError("config key 'seed' must be a 64-bit non-negative integer")

    shots = _as_int(raw.get("shots_per_arm", 2000), "shots_per_arm")
    if shots_override is not None:
        shots = shots_override
    if shots < 1:
        raise ConfigError("config key 'shots_per_arm' must be >= 1")

    grid_raw = _require(raw, "wait_grid_us")
    if not isinstance(grid_raw, list) or not grid_raw:
        raise ConfigError("config key 'wait_grid_us' must be a non-empty list")
    grid = [_as_number(w, "wait_grid_us") for w in grid_raw]
    if any(w < 0 for w in grid):
        raise ConfigError("config key 'wait_grid_us' must be non-negative")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("config key 'wait_grid_us' must be strictly increasing")

    default_theta = math.pi / 3.0 if command == "dichotomic" else math.pi / 2.0
    pulse = raw.get("pulse", {})
    if not isinstance(pulse, dict):
        raise ConfigError("config key 'pulse' must be an object")
    _check_unknown(pulse, {"theta_rad", "phi_rad"}, "pulse.")
    theta = _as_number(pulse.get("theta_rad", default_theta), "pulse.theta_rad")
    phi = _as_number(pulse.get("phi_rad", 0.0), "pulse.phi_rad")
    if not 0.0 < theta <= math.pi:
        raise ConfigError("config key 'pulse.theta_rad' must lie in (0, pi]")
    if command == "dichotomic" and not math.isclose(theta, math.pi / 3.0, abs_tol=1e-12):
        raise ConfigError("config key 'pulse.theta_rad' must be pi/3 for dichotomic runs")

    phase_offset = _as_number(raw.get("phase_offset_rad", 0.0), "phase_offset_rad")

    coherence = raw.get("coherence", {})
    if not isinstance(coherence, dict):
        raise ConfigError("config key 'coherence' must be an object")
    _check_unknown(coherence, {"shape", "tau_us"}, "coherence.")
    shape = coherence.get("shape", "exponential")
    if shape not in ("exponential", "gaussian"):
        raise ConfigError("config key 'coherence.shape' must be exponential or gaussian")
    tau = _as_number(coherence.get("tau_us", 130.0), "coherence.tau_us")
    if tau <= 0:
        raise ConfigError("config key 'coherence.tau_us' must be > 0")

    imp = raw.get("imperfections", {})
    if not isinstance(imp, dict):
        raise ConfigError("config key 'imperfections' must be an object")
    _check_unknown(imp, {"prep_error", "readout_error", "t1_us"}, "imperfections.")
    prep = _as_number(imp.get("prep_error", 0.01), "imperfections.prep_error")
    readout = _as_number(imp.get("readout_error", 0.01), "imperfections.readout_error")
    for name, v in (("prep_error", prep), ("readout_error", readout)):
        if not 0.0 <= v < 0.5:
            raise ConfigError(f"config key 'imperfections.{name}' must lie in [0, 0.5)")
    t1 = imp.get("t1_us", None)
    t1 = math.inf if t1 is None else _as_number(t1, "imperfections.t1_us")
    if t1 <= 0:
        raise ConfigError("config key 'imperfections.t1_us' must be > 0 or null")

    default_pid = "dichotomic" if command == "dichotomic" else "lg_ramsey"
    protocol_id = raw.get("protocol_id", default_pid)
    if not isinstance(protocol_id, str) or not protocol_id or "," in protocol_id:
        raise ConfigError("config key 'protocol_id' must be a comma-free string")

    band = raw.get("theory_band", {})
    if not isinstance(band, dict):
        raise ConfigError("config key 'theory_band' must be an object")
    _check_unknown(band, {"tau_low_us", "tau_high_us"}, "theory_band.")
    tau_low = _as_number(band.get("tau_low_us", 75.0), "theory_band.tau_low_us")
    tau_high = _as_number(band.get("tau_high_us", 200.0), "theory_band.tau_high_us")
    if not 0 < tau_low < tau_high:
        raise ConfigError("config key 'theory_band' requires 0 < tau_low_us < tau_high_us")

    est = raw.get("estimators", {})
    if not isinstance(est, dict):
        raise ConfigError("config key 'estimators' must be an object")
    _check_unknown(est, {"n_bootstrap", "n_monte_carlo", "resample_seed"}, "estimators.")
    n_boot = _as_int(est.get("n_bootstrap", 2000), "estimators.n_bootstrap")
    n_mc = _as_int(est.get("n_monte_carlo", 2000), "estimators.n_monte_carlo")
    if n_boot < 100 or n_mc < 100:
        raise ConfigError("config keys 'estimators.n_*' must be >= 100")
    resample_seed = est.get("resample_seed", derive_key(seed, (_RESAMPLE_SEED_TAG,)))
    resample_seed = _as_int(resample_seed, "estimators.resample_seed")

    return {
        "command": command,
        "seed": seed,
        "shots_per_arm": shots,
        "wait_grid_us": grid,
        "pulse": {"theta_rad": theta, "phi_rad": phi},
        "phase_offset_rad": phase_offset,
        "coherence": {"shape": shape, "tau_us": tau},
        "imperfections": {
            "prep_error": prep,
            "readout_error": readout,
            "t1_us": None if math.isinf(t1) else t1,
        },
        "protocol_id": protocol_id,
        "theory_band": {"tau_low_us": tau_low, "tau_high_us": tau_high},
        "estimators": {
            "n_bootstrap": n_boot,
            "n_monte_carlo": n_mc,
            "resample_seed": resample_seed,
        },
    }


@dataclass(frozen=True)
class RunSettings:
    campaign: CampaignConfig
    n_bootstrap: int
    n_monte_carlo: int
    resample_seed: int
    tau_low_us: float
    tau_high_us: float
    resolved: dict


def _settings(resolved: dict) -> RunSettings:
    t1 = resolved["imperfections"]["t1_us"]
    ramsey = RamseyConfig(
        pulse_theta=resolved["pulse"]["theta_rad"],
        pulse_phi=resolved["pulse"]["phi_rad"],
        wait_us=0.0,
        coherence=CoherenceModel(
            DecayShape(resolved["coherence"]["shape"]), resolved["coherence"]["tau_us"]
        ),
        t1_us=math.inf if t1 is None else t1,
        intercept=None,
        phase_offset=resolved["phase_offset_rad"],
    )
    campaign = CampaignConfig(
        seed=resolved["seed"],
        wait_grid=resolved["wait_grid_us"],
        ramsey=ramsey,
        imperfections=ImperfectionModel(
            prep_error=resolved["imperfections"]["prep_error"],
            readout_error=resolved["imperfections"]["readout_error"],
            t1_us=math.inf if t1 is None else t1,
        ),
        shots_per_arm=resolved["shots_per_arm"],
        protocol_id=resolved["protocol_id"],
    )
    return RunSettings(
        campaign=campaign,
        n_bootstrap=resolved["estimators"]["n_bootstrap"],
        n_monte_carlo=resolved["estimators"]["n_monte_carlo"],
        resample_seed=resolved["estimators"]["resample_seed"],
        tau_low_us=resolved["theory_band"]["tau_low_us"],
        tau_high_us=resolved["theory_band"]["tau_high_us"],
        resolved=resolved,
    )


def _load_settings(args, command: str) -> RunSettings:
    path = Path(args.config)
    text = path.read_text(encoding="utf-8")  # OSError -> exit 3
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    resolved = _parse_config(raw, command, args.seed, args.shots)
    return _settings(resolved)


# ---------------------------------------------------------------------------
# summaries


def _arm_counts(table: ShotTable) -> dict:
    out = {}
    for arm in Arm:
        sub = table.filter(arm=arm)
        if len(sub) == 0:
            continue
        n_d1, n_d2, n_removed = sub.counts()
        out[arm.value] = {"shots": len(sub), "d1": n_d1, "d2": n_d2, "removed": n_removed}
    return out


def _significance(k_value: float, sigma: float) -> float:
    return (k_value - 1.0) / sigma if sigma > 0.0 else math.nan


def _lg_rows(table: ShotTable, settings: RunSettings) -> list[dict]:
    grid = list(settings.campaign.wait_grid)
    band = theory_band(
        grid, settings.tau_low_us, settings.tau_high_us,
        settings.campaign.ramsey.coherence.shape,
    )
    rows = []
    for wi, (wait, (k_low, k_high)) in enumerate(zip(grid, band)):
        sub = table.filter(wait_us=wait)
        k_est = estimate_K_simplified(
            sub.filter(arm=Arm.WITHOUT_Q2),
            sub.filter(arm=Arm.INTERCEPT_UP),
            sub.filter(arm=Arm.INTERCEPT_DOWN),
        )
        rseed = derive_key(settings.resample_seed, (wi,))
        sigma_boot = bootstrap_sigma(sub, k_simplified, settings.n_bootstrap, rseed)
        sigma_mc = monte_carlo_sigma(sub, k_simplified, settings.n_monte_carlo, rseed)
        contrast = estimate_contrast(sub.filter(arm=Arm.WITHOUT_Q2))
        rows.append(
            {
                "wait_us": wait,
                "K": k_est.value,
                "sigma_bootstrap": sigma_boot,
                "sigma_mc": sigma_mc,
                "C": contrast.value,
                "W": quantum_witness(k_est.value),
                "significance": _significance(k_est.value, sigma_boot),
                "K_theory_low": k_low,
                "K_theory_high": k_high,
                "arms": _arm_counts(sub),
            }
        )
    return rows


def _lg_summary_text(rows: list[dict]) -> str:
    lines = [LG_SUMMARY_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                _fmt(r[c])
                for c in (
                    "wait_us", "K", "sigma_bootstrap", "sigma_mc", "C", "W",
                    "significance", "K_theory_low", "K_theory_high",
                )
            )
        )
    return "\n".join(lines) + "\n"


def _dichotomic_rows(table: ShotTable, settings: RunSettings) -> list[dict]:
    rows = []
    for wi, wait in enumerate(settings.campaign.wait_grid):
        sub = table.filter(wait_us=wait)
        corr = dichotomic_correlations(sub)
        k_est = estimate_K_dichotomic(corr)
        rseed = derive_key(settings.resample_seed, (wi,))
        sigma_boot = bootstrap_sigma(sub, k_dichotomic, settings.n_bootstrap, rseed)
        sigma_mc = monte_carlo_sigma(sub, k_dichotomic, settings.n_monte_carlo, rseed)
        rows.append(
            {
                "wait_us": wait,
                "q2q1": corr.q2q1.value,
                "sigma_q2q1": corr.q2q1.sigma,
                "q3q2": corr.q3q2.value,
                "sigma_q3q2": corr.q3q2.sigma,
                "q3q1": corr.q3q1.value,
                "sigma_q3q1": corr.q3q1.sigma,
                "K": k_est.value,
                "sigma_bootstrap": sigma_boot,
                "sigma_mc": sigma_mc,
                "significance": _significance(k_est.value, sigma_boot),
                "arms": _arm_counts(sub),
            }
        )
    return rows


def _dichotomic_summary_text(rows: list[dict]) -> str:
    lines = [DICHO_SUMMARY_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                _fmt(r[c])
                for c in (
                    "wait_us", "q2q1", "sigma_q2q1", "q3q2", "sigma_q3q2",
                    "q3q1", "sigma_q3q1", "K", "sigma_bootstrap", "sigma_mc",
                    "significance",
                )
            )
        )
    return "\n".join(lines) + "\n"


def _write_outputs(out_dir: Path, table: ShotTable, rows, summary_text, settings) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    table.write_csv(out_dir / "raw.csv")
    (out_dir / "summary.csv").write_text(summary_text, encoding="utf-8")
    manifest = {
        "artifact": "evlg",
        "version": __version__,
        "command": settings.resolved["command"],
        "seed": settings.resolved["seed"],
        "config": settings.resolved,
        "results": rows,
        "theory_band": {
            "tau_low_us": settings.tau_low_us,
            "tau_high_us": settings.tau_high_us,
        },
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    for name in ("raw.csv", "summary.csv", "manifest.json"):
        print(f"wrote {out_dir / name}")


# ---------------------------------------------------------------------------
# commands


def cmd_lg_sweep(args) -> int:
    settings = _load_settings(args, "lg-sweep")
    table = sample_campaign(settings.campaign, threads=args.threads)
    rows = _lg_rows(table, settings)
    _write_outputs(Path(args.out_dir), table, rows, _lg_summary_text(rows), settings)
    return 0


def cmd_dichotomic(args) -> int:
    settings = _load_settings(args, "dichotomic")
    table = sample_dichotomic_campaign(settings.campaign, threads=args.threads)
    rows = _dichotomic_rows(table, settings)
    _write_outputs(Path(args.out_dir), table, rows, _dichotomic_summary_text(rows), settings)
    return 0


def cmd_bombtest(args) -> int:
    eps = args.split_ratio
    if not 0.0 < eps < 1.0:
        raise ConfigError(f"--split-ratio must lie in (0, 1), got {eps}")
    if not 0.0 <= args.contrast <= 1.0:
        raise ConfigError(f"--contrast must lie in [0, 1], got {args.contrast}")
    if args.rounds < 1:
        raise ConfigError(f"--rounds must be >= 1, got {args.rounds}")
    if args.zeno_cycles < 1:
        raise ConfigError(f"--zeno-cycles must be >= 1, got {args.zeno_cycles}")
    if args.shots < 1:
        raise ConfigError(f"--shots must be >= 1, got {args.shots}")
    if not 0 <= args.seed < 2**64:
        raise ConfigError("--seed must be a 64-bit non-negative integer")

    n = args.shots
    live = BombTestConfig(True, eps, args.contrast)
    dud = BombTestConfig(False, eps, args.contrast)
    mz_live = kernels.sample_mz(args.seed, live, n, variant=0)
    mz_dud = kernels.sample_mz(args.seed, dud, n, variant=1)
    repeated = kernels.sample_repeated(args.seed, eps, args.rounds, n)
    zeno = kernels.sample_zeno(args.seed, args.zeno_cycles, n)

    figures = single_trial_figures(eps, args.contrast)
    rows = [
        ("single_trial_power", figures.power, float(np.mean(mz_live == kernels.MZ_D1))),
        ("single_trial_alpha", figures.alpha, float(np.mean(mz_dud == kernels.MZ_D1))),
        ("single_trial_explode", figures.explode_prob,
         float(np.mean(mz_live == kernels.MZ_EXPLODED))),
        ("repeated_rescue", repeated_trial_power(eps),
         float(np.mean(repeated == kernels.REP_RESCUED))),
        ("zeno_success", zeno_success_probability(args.zeno_cycles),
         float(np.mean(zeno == 1))),
    ]
    lines = [BOMBTEST_HEADER]
    for name, closed, mc in rows:
        mc_sigma = math.sqrt(mc * (1.0 - mc) / n)
        lines.append(f"{name},{_fmt(closed)},{_fmt(mc)},{_fmt(mc_sigma)},{n}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out_dir is not None:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "bombtest.csv").write_text(text, encoding="utf-8")
        print(f"wrote {out_dir / 'bombtest.csv'}")
    return 0


def cmd_verify(args) -> int:
    out_dir = Path(args.out_dir)
    manifest_text = (out_dir / "manifest.json").read_text(encoding="utf-8")
    try:
        manifest = json.loads(manifest_text)
        command = manifest["command"]
        resolved = manifest["config"]
    except (json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"manifest is malformed: {exc}") from exc
    settings = _settings(_parse_config_echo(resolved, command))
    table = ShotTable.read_csv(out_dir / "raw.csv")
    stored = (out_dir / "summary.csv").read_text(encoding="utf-8")
    if command == "lg-sweep":
        recomputed = _lg_summary_text(_lg_rows(table, settings))
    elif command == "dichotomic":
        recomputed = _dichotomic_summary_text(_dichotomic_rows(table, settings))
    else:
        raise ConfigError(f"manifest names unknown command '{command}'")
    if recomputed != stored:
        for i, (a, b) in enumerate(zip(recomputed.splitlines(), stored.splitlines())):
            if a != b:
                raise VerifyError(
                    f"summary line {i + 1} differs: recomputed {a!r} vs stored {b!r}"
                )
        raise VerifyError("summary length differs from recomputation")
    print(f"verified {out_dir / 'summary.csv'} against raw records")
    return 0


def _parse_config_echo(resolved: dict, command: str) -> dict:
    """Re-validate a manifest's config echo (it carries resolved defaults)."""
    cfg = {k: v for k, v in resolved.items() if k != "command"}
    return _parse_config(cfg, command)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evlg",
        description="Interaction-free bomb-test simulator and Leggett-Garg statistics suite",
    )
    parser.add_argument("--version", action="version", version=f"evlg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, doc in (
        ("lg-sweep", cmd_lg_sweep, "sample the three-arm campaign over a wait grid"),
        ("dichotomic", cmd_dichotomic, "sample the pi/3 dichotomic campaign"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out-dir", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--shots", type=int, default=None, help="override shots per arm")
        p.add_argument("--threads", type=int, default=1, help="sampling threads")
        p.set_defaults(func=func)

    p = sub.add_parser("bombtest", help="closed-form vs Monte Carlo tester figures")
    p.add_argument("--split-ratio", type=float, default=0.5,
                   help="first-splitter branch-B probability")
    p.add_argument("--contrast", type=float, default=1.0, help="device contrast")
    p.add_argument("--rounds", type=int, default=1000,
                   help="round cap approximating unlimited repetition")
    p.add_argument("--zeno-cycles", type=int, default=5, help="Zeno cycle count")
    p.add_argument("--shots", type=int, default=200_000, help="Monte Carlo shots")
    p.add_argument("--seed", type=int, default=1, help="Monte Carlo seed")
    p.add_argument("--out-dir", default=None, help="also write the table here")
    p.set_defaults(func=cmd_bombtest)

    p = sub.add_parser("verify", help="recompute a run's summary from its raw records")
    p.add_argument("--out-dir", required=True, help="directory of a previous run")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except VerifyError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
