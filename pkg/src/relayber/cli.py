"""Command-line front end: SNR sweeps, threshold tables, diversity slopes.

Commands emit CSV (header row, UTF-8, '.' decimal separator, 12 significant
digits) so figures can be plotted externally. All randomized outputs are
deterministic given --seed.

Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass

import numpy as np

from .analytic import ModelInconsistencyError, QuadratureError, p_e2e
from .config import SystemConfig
from .montecarlo import (
    MODE_ERROR_PROPAGATION,
    MODE_PERFECT_DECODING,
    SimRun,
    run_sim,
)
from .optimizer import config_at_total_snr, find_gamma_opt

MODES = ("analytic", "sim", "perfect-sim")

# Reference optimal thresholds (dB) for the default scenario (4 relays,
# sigma2_sd = -3 dB, sigma2_sr = sigma2_rd = 0 dB, equal power split),
# bundled so table output can report deltas against them.
REFERENCE_GAMMA_OPT_DB = {
    0.0: -7.9,
    3.0: -3.9,
    6.0: -0.7,
    9.0: 1.9,
    12.0: 4.0,
    15.0: 5.7,
    18.0: 7.25,
    21.0: 8.4,
    24.0: 9.5,
}

DEFAULTS = {
    "relays": 4,
    "threshold_db": 5.0,
    "snr_db": "0:24:3",
    "sigma2_sd_db": -3.0,
    "sigma2_sr_db": 0.0,
    "sigma2_rd_db": 0.0,
    "power_split": "1:1",
    "trials": 10_000_000,
    "seed": 1,
    "mode": "analytic",
    "out": None,
    "scenario": None,
    "workers": 2,
    "chunk_size": 250_000,
    "slope_window": "15:24",
}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class SweepSpec:
    """Fully resolved invocation: scenario, SNR grid, modes, sim settings."""

    snr_db: tuple[float, ...]
    relays: int
    threshold_db: float
    sigma2_sd_db: float
    sigma2_sr_db: float
    sigma2_rd_db: float
    power_split: float  # p_s / p_r
    modes: tuple[str, ...]
    trials: int
    seed: int
    workers: int
    chunk_size: int

    def config(self, total_snr_db: float) -> SystemConfig:
        return SystemConfig.from_db(
            m_relays=self.relays,
            gamma_th_db=self.threshold_db,
            total_snr_db=total_snr_db,
            sigma2_sd_db=self.sigma2_sd_db,
            sigma2_sr_db=self.sigma2_sr_db,
            sigma2_rd_db=self.sigma2_rd_db,
            power_split=self.power_split,
        )


def _parse_snr_range(text: str) -> tuple[float, ...]:
    parts = text.split(":")
    if len(parts) == 1:
        return (float(parts[0]),)
    if len(parts) != 3:
        raise UsageError(f"--snr-db expects START:STOP:STEP or a single value, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0:
        raise UsageError(f"--snr-db step must be > 0, got {step}")
    if start > stop:
        raise UsageError(f"--snr-db start {start} exceeds stop {stop}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(start + i * step for i in range(n))


def _parse_power_split(text: str) -> float:
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"--power-split expects PS:PR, got {text!r}")
    ps, pr = (float(p) for p in parts)
    if ps <= 0 or pr <= 0:
        raise UsageError("--power-split components must be > 0")
    return ps / pr


def _parse_modes(text: str) -> tuple[str, ...]:
    modes = tuple(m.strip() for m in text.split(",") if m.strip())
    if not modes:
        raise UsageError("--mode must name at least one of: " + ", ".join(MODES))
    for m in modes:
        if m not in MODES:
            raise UsageError(f"unknown mode {m!r}; choose from: " + ", ".join(MODES))
    return modes


def _parse_window(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"--slope-window expects LO:HI, got {text!r}")
    lo, hi = float(parts[0]), float(parts[1])
    if lo >= hi:
        raise UsageError("--slope-window LO must be < HI")
    return lo, hi


def _load_scenario(path: str) -> dict:
    """Flat key=value file mirroring the flags; '#' starts a comment line."""
    values: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, value = line.split("=", 1)
                values[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise UsageError(f"cannot read scenario file {path}: {exc}") from exc
    unknown = set(values) - set(DEFAULTS)
    if unknown:
        raise UsageError(f"{path}: unknown scenario keys: {', '.join(sorted(unknown))}")
    return values


_INT_KEYS = {"relays", "trials", "seed", "workers", "chunk_size"}
_FLOAT_KEYS = {"threshold_db", "sigma2_sd_db", "sigma2_sr_db", "sigma2_rd_db"}


def _coerce(key: str, value):
    if isinstance(value, str):
        try:
            if key in _INT_KEYS:
                return int(float(value))
            if key in _FLOAT_KEYS:
                return float(value)
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {value!r}") from exc
    return value


def _resolve(args: argparse.Namespace) -> dict:
    """Layer the settings: built-in defaults, then scenario file, then flags."""
    resolved = dict(DEFAULTS)
    cli = {k: v for k, v in vars(args).items() if k != "command" and v is not None}
    scenario_path = cli.get("scenario") or resolved["scenario"]
    if scenario_path:
        resolved.update(_load_scenario(scenario_path))
    resolved.update(cli)
    return {k: _coerce(k, v) for k, v in resolved.items()}


def build_spec(settings: dict) -> SweepSpec:
    relays = settings["relays"]
    trials = settings["trials"]
    if relays < 0:
        raise UsageError("--relays must be >= 0")
    if trials < 1:
        raise UsageError("--trials must be >= 1")
    return SweepSpec(
        snr_db=_parse_snr_range(str(settings["snr_db"])),
        relays=relays,
        threshold_db=float(settings["threshold_db"]),
        sigma2_sd_db=settings["sigma2_sd_db"],
        sigma2_sr_db=settings["sigma2_sr_db"],
        sigma2_rd_db=settings["sigma2_rd_db"],
        power_split=_parse_power_split(str(settings["power_split"])),
        modes=_parse_modes(str(settings["mode"])),
        trials=trials,
        seed=settings["seed"],
        workers=settings["workers"],
        chunk_size=settings["chunk_size"],
    )


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _estimate(spec: SweepSpec, mode: str, snr_db: float):
    if mode == "analytic":
        return p_e2e(spec.config(snr_db))
    sim_mode = MODE_PERFECT_DECODING if mode == "perfect-sim" else MODE_ERROR_PROPAGATION
    run = SimRun(
        config=spec.config(snr_db),
        seed=spec.seed,
        n_trials=spec.trials,
        mode=sim_mode,
        chunk_size=spec.chunk_size,
    )
    return run_sim(run, workers=spec.workers)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_sweep(spec: SweepSpec, out) -> None:
    """One CSV row per SNR point, one (value, ci) column pair per mode."""
    writer = csv.writer(out)
    header = ["snr_db"]
    for mode in spec.modes:
        col = mode.replace("-", "_")
        header += [col, f"{col}_ci"]
    writer.writerow(header)
    for snr in spec.snr_db:
        row = [_fmt(snr)]
        for mode in spec.modes:
            est = _estimate(spec, mode, snr)
            row += [_fmt(est.value), _fmt(est.ci_halfwidth)]
        writer.writerow(row)


def cmd_table1(spec: SweepSpec, out) -> None:
    """Optimal threshold per SNR point, with deltas to the bundled reference."""
    template = spec.config(spec.snr_db[0])
    writer = csv.writer(out)
    writer.writerow(["snr_db", "gamma_opt_db", "ber_at_opt", "delta_vs_reference_db", "multimodal"])
    for snr in spec.snr_db:
        point = find_gamma_opt(snr, template)
        ref = REFERENCE_GAMMA_OPT_DB.get(float(snr))
        delta = _fmt(point.gamma_opt_db - ref) if ref is not None else ""
        writer.writerow(
            [
                _fmt(snr),
                _fmt(point.gamma_opt_db),
                _fmt(point.ber_at_opt),
                delta,
                "1" if point.multimodal else "0",
            ]
        )


def fit_log_ber_slope(snr_db, ber_values):
    """Least-squares slope of log10(BER) against SNR_dB / 10.

    The negated slope estimates the diversity order. Points must be
    positive; callers filter out unresolved simulated points first.
    """
    x = np.asarray(snr_db, dtype=float) / 10.0
    y = np.asarray(ber_values, dtype=float)
    if len(x) < 2:
        raise ValueError("slope fit needs at least two points")
    if np.any(y <= 0.0):
        raise ValueError("slope fit needs positive BER values")
    slope = float(np.polyfit(x, np.log10(y), 1)[0])
    return slope


MIN_ERRORS_FOR_SLOPE = 10


def slope_report(spec: SweepSpec, window: tuple[float, float]) -> list[dict]:
    """Per-mode diversity-order estimates over the given SNR window.

    Simulated points with fewer than MIN_ERRORS_FOR_SLOPE observed errors
    are dropped: their log-BER is dominated by Poisson noise.
    """
    lo, hi = window
    results = []
    for mode in spec.modes:
        xs, ys, dropped = [], [], 0
        for snr in spec.snr_db:
            if not (lo <= snr <= hi):
                continue
            est = _estimate(spec, mode, snr)
            resolved = est.value > 0.0 and (
                est.kind == "analytic" or est.value * est.trials >= MIN_ERRORS_FOR_SLOPE
            )
            if resolved:
                xs.append(snr)
                ys.append(est.value)
            else:
                dropped += 1
        if len(xs) < 2:
            raise RuntimeError(
                f"slope fit for mode {mode!r} has {len(xs)} usable points in "
                f"window {lo}..{hi} dB; increase --trials or widen the window"
            )
        slope = fit_log_ber_slope(xs, ys)
        results.append(
            {
                "mode": mode,
                "slope": slope,
                "diversity_order": -slope,
                "n_points": len(xs),
                "n_dropped": dropped,
                "window": (lo, hi),
            }
        )
    return results


def cmd_slope(spec: SweepSpec, window: tuple[float, float], out) -> None:
    for r in slope_report(spec, window):
        out.write(
            "mode={mode} slope={slope:.4f} diversity_order={div:.4f} "
            "n_points={n} n_dropped={d} window={lo:g}..{hi:g}\n".format(
                mode=r["mode"],
                slope=r["slope"],
                div=r["diversity_order"],
                n=r["n_points"],
                d=r["n_dropped"],
                lo=r["window"][0],
                hi=r["window"][1],
            )
        )


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--relays", type=int, help="number of candidate relays M")
    p.add_argument("--threshold-db", type=float, help="relay admission threshold (dB)")
    p.add_argument("--snr-db", help="total SNR grid START:STOP:STEP (dB), or a single value")
    p.add_argument("--sigma2-sd-db", type=float, help="source-destination channel variance (dB)")
    p.add_argument("--sigma2-sr-db", type=float, help="source-relay channel variance (dB)")
    p.add_argument("--sigma2-rd-db", type=float, help="relay-destination channel variance (dB)")
    p.add_argument("--power-split", help="transmit power ratio PS:PR (default 1:1)")
    p.add_argument("--trials", help="Monte Carlo trials per point (accepts 1e7 notation)")
    p.add_argument("--seed", type=int, help="master RNG seed")
    p.add_argument("--mode", help="comma-separated subset of: " + ", ".join(MODES))
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--scenario", help="key=value scenario file; flags override it")
    p.add_argument("--workers", type=int, help="worker threads for simulation chunks")
    p.add_argument("--chunk-size", type=int, help="simulation chunk size")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relayber",
        description="BER curves, optimal thresholds and diversity slopes for "
        "a two-hop DF link with threshold-based best-relay selection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="BER vs total SNR, analytic and/or simulated")
    _add_common_flags(p_sweep)

    p_table = sub.add_parser("table1", help="optimal admission threshold per SNR point")
    _add_common_flags(p_table)

    p_slope = sub.add_parser("slope", help="diversity order from the log-BER slope")
    _add_common_flags(p_slope)
    p_slope.add_argument("--slope-window", help="SNR window LO:HI for the fit (default 15:24)")

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        settings = _resolve(args)
        spec = build_spec(settings)
        out_path = settings["out"]

        def run(out):
            if args.command == "sweep":
                cmd_sweep(spec, out)
            elif args.command == "table1":
                cmd_table1(spec, out)
            else:
                cmd_slope(spec, _parse_window(str(settings["slope_window"])), out)

        if out_path:
            with open(out_path, "w", encoding="utf-8", newline="") as fh:
                run(fh)
        else:
            run(sys.stdout)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, ModelInconsistencyError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
