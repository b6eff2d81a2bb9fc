"""Link-level Monte Carlo simulator for the two-phase best-relay protocol.

Independent of the analytic chain: every trial draws complex Rayleigh fading
and AWGN, runs the threshold admission test, picks the admitted relay with
the strongest relay-destination SNR, lets it decode (possibly wrongly),
and forms the destination's MRC decision. One fading draw per symbol per
link (fast-fading abstraction): the analytic averages integrate over the
full fading density per symbol, so block fading would only change
convergence speed, not the estimated mean.

Reproducibility: trials are split into fixed-size chunks; chunk k uses the
Philox stream `Philox(key=seed).jumped(k)`, so results are bit-identical
for a given (seed, chunk_size, n_trials, config, mode) no matter how many
workers execute the chunks, and chunk error counts merge as exact integer
sums. The transmitted bit is fixed at x = +1 for every trial: BPSK over
these symmetric channels makes the BER independent of the sent bit, and a
fixed bit halves the bookkeeping. Do not "fix" this by randomizing x.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import BerEstimate, SystemConfig

__all__ = [
    "MODE_ERROR_PROPAGATION",
    "MODE_PERFECT_DECODING",
    "ChannelDraw",
    "TrialOutcome",
    "SimRun",
    "OutcomeLog",
    "run_trial",
    "run_sim",
    "simulate_outcomes",
    "measure_conditional_psr",
]

MODE_ERROR_PROPAGATION = "error-propagation"
MODE_PERFECT_DECODING = "perfect-decoding"
_MODES = (MODE_ERROR_PROPAGATION, MODE_PERFECT_DECODING)

DEFAULT_CHUNK_SIZE = 250_000


@dataclass(frozen=True)
class ChannelDraw:
    """Fading coefficients of one symbol interval (complex, circularly symmetric)."""

    h_sd: complex
    h_sr: np.ndarray  # shape (M,)
    h_rd: np.ndarray  # shape (M,)


@dataclass(frozen=True)
class TrialOutcome:
    """Lifecycle of one simulated symbol."""

    selection_set: tuple[int, ...]
    selected_relay: Optional[int]
    relay_bit_correct: Optional[bool]
    destination_bit_correct: bool
    draw: ChannelDraw

    def __post_init__(self) -> None:
        if (self.selected_relay is None) != (len(self.selection_set) == 0):
            raise ValueError("selected_relay must be present iff the selection set is nonempty")
        if self.selected_relay is not None and self.selected_relay not in self.selection_set:
            raise ValueError("selected_relay must belong to the selection set")


@dataclass(frozen=True)
class SimRun:
    """One reproducible simulation campaign."""

    config: SystemConfig
    seed: int
    n_trials: int
    mode: str = MODE_ERROR_PROPAGATION
    chunk_size: int = DEFAULT_CHUNK_SIZE

    def __post_init__(self) -> None:
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")


@dataclass
class OutcomeLog:
    """Column-wise trial log (one entry per trial) for distribution checks."""

    gamma_sr: np.ndarray        # (n, M) instantaneous source-relay SNRs
    gamma_rd: np.ndarray        # (n, M) instantaneous relay-destination SNRs
    in_set: np.ndarray          # (n, M) bool, threshold test outcome
    selected: np.ndarray        # (n,) int, -1 when the set is empty
    relay_correct: np.ndarray   # (n,) bool, meaningful only where selected >= 0
    dest_correct: np.ndarray    # (n,) bool
    h_sd: np.ndarray = field(default=None)  # (n,) complex, only when keep_fading
    h_sr: np.ndarray = field(default=None)  # (n, M)
    h_rd: np.ndarray = field(default=None)  # (n, M)

    @property
    def n_selected(self) -> np.ndarray:
        return self.in_set.sum(axis=1)


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    """Independent, reproducible stream for one chunk (jump-ahead Philox)."""
    return np.random.Generator(np.random.Philox(key=seed).jumped(chunk_index))


def _simulate_chunk(
    config: SystemConfig,
    mode: str,
    rng: np.random.Generator,
    n: int,
    collect: bool = False,
    keep_fading: bool = False,
):
    """Simulate n symbols; return (error_count, OutcomeLog | None).

    The transmitted symbol is x = +1. Complex noise variance is n0 (n0/2
    per real dimension), so instantaneous SNRs come out as P|h|^2/n0.
    Only the selected relay's phase-1 noise and the phase-2 noise are
    drawn: the other relays' noises never enter any decision and the
    selection depends on the fading only, so dropping them leaves the
    statistics untouched.
    """
    m = config.m_relays
    p_s, p_r, n0 = config.p_s, config.p_r, config.n0

    def cn(shape, variance):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(
            variance / 2.0
        )

    h_sd = cn(n, config.sigma2_sd)
    h_sr = cn((n, m), config.sigma2_sr)
    h_rd = cn((n, m), config.sigma2_rd)
    n_sd = cn(n, n0)
    n_sr = cn(n, n0)
    n_rd = cn(n, n0)

    y_sd = math.sqrt(p_s) * h_sd + n_sd  # x = +1
    direct_stat = (np.conj(h_sd) * y_sd).real
    direct_correct = direct_stat >= 0.0  # ties decide +1

    if m == 0:
        dest_correct = direct_correct
        in_set = np.zeros((n, 0), dtype=bool)
        selected = np.full(n, -1, dtype=np.int64)
        relay_correct = np.ones(n, dtype=bool)
        gamma_sr = np.zeros((n, 0))
        gamma_rd = np.zeros((n, 0))
    else:
        gamma_sr = p_s * np.abs(h_sr) ** 2 / n0
        gamma_rd = p_r * np.abs(h_rd) ** 2 / n0
        in_set = gamma_sr > config.gamma_th
        any_set = in_set.any(axis=1)
        # Best admitted relay by relay-destination SNR (SNRs are continuous,
        # ties have probability zero).
        selected = np.argmax(np.where(in_set, gamma_rd, -1.0), axis=1)
        rows = np.arange(n)
        h_sr_sel = h_sr[rows, selected]
        h_rd_sel = h_rd[rows, selected]

        y_sr = math.sqrt(p_s) * h_sr_sel + n_sr
        relay_stat = (np.conj(h_sr_sel) * y_sr).real
        relay_correct = relay_stat >= 0.0
        if mode == MODE_PERFECT_DECODING:
            x_r = np.ones(n)
        else:
            x_r = np.where(relay_correct, 1.0, -1.0)

        y_rd = math.sqrt(p_r) * h_rd_sel * x_r + n_rd
        combined = (
            math.sqrt(p_s) * np.conj(h_sd) * y_sd / n0
            + math.sqrt(p_r) * np.conj(h_rd_sel) * y_rd / n0
        ).real
        dest_correct = np.where(any_set, combined >= 0.0, direct_correct)
        selected = np.where(any_set, selected, -1)

    errors = n - int(np.count_nonzero(dest_correct))
    if not collect:
        return errors, None

    log = OutcomeLog(
        gamma_sr=gamma_sr,
        gamma_rd=gamma_rd,
        in_set=in_set,
        selected=selected,
        relay_correct=np.asarray(relay_correct, dtype=bool),
        dest_correct=np.asarray(dest_correct, dtype=bool),
        h_sd=h_sd if keep_fading else None,
        h_sr=h_sr if keep_fading else None,
        h_rd=h_rd if keep_fading else None,
    )
    return errors, log


def run_trial(
    config: SystemConfig,
    rng: np.random.Generator,
    mode: str = MODE_ERROR_PROPAGATION,
) -> TrialOutcome:
    """Run a single symbol through the protocol and report its lifecycle."""
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    _, log = _simulate_chunk(config, mode, rng, 1, collect=True, keep_fading=True)
    sel = int(log.selected[0])
    has_relay = sel >= 0
    return TrialOutcome(
        selection_set=tuple(int(i) for i in np.flatnonzero(log.in_set[0])),
        selected_relay=sel if has_relay else None,
        relay_bit_correct=(bool(log.relay_correct[0]) if has_relay and mode == MODE_ERROR_PROPAGATION
                           else (True if has_relay else None)),
        destination_bit_correct=bool(log.dest_correct[0]),
        draw=ChannelDraw(h_sd=complex(log.h_sd[0]), h_sr=log.h_sr[0].copy(), h_rd=log.h_rd[0].copy()),
    )


def _chunk_plan(n_trials: int, chunk_size: int) -> list[tuple[int, int]]:
    """(chunk_index, size) pairs covering n_trials."""
    plan = []
    done = 0
    index = 0
    while done < n_trials:
        size = min(chunk_size, n_trials - done)
        plan.append((index, size))
        done += size
        index += 1
    return plan


def run_sim(sim: SimRun, workers: int = 1) -> BerEstimate:
    """Estimate the end-to-end BER with a normal-approximation 95% CI.

    Chunks may run on any number of worker threads; the chunk streams are
    derived from (seed, chunk index) and error counts merge as integers,
    so the result is bit-identical regardless of `workers`.
    """
    plan = _chunk_plan(sim.n_trials, sim.chunk_size)

    def one(item: tuple[int, int]) -> int:
        index, size = item
        errors, _ = _simulate_chunk(sim.config, sim.mode, _chunk_rng(sim.seed, index), size)
        return errors

    if workers <= 1 or len(plan) == 1:
        total_errors = sum(one(item) for item in plan)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            total_errors = sum(pool.map(one, plan))

    p_hat = total_errors / sim.n_trials
    ci = 1.96 * math.sqrt(p_hat * (1.0 - p_hat) / sim.n_trials)
    kind = "perfect-decoding-simulated" if sim.mode == MODE_PERFECT_DECODING else "simulated"
    return BerEstimate(value=p_hat, kind=kind, trials=sim.n_trials, ci_halfwidth=ci)


def simulate_outcomes(
    config: SystemConfig,
    n_trials: int,
    seed: int,
    mode: str = MODE_ERROR_PROPAGATION,
    keep_fading: bool = False,
) -> OutcomeLog:
    """Run n_trials in one chunk and return the full per-trial log.

    Intended for distribution checks; memory grows linearly with n_trials,
    so keep it at or below a few million trials.
    """
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    _, log = _simulate_chunk(
        config, mode, _chunk_rng(seed, 0), n_trials, collect=True, keep_fading=keep_fading
    )
    return log


def measure_conditional_psr(
    config: SystemConfig,
    n_kept: int,
    seed: int = 0,
    batch_size: int = 1_000_000,
) -> float:
    """Empirical relay decoding error rate among threshold-passing trials.

    Draws source-relay fading until n_kept trials clear the admission
    threshold, runs the matched-filter decision on each with fresh noise,
    and returns the error fraction. This is the measurement the analytic
    conditional error formula is validated against.

    Aborts when the acceptance fraction is below 1e-6 (threshold too high
    to condition on in reasonable time).
    """
    if n_kept < 1:
        raise ValueError("n_kept must be >= 1")
    rng = _chunk_rng(seed, 0)
    p_s, n0 = config.p_s, config.n0

    kept = 0
    drawn = 0
    errors = 0
    while kept < n_kept:
        h = (rng.standard_normal(batch_size) + 1j * rng.standard_normal(batch_size)) * math.sqrt(
            config.sigma2_sr / 2.0
        )
        noise = (rng.standard_normal(batch_size) + 1j * rng.standard_normal(batch_size)) * math.sqrt(
            n0 / 2.0
        )
        gamma = p_s * np.abs(h) ** 2 / n0
        mask = gamma > config.gamma_th
        drawn += batch_size
        h_pass = h[mask]
        noise_pass = noise[mask]
        take = min(len(h_pass), n_kept - kept)
        h_pass = h_pass[:take]
        noise_pass = noise_pass[:take]
        y = math.sqrt(p_s) * h_pass + noise_pass  # x = +1
        stat = (np.conj(h_pass) * y).real
        errors += int(np.count_nonzero(stat < 0.0))
        kept += take
        if drawn >= 2 * batch_size and kept / drawn < 1e-6:
            raise RuntimeError(
                "threshold too high for oracle: acceptance fraction "
                f"{kept / drawn:.2e} after {drawn} draws"
            )
    return errors / n_kept
