"""Admission-threshold optimization along a total-SNR sweep.

For each total SNR the free variable is the relay admission threshold; the
objective is the analytic end-to-end BER. The threshold axis is searched in
dB: a coarse 0.5 dB grid scan over [-20, +20] dB brackets the minimum, then
golden-section refinement narrows it to 0.01 dB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import p_e2e
from .config import SystemConfig, db_to_linear

__all__ = ["ThresholdPoint", "ThresholdCurve", "config_at_total_snr", "find_gamma_opt", "sweep"]

SEARCH_BRACKET_DB = (-20.0, 20.0)
COARSE_STEP_DB = 0.5
REFINE_TOL_DB = 0.01

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ThresholdPoint:
    total_snr_db: float
    gamma_opt_db: float
    ber_at_opt: float
    multimodal: bool = False


@dataclass(frozen=True)
class ThresholdCurve:
    points: tuple[ThresholdPoint, ...] = field(default=())

    def __post_init__(self) -> None:
        snrs = [p.total_snr_db for p in self.points]
        if any(b <= a for a, b in zip(snrs, snrs[1:])):
            raise ValueError("total_snr_db must be strictly increasing along the curve")

    @property
    def gamma_opt_monotone(self) -> bool:
        """Diagnostic: optimal threshold non-decreasing in SNR (reported, not enforced)."""
        gs = [p.gamma_opt_db for p in self.points]
        return all(b >= a for a, b in zip(gs, gs[1:]))


def config_at_total_snr(template: SystemConfig, total_snr_db: float) -> SystemConfig:
    """Rescale the template's transmit powers to the given total SNR.

    Relay count, channel variances, noise density, the power split
    p_s : p_r, and the threshold are taken from the template.
    """
    p_total = db_to_linear(total_snr_db) * template.n0
    split = template.p_s / (template.p_s + template.p_r)
    return SystemConfig(
        m_relays=template.m_relays,
        gamma_th=template.gamma_th,
        p_s=p_total * split,
        p_r=p_total * (1.0 - split),
        n0=template.n0,
        sigma2_sd=template.sigma2_sd,
        sigma2_sr=template.sigma2_sr,
        sigma2_rd=template.sigma2_rd,
    )


def _golden_section(f, lo: float, hi: float, tol: float, best: tuple[float, float]):
    """Golden-section minimization on [lo, hi], tracking the best point seen."""
    best_x, best_f = best
    a, b = lo, hi
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for x, fx in ((c, fc), (d, fd)):
        if fx < best_f:
            best_x, best_f = x, fx
    while (b - a) > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = f(c)
            if fc < best_f:
                best_x, best_f = c, fc
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = f(d)
            if fd < best_f:
                best_x, best_f = d, fd
    return best_x, best_f


def find_gamma_opt(total_snr_db: float, template: SystemConfig) -> ThresholdPoint:
    """Locate the BER-minimizing admission threshold at one total-SNR point.

    Coarse scan over the [-20, +20] dB bracket at 0.5 dB steps, then
    golden-section refinement to 0.01 dB around the grid minimum. The
    returned BER never exceeds any coarse grid value. When the coarse scan
    shows more than one local minimum the point is flagged multimodal and
    the refinement still runs around the global grid minimum.
    """
    base = config_at_total_snr(template, total_snr_db)

    def objective(gamma_db: float) -> float:
        return p_e2e(base.with_gamma_th(db_to_linear(gamma_db))).value

    lo, hi = SEARCH_BRACKET_DB
    grid = np.arange(lo, hi + COARSE_STEP_DB / 2.0, COARSE_STEP_DB)
    values = np.array([objective(g) for g in grid])

    g = int(np.argmin(values))
    n_local_minima = 0
    for i in range(len(grid)):
        left_higher = i == 0 or values[i] < values[i - 1]
        right_higher = i == len(grid) - 1 or values[i] < values[i + 1]
        if left_higher and right_higher:
            n_local_minima += 1
    multimodal = n_local_minima > 1

    bracket_lo = max(lo, float(grid[g]) - COARSE_STEP_DB)
    bracket_hi = min(hi, float(grid[g]) + COARSE_STEP_DB)
    best_x, best_f = _golden_section(
        objective, bracket_lo, bracket_hi, REFINE_TOL_DB, (float(grid[g]), float(values[g]))
    )
    return ThresholdPoint(
        total_snr_db=total_snr_db,
        gamma_opt_db=best_x,
        ber_at_opt=best_f,
        multimodal=multimodal,
    )


def sweep(template: SystemConfig, snr_list_db) -> ThresholdCurve:
    """Run find_gamma_opt at each SNR point (strictly increasing list)."""
    snrs = [float(s) for s in snr_list_db]
    if not snrs:
        raise ValueError("snr_list_db must be nonempty")
    if any(b <= a for a, b in zip(snrs, snrs[1:])):
        raise ValueError("snr_list_db must be strictly increasing")
    return ThresholdCurve(points=tuple(find_gamma_opt(s, template) for s in snrs))
