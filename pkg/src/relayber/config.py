"""Operating-point configuration for the cooperative relay link.

All interface-level quantities (CLI flags, scenario files, table columns)
are in dB; everything below this module works in linear scale. Conversion
happens exactly once, at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0.0:
        raise ValueError(f"cannot convert non-positive value {x} to dB")
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class SystemConfig:
    """One operating point of the two-hop link.

    m_relays:  number of candidate relays M (0 = direct link only)
    gamma_th:  relay admission threshold on the source-relay SNR (linear)
    p_s, p_r:  source / relay transmit powers (linear)
    n0:        noise spectral density (linear)
    sigma2_*:  Rayleigh channel variances for the three link classes;
               all relays share sigma2_sr and sigma2_rd (i.i.d. relays)
    """

    m_relays: int
    gamma_th: float
    p_s: float
    p_r: float
    n0: float
    sigma2_sd: float
    sigma2_sr: float
    sigma2_rd: float

    def __post_init__(self) -> None:
        if self.m_relays < 0:
            raise ValueError(f"m_relays must be >= 0, got {self.m_relays}")
        if not (self.gamma_th >= 0.0 and math.isfinite(self.gamma_th)):
            raise ValueError(f"gamma_th must be finite and >= 0, got {self.gamma_th}")
        for name in ("p_s", "p_r", "n0", "sigma2_sd", "sigma2_sr", "sigma2_rd"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if not math.isfinite((self.p_s + self.p_r) / self.n0):
            raise ValueError("total SNR (p_s + p_r) / n0 is not finite")

    @classmethod
    def from_db(
        cls,
        m_relays: int,
        gamma_th_db: float,
        total_snr_db: float,
        sigma2_sd_db: float = -3.0,
        sigma2_sr_db: float = 0.0,
        sigma2_rd_db: float = 0.0,
        power_split: float = 1.0,
        n0: float = 1.0,
    ) -> "SystemConfig":
        """Build a config from dB quantities.

        total_snr_db fixes (p_s + p_r) / n0; power_split is the ratio
        p_s / p_r (1.0 means equal split).
        """
        p_total = db_to_linear(total_snr_db) * n0
        p_s = p_total * power_split / (1.0 + power_split)
        p_r = p_total / (1.0 + power_split)
        return cls(
            m_relays=m_relays,
            gamma_th=db_to_linear(gamma_th_db),
            p_s=p_s,
            p_r=p_r,
            n0=n0,
            sigma2_sd=db_to_linear(sigma2_sd_db),
            sigma2_sr=db_to_linear(sigma2_sr_db),
            sigma2_rd=db_to_linear(sigma2_rd_db),
        )

    @property
    def total_snr(self) -> float:
        return (self.p_s + self.p_r) / self.n0

    def with_gamma_th(self, gamma_th: float) -> "SystemConfig":
        return SystemConfig(
            m_relays=self.m_relays,
            gamma_th=gamma_th,
            p_s=self.p_s,
            p_r=self.p_r,
            n0=self.n0,
            sigma2_sd=self.sigma2_sd,
            sigma2_sr=self.sigma2_sr,
            sigma2_rd=self.sigma2_rd,
        )


@dataclass(frozen=True)
class LinkBudget:
    """Mean per-link SNRs (linear): source-destination, source-relay, relay-destination."""

    gamma_sd_bar: float
    gamma_sr_bar: float
    gamma_rd_bar: float

    def __post_init__(self) -> None:
        for name in ("gamma_sd_bar", "gamma_sr_bar", "gamma_rd_bar"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @classmethod
    def from_config(cls, config: SystemConfig) -> "LinkBudget":
        """Mean SNR of each link: transmit power times channel variance over N0."""
        return cls(
            gamma_sd_bar=config.p_s * config.sigma2_sd / config.n0,
            gamma_sr_bar=config.p_s * config.sigma2_sr / config.n0,
            gamma_rd_bar=config.p_r * config.sigma2_rd / config.n0,
        )


@dataclass(frozen=True)
class BerEstimate:
    """A BER value with provenance.

    kind is one of 'analytic', 'simulated', 'perfect-decoding-simulated'.
    trials and ci_halfwidth are 0 for analytic values.
    """

    value: float
    kind: str
    trials: int = 0
    ci_halfwidth: float = 0.0

    _KINDS = ("analytic", "simulated", "perfect-decoding-simulated")

    def __post_init__(self) -> None:
        if self.kind not in self._KINDS:
            raise ValueError(f"kind must be one of {self._KINDS}, got {self.kind!r}")
        if not (0.0 <= self.value <= 1.0):
            raise ValueError(f"BER value {self.value} outside [0, 1]")
        if self.ci_halfwidth < 0.0:
            raise ValueError("ci_halfwidth must be >= 0")
        if self.kind != "analytic" and self.trials <= 0:
            raise ValueError("non-analytic estimates need trials > 0")
