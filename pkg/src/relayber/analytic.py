"""Analytic end-to-end BER of the threshold-selected best-relay DF link.

Average error probabilities are computed MGF-style: the BPSK error of a
diversity combiner over Rayleigh fading is a finite integral over (0, pi/2)
of the product of per-branch SNR moment generating functions, evaluated at
1/sin^2(theta). The selected relay is the strongest of the admitted set, so
its SNR is the maximum of i.i.d. exponentials; its MGF and pdf follow from
order statistics. Error propagation enters through the probability that a
relay admitted by the threshold still decodes wrongly, times the probability
that a flipped relay symbol drags the combined decision below zero.

Everything here is a pure function of its arguments (thread-safe, no state).
All SNRs are linear.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.special import erfcx

from .config import BerEstimate, LinkBudget, SystemConfig

__all__ = [
    "QuadratureError",
    "ModelInconsistencyError",
    "q_function",
    "mgf_rayleigh",
    "p_dec",
    "p_num_relays",
    "p_non_coop",
    "mgf_best_relay",
    "mgf_best_relay_series",
    "p_coop",
    "p_sr",
    "p_prop_closed",
    "p_prop_closed_alt",
    "p_prop_oracle",
    "p_prop_gaussian_oracle",
    "p_div",
    "p_e2e",
]


class QuadratureError(RuntimeError):
    """Numerical integration failed to converge; never silently ignored."""

    def __init__(self, term: str, detail: str = ""):
        self.term = term
        super().__init__(f"quadrature failed in {term}" + (f": {detail}" if detail else ""))


class ModelInconsistencyError(ValueError):
    """A composed probability left [0, 1] by more than float noise."""


# Probabilities this close to [0, 1] are treated as float noise and clamped;
# anything further out indicates formula misuse and raises.
_CLAMP_TOL = 1e-9


def _clamp_probability(p: float, context: str) -> float:
    if p < 0.0:
        if p < -_CLAMP_TOL:
            raise ModelInconsistencyError(f"{context} = {p}, below 0 by more than {_CLAMP_TOL}")
        return 0.0
    if p > 1.0:
        if p > 1.0 + _CLAMP_TOL:
            raise ModelInconsistencyError(f"{context} = {p}, above 1 by more than {_CLAMP_TOL}")
        return 1.0
    return p


# ---------------------------------------------------------------------------
# Quadrature over (0, pi/2)
# ---------------------------------------------------------------------------

_GL_ORDERS = (64, 128, 256, 512, 1024)
_GL_REL_TOL = 1e-12
_gl_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights mapped from (-1, 1) to (0, pi/2), cached."""
    if order not in _gl_cache:
        x, w = np.polynomial.legendre.leggauss(order)
        _gl_cache[order] = ((x + 1.0) * (np.pi / 4.0), w * (np.pi / 4.0))
    return _gl_cache[order]


def _integrate_half_pi(f, term: str) -> float:
    """Integrate f over (0, pi/2), doubling the order until converged.

    Starts at order 64 and doubles up to 1024; converged means successive
    estimates agree to 1e-12 relative. Gauss-Legendre never evaluates the
    endpoints, so integrands only defined on the open interval are fine.
    """
    prev = None
    for order in _GL_ORDERS:
        theta, w = _gl_nodes(order)
        val = float(np.dot(w, f(theta)))
        if prev is not None and abs(val - prev) <= _GL_REL_TOL * max(abs(val), 1e-300):
            return val
        prev = val
    raise QuadratureError(term, f"no convergence up to order {_GL_ORDERS[-1]}")


# ---------------------------------------------------------------------------
# Elementary pieces
# ---------------------------------------------------------------------------


def q_function(x: float) -> float:
    """Gaussian tail probability Q(x) = erfc(x / sqrt(2)) / 2."""
    if not math.isfinite(x):
        raise ValueError(f"q_function requires finite x, got {x}")
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def mgf_rayleigh(gamma_bar: float, s: float) -> float:
    """MGF E[exp(-s*gamma)] of an exponential SNR with mean gamma_bar: 1/(1 + gamma_bar*s)."""
    if gamma_bar <= 0.0:
        raise ValueError(f"gamma_bar must be > 0, got {gamma_bar}")
    if s < 0.0:
        raise ValueError(f"s must be >= 0, got {s}")
    return 1.0 / (1.0 + gamma_bar * s)


def p_dec(gamma_th: float, gamma_sr_bar: float) -> float:
    """Probability that a relay's source-relay SNR clears the admission threshold."""
    if gamma_th < 0.0:
        raise ValueError(f"gamma_th must be >= 0, got {gamma_th}")
    if gamma_sr_bar <= 0.0:
        raise ValueError(f"gamma_sr_bar must be > 0, got {gamma_sr_bar}")
    return math.exp(-gamma_th / gamma_sr_bar)


def p_num_relays(m: int, i: int, p_dec_value: float) -> float:
    """Binomial pmf of the admitted-set size: i of m relays clear the threshold."""
    if not 0 <= i <= m:
        raise ValueError(f"i must be in [0, {m}], got {i}")
    if not 0.0 <= p_dec_value <= 1.0:
        raise ValueError(f"p_dec_value must be in [0, 1], got {p_dec_value}")
    return math.comb(m, i) * p_dec_value**i * (1.0 - p_dec_value) ** (m - i)


# ---------------------------------------------------------------------------
# Average error probabilities of the two destination branches
# ---------------------------------------------------------------------------


def p_non_coop(gamma_sd_bar: float) -> float:
    """Average BPSK error over the direct link alone (empty admitted set).

    (1/pi) * integral over (0, pi/2) of the direct-link MGF at 1/sin^2(theta).
    """
    if gamma_sd_bar <= 0.0:
        raise ValueError(f"gamma_sd_bar must be > 0, got {gamma_sd_bar}")

    def integrand(theta: np.ndarray) -> np.ndarray:
        s2 = np.sin(theta) ** 2
        return s2 / (s2 + gamma_sd_bar)

    val = _integrate_half_pi(integrand, "p_non_coop") / math.pi
    return _clamp_probability(val, "p_non_coop")


def mgf_best_relay(n_r: int, gamma_rd_bar: float, s: float) -> float:
    """MGF of the largest of n_r i.i.d. exponential SNRs with mean gamma_rd_bar.

    Expanding the order-statistic pdf binomially gives the alternating sum
    n_r * sum_k (-1)^k C(n_r-1, k) / (k + 1 + gamma_rd_bar*s); that form
    cancels catastrophically for large gamma_rd_bar*s, so we evaluate the
    telescoped product prod_{j=1..n_r} j / (j + gamma_rd_bar*s) instead
    (the maximum decomposes into independent exponential spacings with
    rates j/gamma_rd_bar). Reduces to the single-link MGF at n_r = 1.
    """
    if n_r < 1:
        raise ValueError("n_r must be >= 1; an empty set has no best relay "
                         "(route to p_non_coop)")
    if gamma_rd_bar <= 0.0:
        raise ValueError(f"gamma_rd_bar must be > 0, got {gamma_rd_bar}")
    if s < 0.0:
        raise ValueError(f"s must be >= 0, got {s}")
    val = 1.0
    gs = gamma_rd_bar * s
    for j in range(1, n_r + 1):
        val *= j / (j + gs)
    return val


def mgf_best_relay_series(n_r: int, gamma_rd_bar: float, s: float) -> float:
    """Alternating binomial-expansion form of mgf_best_relay.

    Algebraically identical to the product form; kept as an independent
    cross-check (accurate only while the terms do not cancel)."""
    if n_r < 1:
        raise ValueError("n_r must be >= 1")
    total = 0.0
    for k in range(n_r):
        total += (-1.0) ** k * math.comb(n_r - 1, k) / (k + 1.0 + gamma_rd_bar * s)
    return n_r * total


def p_coop(gamma_sd_bar: float, gamma_rd_bar: float, n_r: int) -> float:
    """Average error of the two-branch MRC decision when the best of n_r
    admitted relays forwards the correct symbol.

    (1/pi) * integral of the direct-link MGF times the best-relay MGF.
    """
    if n_r < 1:
        raise ValueError("p_coop needs n_r >= 1")
    if gamma_sd_bar <= 0.0 or gamma_rd_bar <= 0.0:
        raise ValueError("mean SNRs must be > 0")

    def integrand(theta: np.ndarray) -> np.ndarray:
        s = 1.0 / np.sin(theta) ** 2
        m_sd = 1.0 / (1.0 + gamma_sd_bar * s)
        gs = gamma_rd_bar * s
        m_rd = np.ones_like(s)
        for j in range(1, n_r + 1):  # product form, see mgf_best_relay
            m_rd *= j / (j + gs)
        return m_sd * m_rd

    val = _integrate_half_pi(integrand, f"p_coop[n_r={n_r}]") / math.pi
    return _clamp_probability(val, "p_coop")


# ---------------------------------------------------------------------------
# Relay decoding error and its propagation to the destination
# ---------------------------------------------------------------------------


def p_sr(gamma_th: float, gamma_sr_bar: float) -> float:
    """BPSK error probability at an admitted relay, conditioned on its
    instantaneous source-relay SNR exceeding gamma_th.

    Closed form of E[Q(sqrt(2*gamma)) | gamma > gamma_th] for exponential
    gamma, written with the scaled complementary error function so the
    exp(+gamma_th/gamma_bar) prefactor and the deep Gaussian tail never
    overflow/underflow separately:

        0.5 * exp(-gamma_th) * ( erfcx(sqrt(gamma_th))
            - sqrt(g/(1+g)) * erfcx(sqrt(gamma_th*(1 + 1/g))) ),  g = gamma_sr_bar.

    At gamma_th = 0 this is the unconditional Rayleigh BPSK error.
    """
    if gamma_th < 0.0:
        raise ValueError(f"gamma_th must be >= 0, got {gamma_th}")
    if gamma_sr_bar <= 0.0:
        raise ValueError(f"gamma_sr_bar must be > 0, got {gamma_sr_bar}")
    g = gamma_sr_bar
    scale = math.sqrt(g / (1.0 + g))
    raw = 0.5 * math.exp(-gamma_th) * (
        float(erfcx(math.sqrt(gamma_th)))
        - scale * float(erfcx(math.sqrt(gamma_th * (1.0 + 1.0 / g))))
    )
    return _clamp_probability(raw, "p_sr")


def p_prop_closed(m: int, n_r: int, gamma_sd_bar: float, gamma_rd_bar: float) -> float:
    """Probability that the direct-link SNR falls below the best admitted
    relay's SNR, i.e. that a flipped relay symbol wins the combined decision.

    Closed form from expanding the order-statistic pdf of the maximum of the
    n_r admitted relays (validated against p_prop_oracle):

        sum_{k=0}^{n_r-1} n_r * (-1)^k * C(n_r-1, k)
            * ( 1/(k+1) - gsd / (grd + (k+1)*gsd) ).

    m only bounds n_r; the admitted-set size is what matters.
    """
    _check_prop_args(m, n_r, gamma_sd_bar, gamma_rd_bar)
    total = 0.0
    for k in range(n_r):
        term = 1.0 / (k + 1.0) - gamma_sd_bar / (gamma_rd_bar + (k + 1.0) * gamma_sd_bar)
        total += n_r * (-1.0) ** k * math.comb(n_r - 1, k) * term
    return _clamp_probability(total, "p_prop_closed")


def p_prop_closed_alt(m: int, n_r: int, gamma_sd_bar: float, gamma_rd_bar: float) -> float:
    """Alternative series for the propagation probability, indexed by the
    full candidate count m instead of the admitted-set size.

    Retained for reference only: it disagrees with p_prop_oracle whenever
    m > 1 (see tests), so p_prop_closed is the shipped form.
    """
    _check_prop_args(m, n_r, gamma_sd_bar, gamma_rd_bar)
    total = 0.0
    lead = m * math.comb(m - 1, n_r - 1)
    for k in range(m - n_r + 1):
        term = 1.0 / (k + 1.0) - gamma_sd_bar / (gamma_rd_bar + (k + 1.0) * gamma_sd_bar)
        total += lead * (-1.0) ** k * math.comb(m - n_r, k) * term
    return total


def _check_prop_args(m: int, n_r: int, gamma_sd_bar: float, gamma_rd_bar: float) -> None:
    if n_r < 1 or n_r > m:
        raise ValueError(f"need 1 <= n_r <= m, got n_r={n_r}, m={m}")
    if gamma_sd_bar <= 0.0 or gamma_rd_bar <= 0.0:
        raise ValueError("mean SNRs must be > 0")


def p_prop_oracle(n_r: int, gamma_sd_bar: float, gamma_rd_bar: float) -> float:
    """Propagation probability by direct numerical integration.

    P(gamma_sd < best of n_r) with the inner (direct-link) integral done
    analytically and the outer integral over the order-statistic pdf done
    by adaptive quadrature. Validation oracle for p_prop_closed.
    """
    if n_r < 1:
        raise ValueError("n_r must be >= 1")
    if gamma_sd_bar <= 0.0 or gamma_rd_bar <= 0.0:
        raise ValueError("mean SNRs must be > 0")

    def integrand(y: float) -> float:
        cdf = -math.expm1(-y / gamma_rd_bar)
        pdf = n_r * cdf ** (n_r - 1) * math.exp(-y / gamma_rd_bar) / gamma_rd_bar
        return pdf * -math.expm1(-y / gamma_sd_bar)

    val, err = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-12, epsrel=1e-12, limit=200)
    if err > 1e-8:
        raise QuadratureError("p_prop_oracle", f"error estimate {err}")
    return _clamp_probability(val, "p_prop_oracle")


def p_prop_gaussian_oracle(n_r: int, gamma_sd_bar: float, gamma_rd_bar: float) -> float:
    """Exact average error of the combined decision given a flipped relay
    symbol: Q((gsd - grd') / sqrt((gsd + grd')/2)) averaged over the
    direct-link density and the best-relay order-statistic density.

    Diagnostic companion to p_prop_oracle; quantifies how much the
    sign-comparison approximation underneath p_prop_closed gives away.
    """
    if n_r < 1:
        raise ValueError("n_r must be >= 1")
    if gamma_sd_bar <= 0.0 or gamma_rd_bar <= 0.0:
        raise ValueError("mean SNRs must be > 0")

    def integrand(u: float, y: float) -> float:
        # u: direct-link SNR, y: best-relay SNR. Limit at the origin is 1/2.
        if u + y <= 0.0:
            q = 0.5
        else:
            q = 0.5 * math.erfc((u - y) / math.sqrt(u + y))  # Q(d/sqrt((u+y)/2))
        f_sd = math.exp(-u / gamma_sd_bar) / gamma_sd_bar
        cdf = -math.expm1(-y / gamma_rd_bar)
        f_y = n_r * cdf ** (n_r - 1) * math.exp(-y / gamma_rd_bar) / gamma_rd_bar
        return q * f_sd * f_y

    val, err = integrate.dblquad(integrand, 0.0, np.inf, 0.0, np.inf,
                                 epsabs=1e-10, epsrel=1e-8)
    if err > 1e-6:
        raise QuadratureError("p_prop_gaussian_oracle", f"error estimate {err}")
    return _clamp_probability(val, "p_prop_gaussian_oracle")


def p_div(p_sr_value: float, p_prop_value: float, p_coop_value: float) -> float:
    """Error of the cooperative branch: relay errs and the flip propagates,
    or relay is right and the MRC decision errs anyway."""
    for name, v in (("p_sr", p_sr_value), ("p_prop", p_prop_value), ("p_coop", p_coop_value)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {v}")
    return p_sr_value * p_prop_value + (1.0 - p_sr_value) * p_coop_value


# ---------------------------------------------------------------------------
# End-to-end composition
# ---------------------------------------------------------------------------


def p_e2e(config: SystemConfig, perfect_decoding: bool = False) -> BerEstimate:
    """End-to-end BER: average over the admitted-set size of the matching
    branch error, weighted by the binomial set-size pmf.

    With perfect_decoding the relay decoding error is forced to zero, which
    isolates the selection-diversity behaviour.
    """
    budget = LinkBudget.from_config(config)
    m = config.m_relays

    if m == 0:
        return BerEstimate(value=p_non_coop(budget.gamma_sd_bar), kind="analytic")

    pd = p_dec(config.gamma_th, budget.gamma_sr_bar)
    psr = 0.0 if perfect_decoding else p_sr(config.gamma_th, budget.gamma_sr_bar)

    total = p_num_relays(m, 0, pd) * p_non_coop(budget.gamma_sd_bar)
    for n_r in range(1, m + 1):
        weight = p_num_relays(m, n_r, pd)
        if weight == 0.0:
            continue
        pcoop = p_coop(budget.gamma_sd_bar, budget.gamma_rd_bar, n_r)
        pprop = p_prop_closed(m, n_r, budget.gamma_sd_bar, budget.gamma_rd_bar)
        total += weight * p_div(psr, pprop, pcoop)

    return BerEstimate(value=_clamp_probability(total, "p_e2e"), kind="analytic")
