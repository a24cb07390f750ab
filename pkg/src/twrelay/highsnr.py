"""High-SNR engine: diversity orders, density derivatives at the origin,
array gains, the power-law sum-BER asymptote, relay-weight optimization
against that asymptote, and the rate-normalized inter-protocol gap."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigurationError
from .scenario import (AntennaConfig, CoefficientSet, DFactors, Modulation,
                       PowerProfile, Protocol, WeightPair, coefficient_set,
                       protocol_modulation)
from .specfun import ln_gamma, wishart_max_eig_coeffs


@dataclass(frozen=True)
class OriginDerivatives:
    """First nonzero derivatives at the origin of the normalized per-link
    SNR densities, one per link."""

    f_ar: float
    f_rb: float
    f_br: float
    f_ra: float


@dataclass(frozen=True)
class HighSnrProfile:
    """Everything the power-law asymptote needs for one protocol: diversity
    order, the two direction weights, and the modulation."""

    d: int
    eta_arb: float
    eta_bra: float
    mod: Modulation

    def _gain(self, eta: float) -> float:
        ln_g = -(math.log(self.mod.a) + (self.d - 1) * math.log(2.0) + math.log(eta)
                 + ln_gamma(self.d + 0.5) - 0.5 * math.log(math.pi)
                 - math.log(self.d)) / self.d
        return math.exp(ln_g)

    @property
    def g_arb(self) -> float:
        return self._gain(self.eta_arb)

    @property
    def g_bra(self) -> float:
        return self._gain(self.eta_bra)

    @property
    def eta_sum(self) -> float:
        return self.eta_arb + self.eta_bra


def _table_weight(m_s: int, m_r: int, t: int) -> float:
    # alternating binomial-weighted sum over the eigenvalue expansion table
    total = 0.0
    for (n, m), d in wishart_max_eig_coeffs(m_s, m_r).entries.items():
        if m > t:
            raise ConfigurationError(
                f"table degree {m} exceeds derivative order {t} for dims ({m_s},{m_r})")
        total += d * math.comb(t, m) * (-1.0) ** (t + m) * n ** (t + 1)
    return total


def origin_derivatives(coeffs: CoefficientSet, ant: AntennaConfig,
                       pw: PowerProfile) -> OriginDerivatives:
    """Derivative values of the four normalized link densities at zero, in
    the order (A-to-R, R-to-B, B-to-R, R-to-A).  All are positive."""
    ant.require_analytic()
    t_a = ant.m_a * ant.m_r - 1
    t_b = ant.m_b * ant.m_r - 1
    s_a = _table_weight(ant.m_a, ant.m_r, t_a)
    s_b = _table_weight(ant.m_b, ant.m_r, t_b)
    f_ar = s_a * (coeffs.c_arb / coeffs.a_arb) ** (t_a + 1)
    f_rb = s_b * (coeffs.b_arb * pw.rho_ar / (coeffs.a_arb * pw.rho_rb)) ** (t_b + 1)
    f_br = s_b * (coeffs.c_bra * pw.rho_ar / (coeffs.a_bra * pw.rho_br)) ** (t_b + 1)
    f_ra = s_a * (coeffs.b_bra * pw.rho_ar / (coeffs.a_bra * pw.rho_ra)) ** (t_a + 1)
    out = OriginDerivatives(f_ar=f_ar, f_rb=f_rb, f_br=f_br, f_ra=f_ra)
    for name in ("f_ar", "f_rb", "f_br", "f_ra"):
        if not getattr(out, name) > 0.0:
            raise ConfigurationError(f"origin derivative {name} must be positive")
    return out


def eta_pair(coeffs: CoefficientSet, ant: AntennaConfig, pw: PowerProfile) -> tuple[float, float]:
    """Direction weights of the asymptote: the end-to-end origin derivative
    (the slower-decaying link dominates; both contribute when the source
    antenna counts tie) normalized by Gamma of the diversity order."""
    f = origin_derivatives(coeffs, ant, pw)
    if ant.m_a > ant.m_b:
        num_arb, num_bra = f.f_rb, f.f_br
    elif ant.m_a < ant.m_b:
        num_arb, num_bra = f.f_ar, f.f_ra
    else:
        num_arb, num_bra = f.f_ar + f.f_rb, f.f_br + f.f_ra
    d = ant.m_r * min(ant.m_a, ant.m_b)
    norm = math.exp(ln_gamma(float(d)))
    return num_arb / norm, num_bra / norm


def high_snr_profile(p: Protocol, ant: AntennaConfig, pw: PowerProfile,
                     mod: Optional[Modulation] = None,
                     w: Optional[WeightPair] = None,
                     dfactors: Optional[DFactors] = None) -> HighSnrProfile:
    """Asymptote parameters for one protocol under its rate-normalized
    modulation (overridable)."""
    if mod is None:
        mod = protocol_modulation(p)
    coeffs = coefficient_set(p, ant, pw, w, dfactors)
    eta_arb, eta_bra = eta_pair(coeffs, ant, pw)
    d = ant.m_r * min(ant.m_a, ant.m_b)
    return HighSnrProfile(d=d, eta_arb=eta_arb, eta_bra=eta_bra, mod=mod)


def high_snr_sum_ber(profile: HighSnrProfile, rho_ar: float) -> float:
    """Power-law sum-BER asymptote at the given A-side average SNR."""
    if not rho_ar > 0.0:
        raise ConfigurationError(f"rho_ar must be positive, got {rho_ar!r}")
    mod = profile.mod
    t1 = (2.0 * mod.b * rho_ar * profile.g_arb) ** (-profile.d)
    t2 = (2.0 * mod.b * rho_ar * profile.g_bra) ** (-profile.d)
    return (t1 + t2) / mod.bits_per_symbol


def beta_closed_form(p: Protocol, pw: PowerProfile,
                     ant: Optional[AntennaConfig] = None) -> WeightPair:
    """Closed-form high-SNR-optimal relay weights for the weighted
    protocols, exact for the single-antenna-everywhere configuration."""
    if not p.uses_weights:
        raise ConfigurationError(f"{p.value} has no relay weights")
    if ant is not None and (ant.m_a, ant.m_r, ant.m_b) != (1, 1, 1):
        raise ConfigurationError(
            "closed-form weights hold for the 1x1x1 configuration; use beta_numeric instead")
    half = 0.5 if p is Protocol.SECOND_FOUR_SLOT else 1.0
    s_a = math.sqrt(pw.rho_ar * (pw.rho_ar + half * pw.rho_ra) / (half * pw.rho_ra))
    s_b = math.sqrt(pw.rho_br * (pw.rho_br + half * pw.rho_rb) / (half * pw.rho_rb))
    return WeightPair.from_beta_squared(s_a / (s_a + s_b))


def beta_numeric(p: Protocol, ant: AntennaConfig, pw: PowerProfile,
                 mod: Optional[Modulation] = None, tolerance: float = 1e-6,
                 dfactors: Optional[DFactors] = None) -> WeightPair:
    """Relay weights minimizing the power-law asymptote: coarse grid over
    beta^2 followed by golden-section refinement."""
    if not p.uses_weights:
        raise ConfigurationError(f"{p.value} has no relay weights")
    if mod is None:
        mod = protocol_modulation(p)

    eps = 1e-9   # endpoint weights zero out one direction entirely

    def objective(beta_sq: float) -> float:
        w = WeightPair.from_beta_squared(min(max(beta_sq, eps), 1.0 - eps))
        prof = high_snr_profile(p, ant, pw, mod, w, dfactors)
        return high_snr_sum_ber(prof, pw.rho_ar)

    n_grid = 101
    best_i = min(range(n_grid), key=lambda i: objective(i / (n_grid - 1)))
    lo = max(0.0, (best_i - 1) / (n_grid - 1))
    hi = min(1.0, (best_i + 1) / (n_grid - 1))
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d_pt = lo + invphi * (hi - lo)
    fc, fd = objective(c), objective(d_pt)
    while hi - lo > tolerance:
        if fc < fd:
            hi, d_pt, fd = d_pt, c, fc
            c = hi - invphi * (hi - lo)
            fc = objective(c)
        else:
            lo, c, fc = c, d_pt, fd
            d_pt = lo + invphi * (hi - lo)
            fd = objective(d_pt)
    return WeightPair.from_beta_squared(0.5 * (lo + hi))


def high_snr_gap(worse: HighSnrProfile, better: HighSnrProfile) -> float:
    """Rate-normalized horizontal dB gap between two asymptotes of equal
    diversity order, positive when the arguments are ordered worse-then-
    better."""
    if worse.d != better.d:
        raise ConfigurationError(
            f"gap undefined across diversity orders {worse.d} and {better.d}")
    d = worse.d
    li = worse.mod.bits_per_symbol
    lj = better.mod.bits_per_symbol
    first = 10.0 * math.log10(better.mod.b * lj / (worse.mod.b * li))
    second = (10.0 / d) * math.log10(
        worse.mod.a * lj * worse.eta_sum / (better.mod.a * li * better.eta_sum))
    return first + second


@dataclass(frozen=True)
class GapRow:
    protocol: Protocol
    gap_db: float
    eta_sum: float
    beta_sq: Optional[float] = None


@dataclass(frozen=True)
class GapTable:
    best: Protocol
    rows: tuple
    dfactors: Optional[DFactors] = None


def gap_table(ant: AntennaConfig, pw: PowerProfile,
              protocols: Optional[list] = None,
              dfactors: Optional[DFactors] = None,
              d_trials: int = 1_000_000, seed: int = 12345) -> GapTable:
    """Ranked asymptote comparison across protocols at one scenario.

    Weighted protocols get their weights from the numeric asymptote
    optimizer (balanced powers give 1/2 automatically).  With multiple
    relay antennas the dual-reception factors are estimated by Monte Carlo
    unless supplied.  The two-slot and first three-slot protocols are
    evaluated on their matched-beamformer bound, the only closed-form
    regime they admit with multiple relay antennas.
    """
    ant.require_analytic()
    if protocols is None:
        protocols = list(Protocol)
    if ant.m_r > 1 and dfactors is None and any(p.dual_reception for p in protocols):
        from .simulate import estimate_d_factors
        dfactors = estimate_d_factors(ant, pw, trials=d_trials, seed=seed)

    profiles = {}
    betas = {}
    for p in protocols:
        w = None
        if p.uses_weights:
            w = beta_numeric(p, ant, pw, dfactors=dfactors)
            betas[p] = w.beta ** 2
        profiles[p] = high_snr_profile(p, ant, pw, w=w, dfactors=dfactors)

    ref = profiles[protocols[0]]
    scores = {p: high_snr_gap(profiles[p], ref) for p in protocols}
    best = min(protocols, key=lambda p: scores[p])
    rows = tuple(
        GapRow(protocol=p,
               gap_db=high_snr_gap(profiles[p], profiles[best]),
               eta_sum=profiles[p].eta_sum,
               beta_sq=betas.get(p))
        for p in protocols
    )
    return GapTable(best=best, rows=rows, dfactors=dfactors if ant.m_r > 1 else None)
