"""Monte-Carlo engine: Rayleigh channel draws, matched beamformers, exact
per-realization end-to-end SNRs for each protocol, semi-analytic sum-BER
estimation, and the dual-reception mean-ratio factors.

Trials are drawn from counter-partitioned Philox substreams in fixed-size
blocks, so results depend only on (seed, trial index) and are identical no
matter how trials are batched or distributed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import erfc

from .errors import ConfigurationError
from .scenario import (AntennaConfig, CoefficientSet, DFactors, Modulation,
                       PowerProfile, Protocol, WeightPair, coefficient_set,
                       protocol_modulation)

_BLOCK = 1 << 14


@dataclass(frozen=True)
class ChannelDraw:
    """One fading realization: the A-side and B-side uplink matrices.
    Downlink matrices are their Hermitian transposes (reciprocity) and are
    never stored."""

    h_ar: np.ndarray   # (m_r, m_a)
    h_br: np.ndarray   # (m_r, m_b)


@dataclass(frozen=True)
class InstantaneousSnrs:
    """Per-realization link SNRs.  The x-suffixed entries use the opposite
    direction's transmit beamformer (non-matched reception)."""

    g_ar: np.ndarray
    g_br: np.ndarray
    g_ra: np.ndarray
    g_rb: np.ndarray
    g_ra_x: np.ndarray
    g_rb_x: np.ndarray


@dataclass(frozen=True)
class BerEstimate:
    mean: float
    std_error: float
    trials: int


class ChannelStream:
    """Counter-based random stream: block b of trials is generated from a
    Philox generator keyed by the seed with the block index in the top
    counter word, so any trial's channels are a pure function of
    (seed, index)."""

    def __init__(self, seed: int):
        self.seed = int(seed)

    def _rng(self, block: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.seed, counter=[0, 0, 0, block]))

    def draw_block(self, ant: AntennaConfig, block: int) -> tuple[np.ndarray, np.ndarray]:
        """All channel matrices of one block, shapes (B, m_r, m_a) and (B, m_r, m_b)."""
        rng = self._rng(block)
        scale = 1.0 / math.sqrt(2.0)
        h_ar = scale * (rng.standard_normal((_BLOCK, ant.m_r, ant.m_a))
                        + 1j * rng.standard_normal((_BLOCK, ant.m_r, ant.m_a)))
        h_br = scale * (rng.standard_normal((_BLOCK, ant.m_r, ant.m_b))
                        + 1j * rng.standard_normal((_BLOCK, ant.m_r, ant.m_b)))
        return h_ar, h_br


def draw_channels(ant: AntennaConfig, stream: ChannelStream, index: int) -> ChannelDraw:
    """The channel realization of one trial; deterministic in (seed, index)."""
    if index < 0:
        raise ConfigurationError(f"trial index must be non-negative, got {index!r}")
    h_ar, h_br = stream.draw_block(ant, index // _BLOCK)
    off = index % _BLOCK
    return ChannelDraw(h_ar=h_ar[off].copy(), h_br=h_br[off].copy())


def matched_beamformer(h: np.ndarray) -> np.ndarray:
    """Unit-norm vector maximizing ||h f||: the strongest right singular
    vector, found by power iteration on the Gram matrix."""
    h = np.asarray(h, dtype=complex)
    if h.ndim == 1:
        h = h[None, :]
    if np.linalg.norm(h) == 0.0:
        raise ConfigurationError("matched_beamformer: zero channel matrix")
    g = h.conj().T @ h
    n = g.shape[0]
    # deterministic start: unit vector at the largest-norm column (first on ties)
    start = int(np.argmax(np.linalg.norm(h, axis=0)))
    v = np.zeros(n, dtype=complex)
    v[start] = 1.0
    lam = 0.0
    for _ in range(500):
        w = g @ v
        new_lam = np.linalg.norm(w)
        if new_lam == 0.0:
            break
        v = w / new_lam
        if abs(new_lam - lam) <= 1e-12 * max(new_lam, 1.0):
            break
        lam = new_lam
    return v


def _top_eig(gram: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # batched Hermitian eigendecomposition; eigh orders eigenvalues ascending
    w, v = np.linalg.eigh(gram)
    return w[:, -1], v[:, :, -1]


def link_snrs_block(h_ar: np.ndarray, h_br: np.ndarray, pw: PowerProfile) -> InstantaneousSnrs:
    """Vectorized link SNRs for a batch of channel draws."""
    m_r = h_ar.shape[1]
    if m_r == 1:
        lam_a = np.sum(np.abs(h_ar[:, 0, :]) ** 2, axis=1)
        lam_b = np.sum(np.abs(h_br[:, 0, :]) ** 2, axis=1)
        # a single relay antenna has a scalar transmit weight, so the
        # non-matched reception coincides with the matched one
        lam_a_x = lam_a
        lam_b_x = lam_b
    else:
        gram_a = h_ar @ h_ar.conj().transpose(0, 2, 1)
        gram_b = h_br @ h_br.conj().transpose(0, 2, 1)
        lam_a, f_ra = _top_eig(gram_a)
        lam_b, f_rb = _top_eig(gram_b)
        # H_RA f_RB = H_AR^H f_RB, an (m_a,)-vector per draw
        proj_a = np.einsum("nra,nr->na", h_ar.conj(), f_rb)
        proj_b = np.einsum("nrb,nr->nb", h_br.conj(), f_ra)
        lam_a_x = np.sum(np.abs(proj_a) ** 2, axis=1)
        lam_b_x = np.sum(np.abs(proj_b) ** 2, axis=1)
    return InstantaneousSnrs(
        g_ar=pw.rho_ar * lam_a,
        g_br=pw.rho_br * lam_b,
        g_ra=pw.rho_ra * lam_a,
        g_rb=pw.rho_rb * lam_b,
        g_ra_x=pw.rho_ra * lam_a_x,
        g_rb_x=pw.rho_rb * lam_b_x,
    )


def link_snrs(draw: ChannelDraw, pw: PowerProfile) -> InstantaneousSnrs:
    """Link SNRs for a single channel draw."""
    s = link_snrs_block(draw.h_ar[None, ...], draw.h_br[None, ...], pw)
    return InstantaneousSnrs(*(float(getattr(s, f)[0]) for f in
                               ("g_ar", "g_br", "g_ra", "g_rb", "g_ra_x", "g_rb_x")))


def _ratio(num, den):
    # 0/0 -> 0 covers the all-zero-channel corner in the lower-bound form
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.zeros(np.broadcast_shapes(num.shape, den.shape))
    np.divide(num, den, out=out, where=den > 0)
    return out


def end_to_end_snrs(p: Protocol, s: InstantaneousSnrs,
                    w: Optional[WeightPair] = None,
                    mode: str = "unified",
                    coeffs: Optional[CoefficientSet] = None,
                    snr_form: str = "exact"):
    """End-to-end received SNRs (g_arb, g_bra) for one protocol.

    mode "unified" evaluates the three-constant form (coeffs required);
    mode "dual_reception" evaluates the exact two-branch sums and is valid
    only for the dual-reception protocols.  snr_form "lower" drops the unit
    noise term from every denominator, giving the analytically tractable
    lower-bound SNRs.
    """
    if snr_form not in ("exact", "lower"):
        raise ConfigurationError(f"snr_form must be 'exact' or 'lower', got {snr_form!r}")
    n1 = 1.0 if snr_form == "exact" else 0.0
    if mode == "unified":
        if coeffs is None:
            raise ConfigurationError("unified mode requires a CoefficientSet")
        g_arb = _ratio(coeffs.a_arb * s.g_ar * s.g_rb,
                       coeffs.b_arb * s.g_ar + coeffs.c_arb * s.g_rb + n1)
        g_bra = _ratio(coeffs.a_bra * s.g_br * s.g_ra,
                       coeffs.b_bra * s.g_br + coeffs.c_bra * s.g_ra + n1)
        return g_arb, g_bra
    if mode != "dual_reception":
        raise ConfigurationError(f"mode must be 'unified' or 'dual_reception', got {mode!r}")
    if not p.dual_reception:
        raise ConfigurationError(f"{p.value} has a single reception; dual_reception mode is undefined")
    if p is Protocol.SECOND_THREE_SLOT:
        a2 = b2 = 1.0
    else:
        if w is None:
            raise ConfigurationError(f"{p.value} requires a WeightPair")
        a2, b2 = w.alpha ** 2, w.beta ** 2
    base = a2 * s.g_ar + b2 * s.g_br
    g_arb = (_ratio(a2 * s.g_ar * (s.g_rb / 2), base + s.g_rb / 2 + n1)
             + _ratio(a2 * s.g_ar * (s.g_rb_x / 2), base + s.g_rb_x / 2 + n1))
    g_bra = (_ratio(b2 * s.g_br * (s.g_ra / 2), base + s.g_ra / 2 + n1)
             + _ratio(b2 * s.g_br * (s.g_ra_x / 2), base + s.g_ra_x / 2 + n1))
    return g_arb, g_bra


def _q_vec(x):
    return 0.5 * erfc(np.sqrt(x / 2.0))


def _resolve_mode(p: Protocol, mode: str) -> str:
    if mode == "auto":
        return "dual_reception" if p.dual_reception else "unified"
    return mode


def _iter_blocks(trials: int):
    n_blocks = (trials + _BLOCK - 1) // _BLOCK
    for b in range(n_blocks):
        yield b, min(_BLOCK, trials - b * _BLOCK)


def sample_end_to_end_snrs(p: Protocol, ant: AntennaConfig, pw: PowerProfile,
                           w: Optional[WeightPair] = None, mode: str = "auto",
                           snr_form: str = "exact", trials: int = 100_000,
                           seed: int = 12345,
                           dfactors: Optional[DFactors] = None):
    """Arrays of (g_arb, g_bra) over Monte-Carlo trials."""
    mode = _resolve_mode(p, mode)
    coeffs = coefficient_set(p, ant, pw, w, dfactors) if mode == "unified" else None
    stream = ChannelStream(seed)
    arb = np.empty(trials)
    bra = np.empty(trials)
    pos = 0
    for b, n in _iter_blocks(trials):
        h_ar, h_br = stream.draw_block(ant, b)
        s = link_snrs_block(h_ar[:n], h_br[:n], pw)
        g_arb, g_bra = end_to_end_snrs(p, s, w, mode, coeffs, snr_form)
        arb[pos:pos + n] = g_arb
        bra[pos:pos + n] = g_bra
        pos += n
    return arb, bra


def semi_analytic_sum_ber(p: Protocol, ant: AntennaConfig, pw: PowerProfile,
                          w: Optional[WeightPair] = None,
                          mod: Optional[Modulation] = None,
                          mode: str = "auto", trials: int = 100_000,
                          seed: int = 12345, snr_form: str = "exact",
                          dfactors: Optional[DFactors] = None) -> BerEstimate:
    """Sum-BER estimate: the sample average over channel draws of the exact
    conditional error rate a Q(sqrt(2 b g)) summed over both directions,
    scaled by 1/log2(M).

    Averaging the conditional error rate needs no symbol-level detection and
    has far lower variance than bit counting.  Accumulation is compensated
    (exact block sums combined with math.fsum), so results do not depend on
    how blocks are scheduled.
    """
    if trials < 1:
        raise ConfigurationError(f"trials must be >= 1, got {trials!r}")
    if mod is None:
        mod = protocol_modulation(p)
    mode = _resolve_mode(p, mode)
    coeffs = coefficient_set(p, ant, pw, w, dfactors) if mode == "unified" else None
    stream = ChannelStream(seed)
    scale = mod.a / mod.bits_per_symbol
    part_sum = []
    part_sq = []
    for b, n in _iter_blocks(trials):
        h_ar, h_br = stream.draw_block(ant, b)
        s = link_snrs_block(h_ar[:n], h_br[:n], pw)
        g_arb, g_bra = end_to_end_snrs(p, s, w, mode, coeffs, snr_form)
        y = scale * (_q_vec(2.0 * mod.b * g_arb) + _q_vec(2.0 * mod.b * g_bra))
        part_sum.append(math.fsum(y))
        part_sq.append(math.fsum(y * y))
    total = math.fsum(part_sum)
    total_sq = math.fsum(part_sq)
    mean = total / trials
    if trials > 1:
        var = max(0.0, (total_sq - trials * mean * mean) / (trials - 1))
        se = math.sqrt(var / trials)
    else:
        se = 0.0
    return BerEstimate(mean=mean, std_error=se, trials=trials)


def _dual_branches(p: Protocol, s: InstantaneousSnrs, a2: float, b2: float):
    # primary (matched) and secondary (non-matched) branch SNRs per direction
    base = a2 * s.g_ar + b2 * s.g_br
    arb1 = _ratio(a2 * s.g_ar * (s.g_rb / 2), base + s.g_rb / 2 + 1.0)
    arb2 = _ratio(a2 * s.g_ar * (s.g_rb_x / 2), base + s.g_rb_x / 2 + 1.0)
    bra1 = _ratio(b2 * s.g_br * (s.g_ra / 2), base + s.g_ra / 2 + 1.0)
    bra2 = _ratio(b2 * s.g_br * (s.g_ra_x / 2), base + s.g_ra_x / 2 + 1.0)
    return arb1, arb2, bra1, bra2


def estimate_d_factors(ant: AntennaConfig, pw: PowerProfile, trials: int = 1_000_000,
                       seed: int = 12345, return_std_errors: bool = False):
    """Dual-reception factors 1 + E[secondary branch]/E[primary branch] for
    both dual-reception protocols and both directions.

    The weighted protocol is evaluated at balanced weights; the ratio is
    insensitive to the average SNRs.  With one relay antenna every factor is
    exactly 2.
    """
    if trials < 1:
        raise ConfigurationError(f"trials must be >= 1, got {trials!r}")
    stream = ChannelStream(seed)
    acc = {k: [] for k in ("a1", "a2", "b1", "b2", "a1sq", "a2sq", "b1sq", "b2sq",
                           "a12", "b12", "c1", "c2", "d1", "d2", "c1sq", "c2sq",
                           "d1sq", "d2sq", "c12", "d12")}
    for b, n in _iter_blocks(trials):
        h_ar, h_br = stream.draw_block(ant, b)
        s = link_snrs_block(h_ar[:n], h_br[:n], pw)
        arb1, arb2, bra1, bra2 = _dual_branches(Protocol.SECOND_THREE_SLOT, s, 1.0, 1.0)
        qrb1, qrb2, qra1, qra2 = _dual_branches(Protocol.SECOND_FOUR_SLOT, s, 0.5, 0.5)
        for key, arr in (("a1", arb1), ("a2", arb2), ("b1", bra1), ("b2", bra2),
                         ("c1", qrb1), ("c2", qrb2), ("d1", qra1), ("d2", qra2)):
            acc[key].append(math.fsum(arr))
            acc[key + "sq"].append(math.fsum(arr * arr))
        acc["a12"].append(math.fsum(arb1 * arb2))
        acc["b12"].append(math.fsum(bra1 * bra2))
        acc["c12"].append(math.fsum(qrb1 * qrb2))
        acc["d12"].append(math.fsum(qra1 * qra2))

    def ratio_and_se(k1, k2, k12):
        m1 = math.fsum(acc[k1]) / trials
        m2 = math.fsum(acc[k2]) / trials
        r = m2 / m1
        if trials > 1:
            v1 = max(0.0, math.fsum(acc[k1 + "sq"]) / trials - m1 * m1)
            v2 = max(0.0, math.fsum(acc[k2 + "sq"]) / trials - m2 * m2)
            c = math.fsum(acc[k12]) / trials - m1 * m2
            var_r = (v2 - 2.0 * r * c + r * r * v1) / (m1 * m1 * trials)
            se = math.sqrt(max(0.0, var_r))
        else:
            se = 0.0
        return r, se

    r_arb3, se_arb3 = ratio_and_se("a1", "a2", "a12")
    r_bra3, se_bra3 = ratio_and_se("b1", "b2", "b12")
    r_arb4, se_arb4 = ratio_and_se("c1", "c2", "c12")
    r_bra4, se_bra4 = ratio_and_se("d1", "d2", "d12")
    d = DFactors(1.0 + r_arb3, 1.0 + r_bra3, 1.0 + r_arb4, 1.0 + r_bra4)
    if return_std_errors:
        return d, (se_arb3, se_bra3, se_arb4, se_bra4)
    return d


def brute_force_beta(s: InstantaneousSnrs, p: Protocol, mod: Modulation,
                     grid_size: int = 101) -> WeightPair:
    """Weight pair minimizing the instantaneous two-direction error sum over
    a uniform grid of beta^2 values."""
    if not p.uses_weights:
        raise ConfigurationError(f"{p.value} has no relay weights to optimize")
    if grid_size < 3:
        raise ConfigurationError(f"grid_size must be >= 3, got {grid_size!r}")
    b2 = np.linspace(0.0, 1.0, grid_size)
    a2 = 1.0 - b2
    if p is Protocol.FIRST_THREE_SLOT:
        den = a2 * s.g_ar + b2 * s.g_br
        g_arb = _ratio(a2 * s.g_ar * s.g_rb, den + s.g_rb + 1.0)
        g_bra = _ratio(b2 * s.g_br * s.g_ra, den + s.g_ra + 1.0)
    else:
        base = a2 * s.g_ar + b2 * s.g_br
        g_arb = (_ratio(a2 * s.g_ar * (s.g_rb / 2), base + s.g_rb / 2 + 1.0)
                 + _ratio(a2 * s.g_ar * (s.g_rb_x / 2), base + s.g_rb_x / 2 + 1.0))
        g_bra = (_ratio(b2 * s.g_br * (s.g_ra / 2), base + s.g_ra / 2 + 1.0)
                 + _ratio(b2 * s.g_br * (s.g_ra_x / 2), base + s.g_ra_x / 2 + 1.0))
    obj = mod.a * (_q_vec(2.0 * mod.b * g_arb) + _q_vec(2.0 * mod.b * g_bra))
    best = int(np.argmin(obj))
    return WeightPair.from_beta_squared(float(b2[best]))
