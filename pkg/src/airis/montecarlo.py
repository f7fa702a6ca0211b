"""Monte Carlo oracle for the G2A/A2G SINRs, blockage chain and e2e outage.

Reproducibility contract: trials are cut into fixed blocks of
``BLOCK_TRIALS``; block ``b`` of stream ``tag`` draws from
``Philox(key = seed + 2**64 * (16 * b + tag))``.  Workers only decide which
thread runs a block, and results are concatenated in block order, so output
depends on ``(seed, trials)`` alone.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
import os

import numpy as np

from . import kernels
from .channel import sample_unit_fading, sample_unit_power
from .geometry import SPEED_OF_LIGHT, MobilityState, Position3D, doppler_terms

BLOCK_TRIALS = 1 << 14
SEED_MASK = (1 << 64) - 1

STREAM_G2A = 1
STREAM_A2G = 2
STREAM_CHAIN = 3
STREAM_AUX = 4


def worker_count(requested=None):
    """Threads to use: ``requested``, else ``AIRIS_THREADS``, else the CPU count."""
    if requested is None:
        env = os.environ.get("AIRIS_THREADS", "").strip()
        requested = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(requested))


@dataclass(frozen=True)
class SimRun:
    trials: int
    seed: int = 0
    chain_burn_in: int = 1000
    parallel_chunks: int = None

    def __post_init__(self):
        if int(self.trials) < 1:
            raise ValueError("trials must be >= 1")
        if self.chain_burn_in < 0:
            raise ValueError("chain_burn_in must be non-negative")
        if not 0 <= int(self.seed) <= SEED_MASK:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def blocks(self):
        """``(index, size)`` of each fixed-size block."""
        full, rest = divmod(int(self.trials), BLOCK_TRIALS)
        sizes = [BLOCK_TRIALS] * full + ([rest] if rest else [])
        return list(enumerate(sizes))


def block_rng(seed, block, tag):
    key = (int(seed) & SEED_MASK) | ((16 * int(block) + int(tag)) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def run_blocks(run, tag, fn):
    """Apply ``fn(rng, size)`` to every block and concatenate in block order."""
    jobs = run.blocks()

    def one(job):
        index, size = job
        return fn(block_rng(run.seed, index, tag), size)

    workers = min(worker_count(run.parallel_chunks), len(jobs))
    if workers <= 1:
        parts = [one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, jobs))
    if isinstance(parts[0], dict):
        return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# Empirical distributions
# ---------------------------------------------------------------------------

class EmpiricalCdf:
    """Right-continuous empirical CDF of a sample."""

    def __init__(self, samples):
        values = np.sort(np.asarray(samples, dtype=float).ravel())
        if values.size == 0:
            raise ValueError("empirical CDF of an empty sample")
        if np.isnan(values).any():
            raise ValueError("sample contains NaN")
        self.values = values

    @property
    def n(self):
        return self.values.size

    def query(self, x):
        return np.searchsorted(self.values, np.asarray(x, dtype=float), side="right") / self.n

    __call__ = query

    def stderr(self, x):
        p = self.query(x)
        return np.sqrt(p * (1.0 - p) / self.n)

    def quantile(self, q):
        return np.quantile(self.values, q)

    def mean(self):
        return float(self.values.mean())


def empirical_cdf(samples):
    return EmpiricalCdf(samples)


def ks_distance(e, cdf, max_points=100_000):
    """Sup distance between ``e`` and the vectorized CDF ``cdf``.

    Exact when ``e.n <= max_points`` (the sup is attained at sample points).
    Otherwise ``cdf`` is evaluated at a rank subsample and the gap between
    consecutive evaluated ranks is bounded using monotonicity of both CDFs,
    which gives a rigorous upper bound.
    """
    n = e.n
    if n <= max_points:
        idx = np.arange(n)
    else:
        idx = np.unique(np.linspace(0, n - 1, max_points).round().astype(np.int64))
    F = np.asarray(cdf(e.values[idx]), dtype=float)
    if np.any(~np.isfinite(F)):
        raise ValueError("analytic CDF returned non-finite values")
    lo = idx / n
    hi = (idx + 1) / n
    d = max(np.max(F - lo), np.max(hi - F))
    if idx.size < n:
        # between evaluated ranks i < j: F_n in [(i+1)/n, j/n], F in [F_i, F_j]
        gap = np.maximum(F[1:] - hi[:-1], idx[1:] / n - F[:-1])
        d = max(d, float(gap.max()))
    return float(d)


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

def interference_plus_noise(interferers, rng, size):
    """``1 + sum_l mean_inr_l |h_l|^2`` per trial."""
    w = np.ones(size)
    for it in interferers.members:
        w += it.mean_inr * sample_unit_power(it.k_factor, rng, size)
    return w


def sample_g2a_sinr(budget, run):
    """Raw per-trial G2A SINRs with explicit MRT weights."""

    def block(rng, size):
        h = sample_unit_fading(budget.k_su, rng, (size, budget.M))
        norm = np.sqrt(np.sum(np.abs(h) ** 2, axis=1, keepdims=True))
        w = h / norm
        gain = np.abs(np.sum(np.conj(h) * w, axis=1)) ** 2
        return budget.g2a_mean_snr * gain / interference_plus_noise(budget.interferers_u, rng, size)

    return run_blocks(run, STREAM_G2A, block)


def simulate_g2a_sinr(budget, run):
    return EmpiricalCdf(sample_g2a_sinr(budget, run))


def _truncated_power(k_factor, threshold, rng, size, max_rounds=100_000):
    """Unit-mean Rician powers conditioned on ``>= threshold`` by rejection."""
    out = np.empty(size)
    todo = np.arange(size)
    rounds = 0
    while todo.size:
        draw = sample_unit_power(k_factor, rng, todo.size)
        ok = draw >= threshold
        out[todo[ok]] = draw[ok]
        todo = todo[~ok]
        rounds += 1
        if rounds > max_rounds:
            raise RuntimeError("rejection sampler for the unblocked direct link did not terminate")
    return out


def _blockage_states(blockage, rng, size, burn_in, unit_threshold, k_ud):
    """``(phi0, unit direct power)`` per trial, the power already censored."""
    if math.isinf(unit_threshold):
        return np.zeros(size, dtype=np.int8), np.zeros(size)
    if blockage.memoryless:
        # the blocked event is {|h_UD|^2 < tau} on a fresh fading draw
        power = sample_unit_power(k_ud, rng, size)
        phi0 = (power >= unit_threshold).astype(np.int8)
        return phi0, power * phi0
    P = blockage.transition
    u = rng.random(burn_in + size)
    trace = kernels.markov_trace(float(P[0, 1]), float(P[1, 0]), u, 0)[burn_in:]
    power = np.zeros(size)
    on = np.flatnonzero(trace == 1)
    power[on] = _truncated_power(k_ud, unit_threshold, rng, on.size)
    return trace.astype(np.int8), power


def sample_a2g(budget, run, blockage):
    """Per-trial A2G quantities under ideal adaptive phase alignment.

    Returns a dict with ``sinr``, ``phi0`` (1 = unblocked), ``direct`` (the
    direct-link power ``|g_UD|^2``, zero when blocked) and ``cascade``
    (``sum_n |h_UR_n| |h_RnD|``).
    """
    unit_threshold = blockage.tau / budget.gain_ud

    def block(rng, size):
        phi0, direct_unit = _blockage_states(blockage, rng, size, run.chain_burn_in,
                                             unit_threshold, budget.k_ud)
        if budget.N > 0:
            h_ur = np.abs(sample_unit_fading(budget.k_ur, rng, (size, budget.N)))
            h_rd = np.abs(sample_unit_fading(budget.k_rd, rng, (size, budget.N)))
            cascade = np.sum(h_ur * h_rd, axis=1)
            amp = math.sqrt(budget.cas_mean_snr) * cascade
        else:
            cascade = np.zeros(size)
            amp = np.zeros(size)
        amp = amp + math.sqrt(budget.dir_mean_snr) * np.sqrt(direct_unit)
        w = interference_plus_noise(budget.interferers_d, rng, size)
        return {
            "sinr": amp * amp / w,
            "phi0": phi0,
            "direct": direct_unit * budget.gain_ud,
            "cascade": cascade,
        }

    return run_blocks(run, STREAM_A2G, block)


def sample_a2g_sinr(budget, run, blockage):
    return sample_a2g(budget, run, blockage)["sinr"]


def simulate_a2g_sinr(budget, run, blockage):
    return EmpiricalCdf(sample_a2g_sinr(budget, run, blockage))


def outage_e2e_empirical(budget, blockage, rate_se, run):
    """Empirical ``P(min(G2A, A2G) < 2^R - 1)`` and its binomial standard error."""
    tau = 2.0 ** rate_se - 1.0
    g2a = sample_g2a_sinr(budget, run)
    a2g = sample_a2g_sinr(budget, run, blockage)
    hit = np.minimum(g2a, a2g) < tau
    p = float(hit.mean())
    return p, math.sqrt(p * (1.0 - p) / hit.size)


def simulate_markov_chain(P, steps, seed, init=0):
    """State trace (int8, 0 = blocked) of the two-state chain with matrix ``P``."""
    P = np.asarray(P, dtype=float)
    if P.shape != (2, 2) or np.any(P < 0) or not np.allclose(P.sum(axis=1), 1.0):
        raise ValueError("P must be a 2x2 row-stochastic matrix")
    u = block_rng(seed, 0, STREAM_CHAIN).random(int(steps))
    return kernels.markov_trace(float(P[0, 1]), float(P[1, 0]), u, int(init))


# ---------------------------------------------------------------------------
# Explicit phase-alignment diagnostic
# ---------------------------------------------------------------------------

def ris_element_positions(cfg, spacing=None):
    """Element centres of an ``N``-element RIS in the vertical x-z plane through ``R``.

    Elements form a near-square grid with half-wavelength spacing (metres,
    converted to scene units).
    """
    n = cfg.N
    if n == 0:
        return []
    if spacing is None:
        spacing = 0.5 * SPEED_OF_LIGHT / cfg.carrier_hz
    nx = int(math.ceil(math.sqrt(n)))
    step = spacing / cfg.unit_m
    out = []
    for i in range(n):
        a, b = divmod(i, nx)
        out.append(Position3D(cfg.R.x + (b - (nx - 1) / 2) * step, cfg.R.y,
                              cfg.R.z + a * step))
    return out


def _geometric_channel(cfg, k_factor, gain, src, dst, mobility, rng, size):
    """``sqrt(gain) h exp(j 2 pi f_d cos(aoa))`` with the LoS phase set by distance."""
    rel = dst - src
    wavelength = SPEED_OF_LIGHT / cfg.carrier_hz
    los_phase = -2.0 * math.pi * (rel.norm() * cfg.unit_m) / wavelength
    h = sample_unit_fading(k_factor, rng, size, los_phase)
    f_d, cos_aoa = doppler_terms(mobility, rel)
    return math.sqrt(gain) * h * np.exp(2j * math.pi * f_d * cos_aoa)


def phase_alignment_residual(cfg, budget, blockage, trials=256, seed=0):
    """Largest relative gap between the phase-configured coherent sum and the aligned bound.

    Builds complex channels (geometric LoS phases plus the Doppler factor at
    ``t = 1``), applies ``theta_n = angle(g_UD) - angle(g_URn) - angle(g_RnD)``
    when the direct link is up and ``-angle(g_URn) - angle(g_RnD)`` when
    blocked, and compares ``|sum kappa g g e^{j theta} + g_UD|`` with
    ``sum kappa |g g| + |g_UD|``.
    """
    rng = block_rng(seed, 0, STREAM_AUX)
    mobility = MobilityState(cfg.velocity, cfg.carrier_hz)
    elements = ris_element_positions(cfg)
    g_ud = _geometric_channel(cfg, budget.k_ud, budget.gain_ud, cfg.U, cfg.D, mobility, rng, trials)
    phi0 = (np.abs(g_ud) ** 2 >= blockage.tau).astype(float)
    g_ud = phi0 * g_ud
    l_ur = cfg.gain(cfg.U, cfg.R)
    l_rd = cfg.gain(cfg.R, cfg.D, "ris_reflected")
    ref = np.where(phi0 > 0, np.angle(g_ud), 0.0)
    coherent = g_ud.astype(complex)
    bound = np.abs(g_ud)
    for pos in elements:
        a = _geometric_channel(cfg, budget.k_ur, l_ur, cfg.U, pos, mobility, rng, trials)
        b = _geometric_channel(cfg, budget.k_rd, l_rd, pos, cfg.D, mobility, rng, trials)
        theta = ref - np.angle(a) - np.angle(b)
        coherent = coherent + cfg.kappa * a * b * np.exp(1j * theta)
        bound = bound + cfg.kappa * np.abs(a * b)
    mask = bound > 0
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(np.abs(coherent[mask]) - bound[mask]) / bound[mask]))
