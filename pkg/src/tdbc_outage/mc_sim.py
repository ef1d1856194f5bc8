"""Monte Carlo outage estimation at terminal T1.

Trials are grouped in fixed-size blocks. Block ``b`` draws from a Philox
generator keyed by the seed with counter word ``b``, so every trial's
randomness depends only on ``(seed, trial index)`` and the outage count is
the same for any number of workers.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .scenario import SystemConfig, build_geometry

BLOCK_SIZE = 1 << 16
_MASK64 = (1 << 64) - 1


class Estimator(str, enum.Enum):
    EXACT = "exact"
    APPROX = "approx"
    UPPER_BOUND = "upper_bound"


@dataclass(frozen=True)
class ChannelDraw:
    """A batch of channel realizations; every field has leading length n.

    g0, g1, g2 are |h0|^2, |h1|^2, |h2|^2. ``d_r`` and ``d_t1`` hold the squared
    interferer gains at R and T1 (shape (n, L)); S and T are E_I times their
    row sums.
    """

    g0: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    S: np.ndarray
    T: np.ndarray
    d_r: np.ndarray
    d_t1: np.ndarray

    def __len__(self):
        return len(self.g0)


@dataclass(frozen=True)
class OutageEstimate:
    p_hat: float
    ci_halfwidth: float
    n_trials: int
    estimator: Estimator
    n_outage: int = 0

    @property
    def sigma(self) -> float:
        return math.sqrt(self.p_hat * (1.0 - self.p_hat) / self.n_trials)


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Counter-based substream for one block of trials."""
    if seed < 0:
        raise ValueError("seed must be >= 0")
    key = [seed & _MASK64, (seed >> 64) & _MASK64]
    return np.random.Generator(np.random.Philox(counter=[0, 0, block, 0], key=key))


def sample_draw(rng: np.random.Generator, cfg: SystemConfig, size: int) -> ChannelDraw:
    """Independent Rayleigh draws: every squared gain is exponential with its mean."""
    geo = build_geometry(cfg)
    rho_r = np.asarray(geo.rho["R"], dtype=float)
    rho_t = np.asarray(geo.rho["T1"], dtype=float)
    g0 = rng.standard_exponential(size) * geo.Omega0
    g1 = rng.standard_exponential(size) * geo.Omega1
    g2 = rng.standard_exponential(size) * geo.Omega2
    d_r = rng.standard_exponential((size, len(rho_r))) * rho_r
    d_t = rng.standard_exponential((size, len(rho_t))) * rho_t
    S = cfg.E_I * d_r.sum(axis=1)
    T = cfg.E_I * d_t.sum(axis=1)
    return ChannelDraw(g0, g1, g2, S, T, d_r, d_t)


def _components(d: ChannelDraw, cfg: SystemConfig):
    E, w1, w2 = cfg.E, cfg.omega1, cfg.omega2
    direct = E * d.g0 / (d.T + 1.0)
    g_1 = E * d.g1 / (d.T + 1.0)
    g_2 = w2 * E * d.g2 / (d.S + w1 * d.T + w1 + 1.0)
    return direct, g_1, g_2


def sinr_exact(d: ChannelDraw, cfg: SystemConfig) -> np.ndarray:
    """Post-combining SINR at T1 after self-interference cancellation."""
    E, w1, w2 = cfg.E, cfg.omega1, cfg.omega2
    norm = w1 * E * d.g1 + w2 * E * d.g2 + d.S + 1.0
    a1 = w1 / norm
    a2 = w2 / norm
    direct = E * d.g0 / (d.T + 1.0)
    relayed = a2 * E * E * d.g1 * d.g2 / ((a1 + a2) * E * d.g1 * (d.S + 1.0) + d.T + 1.0)
    return direct + relayed


def sinr_approx(d: ChannelDraw, cfg: SystemConfig) -> np.ndarray:
    direct, g_1, g_2 = _components(d, cfg)
    den = g_1 + g_2
    with np.errstate(invalid="ignore", divide="ignore"):
        harmonic = np.where(den > 0, g_1 * g_2 / np.where(den > 0, den, 1.0), 0.0)
    return direct + harmonic


def sinr_upper_bound(d: ChannelDraw, cfg: SystemConfig) -> np.ndarray:
    direct, g_1, g_2 = _components(d, cfg)
    return direct + np.minimum(g_1, g_2)


_SINR = {
    Estimator.EXACT: sinr_exact,
    Estimator.APPROX: sinr_approx,
    Estimator.UPPER_BOUND: sinr_upper_bound,
}


def _count_block(cfg, estimator, threshold, seed, block, size) -> int:
    rng = block_generator(seed, block)
    draw = sample_draw(rng, cfg, size)
    return int(np.count_nonzero(_SINR[estimator](draw, cfg) < threshold))


def estimate_outage(
    cfg: SystemConfig,
    estimator: Estimator | str,
    n_trials: int,
    seed: int,
    workers: int = 1,
    threshold: float | None = None,
) -> OutageEstimate:
    """Fraction of trials whose SINR falls below the target SINR.

    ``threshold`` overrides the rate-derived target SINR.
    """
    estimator = Estimator(estimator)
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    phi = cfg.phi if threshold is None else float(threshold)
    n_blocks = -(-n_trials // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, n_trials - b * BLOCK_SIZE) for b in range(n_blocks)]

    def job(b):
        return _count_block(cfg, estimator, phi, seed, b, sizes[b])

    if workers <= 1 or n_blocks == 1:
        count = sum(job(b) for b in range(n_blocks))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            count = sum(pool.map(job, range(n_blocks)))
    p = count / n_trials
    half = 1.96 * math.sqrt(p * (1.0 - p) / n_trials)
    return OutageEstimate(p, half, n_trials, estimator, count)
