"""Sample streams: one i.i.d. data sequence each."""

from __future__ import annotations

import numpy as np

from .exceptions import StreamExhausted


class GaussianStream:
    """i.i.d. draws from ``N(mean, cov_scale * I)``."""

    def __init__(self, mean, cov_scale: float, rng: np.random.Generator):
        self.mean = np.asarray(mean, dtype=float)
        self.std = float(np.sqrt(cov_scale))
        self.rng = rng

    def draw(self) -> np.ndarray:
        if self.std == 0.0:
            return self.mean.copy()
        return self.mean + self.std * self.rng.standard_normal(self.mean.shape[0])


class PoolStream:
    """i.i.d. draws with replacement from a finite pool of samples."""

    def __init__(self, pool, rng: np.random.Generator):
        self.pool = np.asarray(pool, dtype=float)
        self.rng = rng

    def draw(self) -> np.ndarray:
        return self.pool[self.rng.integers(len(self.pool))]


class ArrayStream:
    """Replays a fixed array of samples in order; raises once exhausted."""

    def __init__(self, samples):
        self.samples = np.asarray(samples, dtype=float)
        if self.samples.ndim == 1:
            self.samples = self.samples[:, None]
        self.pos = 0

    def draw(self) -> np.ndarray:
        if self.pos >= len(self.samples):
            raise StreamExhausted(f"stream exhausted after {self.pos} samples")
        x = self.samples[self.pos]
        self.pos += 1
        return x


def draw_all(streams) -> np.ndarray:
    """One synchronized sample from each stream, shape ``(M, d)``."""
    return np.stack([np.atleast_1d(s.draw()) for s in streams])


def stream_rng(seed, index: int) -> np.random.Generator:
    """Independent generator for sequence ``index`` under master ``seed``."""
    return np.random.default_rng([_seed_words(seed), 0, index])


def step_rng_seed(seed, t: int):
    """Seed material for the K-Means call at step ``t`` (disjoint from stream seeds)."""
    return [_seed_words(seed), 1, t]


def _seed_words(seed) -> int:
    if isinstance(seed, (list, tuple)):
        return int(np.random.SeedSequence(list(seed)).generate_state(1)[0])
    return int(seed)
