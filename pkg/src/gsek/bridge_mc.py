"""Brownian-bridge Monte Carlo.

The bridge is the process with generator Delta (variance 2s per coordinate at
time s) pinned at B(0) = x, B(t) = y.  Paths are generated in fixed blocks;
block b draws from its own Philox stream keyed by (seed, b), and block
statistics are merged in block order, so results do not depend on how many
workers run the blocks.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, UnboundedPotentialError, UsageError
from .kernels import as_point
from .potentials import Potential

BLOCK = 8192


@dataclass(frozen=True)
class BridgeConfig:
    paths: int = 100_000
    steps: int = 1024
    seed: int = 0

    def __post_init__(self):
        if int(self.paths) < 1:
            raise UsageError("paths must be >= 1")
        if int(self.steps) < 2:
            raise UsageError("steps must be >= 2")
        if not 0 <= int(self.seed) < 2**64:
            raise UsageError("seed must be a 64-bit unsigned integer")

    def replace(self, **changes) -> "BridgeConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    paths: int

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Independent counter-based stream for one block of paths."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def _times(t, steps):
    return np.linspace(0.0, t, steps + 1)


def _bridge_steps(rng, t, x, y, steps, n):
    """Yield (i, positions (n, d)) for i = 0..steps, drawing the path forward.

    Given B(s_i) = b, B(s_{i+1}) is Gaussian with mean b + (h/(t - s_i))(y - b)
    and variance 2 h (t - s_{i+1})/(t - s_i) per coordinate.
    """
    d = x.size
    s = _times(t, steps)
    b = np.tile(x, (n, 1))
    yield 0, b
    for i in range(steps - 1):
        h = s[i + 1] - s[i]
        rem = t - s[i]
        mean = b + (h / rem) * (y - b)
        sd = math.sqrt(2.0 * h * (t - s[i + 1]) / rem)
        b = mean + sd * rng.standard_normal((n, d))
        yield i + 1, b
    yield steps, np.tile(y, (n, 1))


def sample_bridge(t, x, y, steps: int = 1024, rng: Optional[np.random.Generator] = None, paths: int = 1):
    """Discrete bridge paths, shape (paths, steps + 1, d); endpoints are exactly x and y."""
    t = float(t)
    if not t > 0:
        raise DomainError("t must be positive")
    x = as_point(x)
    y = as_point(y, x.size)
    if int(steps) < 2:
        raise UsageError("steps must be >= 2")
    rng = rng if rng is not None else block_rng(0, 0)
    out = np.empty((paths, steps + 1, x.size))
    for i, b in _bridge_steps(rng, t, x, y, int(steps), paths):
        out[:, i, :] = b
    return out


def _path_integrals(V, t, x, y, steps, rng, n, signed):
    """Trapezoid rule of V (or |V|) along n bridge paths."""
    h = t / steps
    acc = np.zeros(n)
    for i, b in _bridge_steps(rng, t, x, y, steps, n):
        v = V._eval(b) if signed else V.abs_eval(b)
        acc += (0.5 if i in (0, steps) else 1.0) * v
    return h * acc


def _block_stats(args):
    V, t, x, y, cfg, block, n, kind = args
    rng = block_rng(cfg.seed, block)
    I = _path_integrals(V, t, x, y, cfg.steps, rng, n, signed=(kind == "fk"))
    vals = np.exp(I) if kind == "fk" else I
    mean = float(vals.mean())
    m2 = float(np.sum((vals - mean) ** 2))
    return n, mean, m2


def _merge(stats):
    """Chan et al. pairwise update, applied in block order."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in stats:
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    return n, mean, m2


def _run(V, t, x, y, cfg: BridgeConfig, kind, jobs=1):
    t = float(t)
    if not t > 0:
        raise DomainError("t must be positive")
    x = as_point(x, V.dim)
    y = as_point(y, V.dim)
    nblocks = -(-int(cfg.paths) // BLOCK)
    sizes = [min(BLOCK, cfg.paths - b * BLOCK) for b in range(nblocks)]
    tasks = [(V, t, x, y, cfg, b, sizes[b], kind) for b in range(nblocks)]
    if jobs and jobs > 1 and nblocks > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            stats = list(ex.map(_block_stats, tasks))
    else:
        stats = [_block_stats(a) for a in tasks]
    n, mean, m2 = _merge(stats)
    sd = math.sqrt(m2 / (n - 1)) if n > 1 else 0.0
    return MCEstimate(mean, sd / math.sqrt(n), n)


def S_bridge_estimate(V: Potential, t, x, y, config: BridgeConfig = BridgeConfig(), jobs: int = 1) -> MCEstimate:
    """E int_0^t |V(B_s)| ds over bridges from x to y (a Monte Carlo oracle for S)."""
    if V.is_zero():
        return MCEstimate(0.0, 0.0, int(config.paths))
    return _run(V, t, x, y, config, "S", jobs)


def feynman_kac_ratio(V: Potential, t, x, y, config: BridgeConfig = BridgeConfig(), jobs: int = 1) -> MCEstimate:
    """E exp(int_0^t V(B_s) ds) over bridges from x to y, i.e. G(t,x,y)/g(t,x,y)."""
    bound = V.sup_abs()
    if not math.isfinite(bound):
        raise UnboundedPotentialError("feynman_kac_ratio needs a potential with a finite structural sup bound")
    if bound * float(t) > 700.0:
        raise UnboundedPotentialError("exp(t * sup|V|) overflows double precision")
    if V.is_zero():
        return MCEstimate(1.0, 0.0, int(config.paths))
    return _run(V, t, x, y, config, "fk", jobs)
