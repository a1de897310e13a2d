"""Seed-reproducible simulation of the parallel-update chipping dynamics.

Random numbers come from a counter-based generator: the uniform used by site
``i`` at step ``t`` of worker ``w`` is a hash of ``(seed, w, t, i)``.  Any
draw can be recomputed in isolation, so the streams do not depend on
scheduling or on which kernel backend ran them.

Hopping numbers are sampled by inverse CDF from a per-``n`` table whose last
entry is pinned to exactly 1.0.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from fractions import Fraction

import numpy as np

from . import kernels
from .hopping import ModelParams, phi
from .state_space import enumerate_configs, stationary_vector

__all__ = [
    "HorizonError",
    "PhiTable",
    "CounterRNG",
    "counter_uniform_array",
    "sample_phi",
    "step_parallel",
    "SimConfig",
    "SimResult",
    "simulate",
    "run_stationary_test",
    "run_current",
    "exact_mean_current",
    "chi_square_sampler",
    "series_csv",
    "summary_json",
]

# site index reserved for CounterRNG.random so it never meets a lattice draw
_STREAM_SITE = (1 << 64) - 1


class HorizonError(ValueError):
    """A site holds more particles than the sampling table covers."""


class PhiTable:
    """Inverse-CDF table ``cdf[n, m] = sum_{k <= m} phi(k|n)`` for n <= horizon."""

    def __init__(self, params: ModelParams, horizon: int):
        self.params = params
        self.horizon = horizon
        cdf = np.ones((horizon + 1, horizon + 1), dtype=np.float64)
        for n in range(horizon + 1):
            acc = 0.0
            for m in range(n + 1):
                acc += float(phi(m, n, params))
                cdf[n, m] = min(acc, 1.0)
            # guard against rounding: the top of every row is exactly one
            cdf[n, n] = 1.0
        self.cdf = np.ascontiguousarray(cdf)

    def check(self, n: int):
        if n > self.horizon:
            raise HorizonError(f"n = {n} exceeds table horizon {self.horizon}")

    def lookup(self, n: int, u):
        self.check(n)
        return np.searchsorted(self.cdf[n, : n + 1], u, side="right")


def counter_uniform_array(seed: int, worker: int, steps, site: int) -> np.ndarray:
    """Vectorized counter draws over an array of step indices."""
    def mix(z):
        z = z + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))

    with np.errstate(over="ignore"):
        h = mix(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
        h = mix(h ^ np.uint64(worker))
        h = mix(h ^ np.asarray(steps, dtype=np.uint64))
        h = mix(h ^ np.uint64(site & 0xFFFFFFFFFFFFFFFF))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


class CounterRNG:
    """Splittable generator keyed by (seed, worker).

    ``uniform(step, site)`` is stateless; ``random(size)`` walks a private
    counter for standalone sampling.
    """

    def __init__(self, seed: int = 0, worker: int = 0):
        self.seed = seed
        self.worker = worker
        self.counter = 0

    def uniform(self, step: int, site: int) -> float:
        return kernels.counter_uniform(self.seed, self.worker, step, site)

    def split(self, worker: int) -> "CounterRNG":
        return CounterRNG(self.seed, worker)

    def random(self, size=None):
        n = 1 if size is None else int(np.prod(size))
        steps = np.arange(self.counter, self.counter + n, dtype=np.uint64)
        self.counter += n
        out = counter_uniform_array(self.seed, self.worker, steps, _STREAM_SITE)
        return float(out[0]) if size is None else out.reshape(size)


def sample_phi(n: int, params: ModelParams, rng, size=None, table: PhiTable | None = None):
    """Draw m ~ phi(.|n); ``rng`` needs a ``random(size)`` method."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    table = table or PhiTable(params, n)
    u = rng.random(size)
    m = table.lookup(n, u)
    return int(m) if size is None else m.astype(np.int64)


def step_parallel(config, params: ModelParams, rng: CounterRNG, step: int = 0,
                  table: PhiTable | None = None) -> tuple:
    """One simultaneous update of every site on a ring.

    Site ``i`` sends ``m_i ~ phi(.|n_i)`` particles to site ``i + 1``.
    """
    occ = np.array(config, dtype=np.int64)
    table = table or PhiTable(params, int(occ.sum()))
    table.check(int(occ.max(initial=0)))
    codes = np.zeros(1, dtype=np.int64)
    current = np.zeros(1, dtype=np.int64)
    kernels.run_ring(occ, 1, table.cdf, rng.seed, rng.worker, step, -1, codes, current)
    return tuple(int(v) for v in occ)


# --- configured runs -------------------------------------------------------------------


def _parse_scalar(v):
    if isinstance(v, str):
        return Fraction(v)
    return v


@dataclass
class SimConfig:
    L: int
    N: int
    params: ModelParams
    steps: int
    burn_in: int | None = None
    seed: int = 0
    observables: tuple = ("stationary", "current")
    workers: int = 1
    bond: int = 0
    initial: tuple | None = None

    def __post_init__(self):
        if self.burn_in is None:
            self.burn_in = 100 * self.L * self.N
        if self.L < 1 or self.N < 0:
            raise ValueError("need L >= 1 and N >= 0")
        if not self.steps > self.burn_in >= 0:
            raise ValueError(f"need steps > burn_in >= 0 (steps={self.steps}, burn_in={self.burn_in})")
        if self.workers < 1:
            raise ValueError("workers must be positive")
        if not 0 <= self.bond < self.L:
            raise ValueError("bond outside the ring")
        if self.initial is not None:
            self.initial = tuple(self.initial)
            if len(self.initial) != self.L or sum(self.initial) != self.N or min(self.initial) < 0:
                raise ValueError("initial configuration does not match L and N")
        self.observables = tuple(self.observables)

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        d = dict(data)
        p = d.pop("params")
        params = ModelParams(_parse_scalar(p["q"]), _parse_scalar(p["mu"]), _parse_scalar(p["nu"]))
        return cls(params=params, **d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = self.params.describe()
        d["observables"] = list(self.observables)
        if self.initial is not None:
            d["initial"] = list(self.initial)
        return d

    def start(self) -> tuple:
        if self.initial is not None:
            return self.initial
        occ = [0] * self.L
        for k in range(self.N):
            occ[k % self.L] += 1
        return tuple(occ)


@dataclass
class SimResult:
    config: SimConfig
    codes: np.ndarray
    current: np.ndarray
    backend: str
    per_worker: list = field(default_factory=list)

    def decode(self, code: int) -> tuple:
        base = self.config.N + 1
        out = []
        for _ in range(self.config.L):
            code, r = divmod(int(code), base)
            out.append(r)
        return tuple(out)


def _encode(config, base: int) -> int:
    code, mult = 0, 1
    for n in config:
        code += n * mult
        mult *= base
    return code


def _worker_steps(total: int, workers: int, w: int) -> int:
    return total // workers + (1 if w < total % workers else 0)


def _run_worker(args):
    cfg, worker, backend = args
    impl = kernels.get(backend)
    table = PhiTable(cfg.params, cfg.N)
    occ = np.array(cfg.start(), dtype=np.int64)
    steps = _worker_steps(cfg.steps, cfg.workers, worker)
    chunk = 1 << 16
    if cfg.burn_in:
        scratch = np.zeros(min(cfg.burn_in, chunk), dtype=np.int64)
        done = 0
        while done < cfg.burn_in:
            k = min(chunk, cfg.burn_in - done)
            impl.run_ring(occ, k, table.cdf, cfg.seed, worker, done, -1, scratch, scratch)
            done += k
    codes = np.zeros(steps, dtype=np.int64)
    current = np.zeros(steps, dtype=np.int64)
    impl.run_ring(occ, steps, table.cdf, cfg.seed, worker, cfg.burn_in, cfg.bond, codes, current)
    return codes, current


def simulate(cfg: SimConfig, backend: str | None = None) -> SimResult:
    """Run ``cfg.workers`` independent chains and concatenate them in worker order."""
    backend = backend or kernels.BACKEND
    if (cfg.N + 1) ** cfg.L >= 2**63:
        raise ValueError("state encoding overflows 64 bits; reduce L or N")
    jobs = [(cfg, w, backend) for w in range(cfg.workers)]
    if cfg.workers == 1:
        parts = [_run_worker(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_run_worker, jobs))
    codes = np.concatenate([c for c, _ in parts])
    current = np.concatenate([j for _, j in parts])
    return SimResult(cfg, codes, current, backend, [len(c) for c, _ in parts])


def run_stationary_test(cfg: SimConfig, threshold: float = 0.01, backend: str | None = None,
                        result: SimResult | None = None) -> dict:
    """Total-variation distance between visited-state frequencies and the product measure."""
    result = result or simulate(cfg, backend)
    configs = enumerate_configs(cfg.L, cfg.N)
    exact = np.array([float(w) for w in stationary_vector(cfg.L, cfg.N, cfg.params, configs)])
    base = cfg.N + 1
    index = {_encode(c, base): i for i, c in enumerate(configs)}
    codes, counts = np.unique(result.codes, return_counts=True)
    emp = np.zeros(len(configs))
    for code, k in zip(codes, counts):
        emp[index[int(code)]] = k
    n = len(result.codes)
    emp /= n
    tv = 0.5 * float(np.abs(emp - exact).sum())
    # expected TV of n independent draws; correlated chains sit above this
    iid_scale = float(np.sum(np.sqrt(exact * (1 - exact) / (2 * np.pi * n))))
    return {
        "L": cfg.L,
        "N": cfg.N,
        "samples": n,
        "states": len(configs),
        "tv_distance": tv,
        "threshold": threshold,
        "iid_noise_scale": iid_scale,
        "backend": result.backend,
        "pass": tv < threshold,
    }


def exact_mean_current(L: int, N: int, params: ModelParams) -> float:
    """sum over states of P_st times E[m] at one site (all sites agree by symmetry)."""
    configs = enumerate_configs(L, N)
    weights = stationary_vector(L, N, params, configs)
    total = 0
    for c, w in zip(configs, weights):
        n = c[0]
        total += w * sum(m * phi(m, n, params) for m in range(n + 1))
    return float(total)


def _batch_stderr(x: np.ndarray, batches: int = 50) -> float:
    if len(x) < 2 * batches:
        return float(np.std(x) / np.sqrt(max(len(x), 1)))
    means = np.array([b.mean() for b in np.array_split(x, batches)])
    return float(means.std(ddof=1) / np.sqrt(batches))


def run_current(cfg: SimConfig, backend: str | None = None, result: SimResult | None = None,
                exact: bool = True) -> dict:
    """Per-step particle count across bond (bond, bond + 1) with summary statistics."""
    result = result or simulate(cfg, backend)
    x = result.current.astype(np.float64)
    out = {
        "series": result.current,
        "mean": float(x.mean()) if len(x) else 0.0,
        "variance": float(x.var()) if len(x) else 0.0,
        "stderr": _batch_stderr(x),
        "backend": result.backend,
    }
    if exact:
        out["exact_mean"] = exact_mean_current(cfg.L, cfg.N, cfg.params)
        out["z_score"] = (out["mean"] - out["exact_mean"]) / out["stderr"] if out["stderr"] else 0.0
    return out


def chi_square_sampler(n: int, params: ModelParams, draws: int, rng) -> dict:
    """Pearson chi-square of ``draws`` samples of phi(.|n) against the exact law."""
    from scipy.stats import chisquare

    probs = np.array([float(phi(m, n, params)) for m in range(n + 1)])
    sample = sample_phi(n, params, rng, size=draws)
    observed = np.bincount(sample, minlength=n + 1).astype(float)
    keep = probs > 0
    if observed[~keep].any():
        return {"n": n, "statistic": float("inf"), "p_value": 0.0, "dof": int(keep.sum() - 1)}
    if keep.sum() < 2:
        return {"n": n, "statistic": 0.0, "p_value": 1.0, "dof": 0}
    expected = probs[keep] / probs[keep].sum() * draws
    stat, pval = chisquare(observed[keep], expected)
    return {"n": n, "statistic": float(stat), "p_value": float(pval), "dof": int(keep.sum() - 1)}


def series_csv(values, name: str = "value", step0: int = 0) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", name])
    for k, v in enumerate(values):
        w.writerow([step0 + k, int(v)])
    return buf.getvalue()


def summary_json(report: dict) -> str:
    clean = {k: v for k, v in report.items() if k != "series"}
    return json.dumps(clean, indent=2, sort_keys=True) + "\n"
