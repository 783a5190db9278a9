"""Independent ground truth: Monte Carlo estimators and quadrature.

Monte Carlo work is split into fixed-size chunks.  Chunk ``i`` draws from a
Philox generator keyed by ``(seed, i)``, and chunk results are merged in
chunk order, so an estimate depends only on ``(samples, seed, chunk)`` and not
on how many workers evaluated it.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import gammaln, roots_genlaguerre

from .core import OracleError, QuadratureError

Sampler = Callable[[np.random.Generator, int], np.ndarray]
LogPdf = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class McConfig:
    samples: int = 1_000_000
    seed: int = 0
    chunk: int = 1 << 16
    workers: int = 1

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.chunk < 1:
            raise ValueError("chunk must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class McResult:
    estimate: float
    std_error: float
    samples_used: int


def chunk_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for chunk ``index`` of a run seeded by ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def _chunk_sizes(cfg: McConfig) -> list[int]:
    full, rest = divmod(cfg.samples, cfg.chunk)
    return [cfg.chunk] * full + ([rest] if rest else [])


def _workers(cfg: McConfig) -> int:
    cap = os.environ.get("DIVBOUND_THREADS")
    w = cfg.workers
    if cap:
        w = min(w, max(1, int(cap)))
    return max(1, w)


def _map_chunks(fn, cfg: McConfig) -> list:
    sizes = _chunk_sizes(cfg)
    jobs = list(enumerate(sizes))
    w = _workers(cfg)
    if w == 1 or len(jobs) == 1:
        return [fn(i, m) for i, m in jobs]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def _finite_or_raise(values: np.ndarray, what: str, points: np.ndarray) -> None:
    bad = ~np.isfinite(values)
    if bad.any():
        idx = int(np.flatnonzero(bad)[0])
        raise OracleError(f"non-finite {what} = {values[idx]!r} at sample {points[idx]!r}")


def mc_tv(
    sampler1: Sampler,
    sampler2: Sampler,
    log_pdf1: LogPdf,
    log_pdf2: LogPdf,
    cfg: McConfig,
) -> McResult:
    """TVD estimate P{f1(X) >= f2(X)} - P{f1(Y) >= f2(Y)}, X ~ f1, Y ~ f2."""

    def run(i: int, m: int) -> tuple[int, int]:
        rng = chunk_rng(cfg.seed, i)
        x = sampler1(rng, m)
        y = sampler2(rng, m)
        lx = log_pdf1(x) - log_pdf2(x)
        ly = log_pdf1(y) - log_pdf2(y)
        _finite_or_raise(lx, "log-density ratio under sampler1", x)
        _finite_or_raise(ly, "log-density ratio under sampler2", y)
        return int(np.count_nonzero(lx >= 0)), int(np.count_nonzero(ly >= 0))

    counts = _map_chunks(run, cfg)
    n = cfg.samples
    px = sum(c[0] for c in counts) / n
    py = sum(c[1] for c in counts) / n
    se = math.sqrt(px * (1 - px) / n + py * (1 - py) / n)
    return McResult(px - py, se, n)


def mc_kl(sampler1: Sampler, log_pdf1: LogPdf, log_pdf2: LogPdf, cfg: McConfig) -> McResult:
    """KLD estimate: sample mean of log f1 - log f2 under f1."""

    def run(i: int, m: int) -> tuple[int, float, float]:
        rng = chunk_rng(cfg.seed, i)
        x = sampler1(rng, m)
        v = log_pdf1(x) - log_pdf2(x)
        _finite_or_raise(v, "log-density ratio", x)
        mean = float(np.mean(v))
        return m, mean, float(np.sum((v - mean) ** 2))

    parts = _map_chunks(run, cfg)
    # Chan et al. pairwise merge, in chunk order
    count, mean, m2 = 0, 0.0, 0.0
    for m, mu, s2 in parts:
        tot = count + m
        delta = mu - mean
        mean += delta * m / tot
        m2 += s2 + delta * delta * count * m / tot
        count = tot
    var = m2 / (count - 1) if count > 1 else 0.0
    return McResult(mean, math.sqrt(var / count), count)


# ---------------------------------------------------------------------------
# Samplers and log-densities
# ---------------------------------------------------------------------------

def sample_student(nu: float, n: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Centered Student t with identity scale: Z / sqrt(chi2_nu / nu)."""
    m = 1 if size is None else size
    z = rng.standard_normal((m, n))
    w = rng.chisquare(nu, m) / nu
    out = z / np.sqrt(w)[:, None]
    return out[0] if size is None else out


def sample_diag_normal(d: Sequence[float], rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    m = 1 if size is None else size
    out = rng.standard_normal((m, d.size)) * np.sqrt(d)
    return out[0] if size is None else out


def sample_gamma_product(
    shape: Sequence[float], rate: Sequence[float], rng: np.random.Generator, size: int | None = None
) -> np.ndarray:
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    m = 1 if size is None else size
    out = rng.gamma(shape, 1.0 / rate, size=(m, shape.size))
    return out[0] if size is None else out


def student_log_pdf(x: np.ndarray, nu: float) -> np.ndarray:
    x = np.atleast_2d(x)
    n = x.shape[1]
    const = gammaln((nu + n) / 2) - gammaln(nu / 2) - 0.5 * n * math.log(nu * math.pi)
    return const - 0.5 * (nu + n) * np.log1p(np.sum(x * x, axis=1) / nu)


def diag_normal_log_pdf(x: np.ndarray, d: Sequence[float]) -> np.ndarray:
    x = np.atleast_2d(x)
    d = np.asarray(d, dtype=float)
    n = x.shape[1]
    return -0.5 * n * math.log(2 * math.pi) - 0.5 * np.sum(np.log(d)) - 0.5 * np.sum(x * x / d, axis=1)


def gamma_product_log_pdf(x: np.ndarray, shape: Sequence[float], rate: Sequence[float]) -> np.ndarray:
    x = np.atleast_2d(x)
    a = np.asarray(shape, dtype=float)
    r = np.asarray(rate, dtype=float)
    return np.sum(a * np.log(r) + (a - 1) * np.log(x) - r * x - gammaln(a), axis=1)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

def quad_adaptive(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    points: Sequence[float] | None = None,
    abs_tol: float = 0.0,
    limit: int = 500,
    full_output: bool = False,
):
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[a, b]`` (bounds may be infinite).

    ``points`` are interior breakpoints (kinks, spikes, declared
    singularities); the range is split there before integrating.  Raises
    :class:`QuadratureError` when the error estimate exceeds
    ``max(tol * |value|, abs_tol)``.
    """
    if a == b:
        return (0.0, 0.0) if full_output else 0.0
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    edges = [a]
    for p in sorted({float(p) for p in (points or ()) if a < p < b}):
        # breakpoints closer than rounding level would create empty pieces
        if p - edges[-1] > 1e-12 * max(1.0, abs(p)):
            edges.append(p)
    if b - edges[-1] <= 1e-12 * max(1.0, abs(b)) and len(edges) > 1:
        edges.pop()
    edges.append(b)
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            # convergence is judged below from the error estimate
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, e = integrate.quad(f, lo, hi, epsabs=abs_tol, epsrel=max(tol, 1e-14), limit=limit)
        total += val
        err += e
    if not math.isfinite(total) or err > max(tol * abs(total), abs_tol):
        raise QuadratureError(
            f"quadrature on [{a}, {b}] did not converge: value={total!r}, error estimate={err!r}",
            total,
            err,
        )
    total *= sign
    return (total, err) if full_output else total


@lru_cache(maxsize=64)
def _laguerre_rule(nodes: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    t, w = roots_genlaguerre(nodes, alpha)
    return t, w


def quad_gauss_laguerre(f: Callable[[np.ndarray], np.ndarray], nodes: int = 200, alpha: float = 0.0) -> float:
    """Generalized Gauss-Laguerre rule for int_0^inf e^{-y} y^alpha f(y) dy.

    ``f`` must accept an array of nodes.
    """
    if nodes < 1:
        raise ValueError("nodes must be >= 1")
    if alpha <= -1:
        raise ValueError("alpha must exceed -1")
    t, w = _laguerre_rule(int(nodes), float(alpha))
    keep = w > 0
    return float(np.sum(w[keep] * np.asarray(f(t[keep]), dtype=float)))
