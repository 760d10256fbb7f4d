"""Direct-simulation Monte Carlo of the sheared inelastic Maxwell gas.

Maxwell molecules collide at a velocity-independent rate, so a time step
draws Poisson(N b0 dt / 2) uniformly chosen pairs with no rejection step,
and shear advection is the exact linear map exp(-dt A) along
characteristics.  Strang splitting (half advect, collide, half advect)
makes the only splitting error the operator ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .errors import ConfigError, SimulationError
from .kernel import KernelModel, sphere_moment
from .output import TimeSeries

#: pinned number of jackknife blocks for moment error bars
JACKKNIFE_BLOCKS = 20

#: number of nodes in the precomputed inverse-CDF table for the polar angle
POLAR_TABLE_SIZE = 4096


def _csum(a, axis=None):
    # extended-precision accumulation; roundoff ~2^-64 relative
    return np.asarray(np.sum(a, axis=axis, dtype=np.longdouble), dtype=float)


@lru_cache(maxsize=32)
def _b0(kernel: KernelModel) -> float:
    return sphere_moment(kernel, 0)


@lru_cache(maxsize=32)
def _polar_table(kernel: KernelModel):
    """Inverse-CDF table of the polar marginal ~ b(cos th) sin^{d-2} th."""
    theta = np.linspace(0.0, math.pi, POLAR_TABLE_SIZE)
    pdf = kernel.angular(np.cos(theta)) * np.sin(theta) ** (kernel.d - 2)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(theta))])
    cdf /= cdf[-1]
    return cdf, theta


@dataclass
class ParticleEnsemble:
    """N velocity vectors plus the stream of a counter-based generator."""

    velocities: np.ndarray
    rng: np.random.Generator
    t: float = 0.0

    @property
    def n(self) -> int:
        return self.velocities.shape[0]

    @property
    def d(self) -> int:
        return self.velocities.shape[1]

    @classmethod
    def gaussian(cls, n: int, d: int, temperature: float, seed: int,
                 *, stream: int = 0) -> "ParticleEnsemble":
        """Isotropic Gaussian with total temperature sum |v|^2 / N = temperature,
        centered so the mean velocity is zero to accumulation roundoff."""
        if n < 2:
            raise ValueError(f"need at least 2 particles, got {n}")
        bitgen = np.random.Philox(key=seed)
        if stream:
            bitgen = bitgen.jumped(stream)
        rng = np.random.Generator(bitgen)
        v = rng.standard_normal((n, d)) * math.sqrt(temperature / d)
        v -= _csum(v, axis=0) / n
        v -= _csum(v, axis=0) / n
        return cls(velocities=v, rng=rng)

    def mean_velocity(self) -> np.ndarray:
        return _csum(self.velocities, axis=0) / self.n


@dataclass
class DsmcConfig:
    n: int
    A: np.ndarray
    kernel: KernelModel
    t_end: float
    dt: float
    sample_every: int = 10
    seed: int = 0
    rescale: bool = False
    beta: float = 0.0
    temperature: float = 1.0

    def __post_init__(self) -> None:
        self.A = np.asarray(self.A, dtype=float)
        d = self.A.shape[0]
        if self.A.shape != (d, d):
            raise ConfigError(f"A must be square, got {self.A.shape}")
        if d != self.kernel.d:
            raise ConfigError(
                f"A is {d}x{d} but the kernel has d={self.kernel.d}")
        if self.t_end <= 0 or self.dt <= 0 or self.sample_every < 1:
            raise ConfigError("t_end, dt must be > 0 and sample_every >= 1")
        if self.dt * _b0(self.kernel) > 0.5:
            raise ConfigError(
                f"dt*b0 = {self.dt * _b0(self.kernel):.3g} violates the "
                "collision-splitting guard dt*b0 <= 0.5")

    @property
    def effective_A(self) -> np.ndarray:
        """Advection matrix: A, or A + beta I in the self-similar frame."""
        if self.rescale:
            return self.A + self.beta * np.eye(self.A.shape[0])
        return self.A


def advect(ens: ParticleEnsemble, A: np.ndarray, dt: float) -> ParticleEnsemble:
    """Map every velocity by exp(-dt A), computed once for the step."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    phi = expm(-dt * np.asarray(A, dtype=float))
    ens.velocities = ens.velocities @ phi.T
    return ens


def sample_sigma(kernel: KernelModel, e_hat: np.ndarray,
                 rng: np.random.Generator) -> np.ndarray:
    """Directions on S^{d-1} with density b(e.sigma)/b0 around each e_hat."""
    e = np.atleast_2d(np.asarray(e_hat, dtype=float))
    m, d = e.shape
    u = rng.random(m)
    g = rng.standard_normal((m, d))
    sigma = _sigma_transform(kernel, e, u, g)
    return sigma[0] if np.ndim(e_hat) == 1 else sigma


def _sigma_transform(kernel, e, u, g):
    cdf, theta_grid = _polar_table(kernel)
    theta = np.interp(u, cdf, theta_grid)
    # uniform direction in the hyperplane orthogonal to e
    w = g - np.sum(g * e, axis=1, keepdims=True) * e
    norm = np.linalg.norm(w, axis=1, keepdims=True)
    bad = norm[:, 0] < 1e-12
    if np.any(bad):
        # Gaussian landed on the axis; fall back to the least-aligned
        # coordinate direction, orthogonalized
        idx = np.argmin(np.abs(e[bad]), axis=1)
        fallback = np.zeros((int(bad.sum()), e.shape[1]))
        fallback[np.arange(len(idx)), idx] = 1.0
        fallback -= np.sum(fallback * e[bad], axis=1, keepdims=True) * e[bad]
        w[bad] = fallback
        norm[bad] = np.linalg.norm(fallback, axis=1, keepdims=True)
    w /= norm
    return np.cos(theta)[:, None] * e + np.sin(theta)[:, None] * w


def collide_pair(v, v_star, sigma, z: float):
    """Post-collision pair; momentum conserved by construction."""
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    center = 0.5 * (v + v_star)
    rel = v - v_star
    speed = np.linalg.norm(rel, axis=-1, keepdims=True) if v.ndim > 1 else np.linalg.norm(rel)
    shift = 0.5 * (1.0 - z) * rel + 0.5 * z * speed * sigma
    return center + shift, center - shift


def _chunk_end(i, j, start):
    """Largest end such that pairs i[start:end], j[start:end] touch 2(end-start)
    distinct particles, preserving the sequential collision order."""
    m = len(i)
    flat = np.empty(2 * (m - start), dtype=np.int64)
    flat[0::2] = i[start:]
    flat[1::2] = j[start:]
    order = np.argsort(flat, kind="stable")
    sv = flat[order]
    dup = np.nonzero(sv[1:] == sv[:-1])[0]
    if dup.size == 0:
        return m
    # stable sort puts equal indices in draw order, so order[dup+1] are the
    # second occurrences; the earliest one starts the next chunk
    first = int(order[dup + 1].min())
    return start + first // 2


def collision_step(ens: ParticleEnsemble, kernel: KernelModel, dt: float,
                   rng: np.random.Generator | None = None) -> int:
    """Poisson(N b0 dt / 2) uniformly drawn pair collisions; returns the count.

    Pairs are applied in draw order; the vectorized application splits the
    sequence at the first repeated particle so the result is identical to
    sequential processing.
    """
    rng = ens.rng if rng is None else rng
    n = ens.n
    b0 = _b0(kernel)
    if dt * b0 > 0.5:
        raise ValueError(f"dt*b0 = {dt * b0:.3g} > 0.5 splitting guard")
    m = int(rng.poisson(n * b0 * dt / 2.0))
    if m == 0:
        return 0
    i = rng.integers(0, n, size=m)
    j = rng.integers(0, n, size=m)
    clash = i == j
    while np.any(clash):
        j[clash] = rng.integers(0, n, size=int(clash.sum()))
        clash = i == j
    # draw all underlying randoms up front so the stream does not depend on
    # how the sequence happens to chunk
    u = rng.random(m)
    g = rng.standard_normal((m, ens.d))
    v = ens.velocities
    z = kernel.z
    start = 0
    while start < m:
        end = _chunk_end(i, j, start)
        ii, jj = i[start:end], j[start:end]
        rel = v[ii] - v[jj]
        speed = np.linalg.norm(rel, axis=1, keepdims=True)
        e_hat = np.divide(rel, speed, out=np.zeros_like(rel), where=speed > 0)
        sigma = _sigma_transform(kernel, e_hat, u[start:end], g[start:end])
        center = 0.5 * (v[ii] + v[jj])
        shift = 0.5 * (1.0 - z) * rel + 0.5 * z * speed * sigma
        v[ii] = center + shift
        v[jj] = center - shift
        start = end
    return m


@dataclass
class MomentSample:
    """Empirical moments with jackknife error estimates."""

    T: float
    B: np.ndarray
    m4: float
    T_err: float
    B_err: np.ndarray
    m4_err: float
    mean: np.ndarray


def measure_moments(ens: ParticleEnsemble,
                    blocks: int = JACKKNIFE_BLOCKS) -> MomentSample:
    """Second-moment matrix, temperature and fourth absolute moment with
    compensated summation and leave-one-block-out jackknife errors."""
    v = ens.velocities
    n, d = v.shape
    if n < 2:
        raise ValueError("need at least 2 particles")
    prods = v[:, :, None] * v[:, None, :]
    sq = np.sum(v * v, axis=1)
    B = _csum(prods.reshape(n, -1), axis=0).reshape(d, d) / n
    T = float(_csum(sq) / n)
    m4 = float(_csum(sq * sq) / n)
    mean = _csum(v, axis=0) / n

    bounds = np.linspace(0, n, blocks + 1).astype(int)
    bT = np.empty(blocks)
    bB = np.empty((blocks, d, d))
    bm4 = np.empty(blocks)
    sizes = np.diff(bounds)
    for k, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
        bT[k] = _csum(sq[a:b])
        bm4[k] = _csum(sq[a:b] * sq[a:b])
        bB[k] = _csum(prods[a:b].reshape(b - a, -1), axis=0).reshape(d, d)

    def jack_err(block_sums, total):
        loo = (total - block_sums) / (n - sizes).reshape(
            (-1,) + (1,) * (np.ndim(block_sums) - 1))
        center = np.mean(loo, axis=0)
        return np.sqrt((blocks - 1) / blocks
                       * np.sum((loo - center) ** 2, axis=0))

    T_err = float(jack_err(bT, T * n))
    m4_err = float(jack_err(bm4, m4 * n))
    B_err = jack_err(bB, B * n)
    return MomentSample(T=T, B=B, m4=m4, T_err=T_err, B_err=B_err,
                        m4_err=m4_err, mean=mean)


def _series_columns(d: int) -> list[str]:
    cols = ["t", "T", "T_err"]
    for i in range(d):
        for j in range(i, d):
            cols.append(f"B{i + 1}{j + 1}")
            cols.append(f"B{i + 1}{j + 1}_err")
    cols += ["m4", "m4_err"]
    return cols


def run(config: DsmcConfig, ens: ParticleEnsemble | None = None,
        *, stream: int = 0) -> TimeSeries:
    """Strang-split evolution; samples moments every sample_every steps."""
    if ens is None:
        ens = ParticleEnsemble.gaussian(config.n, config.A.shape[0],
                                        config.temperature, config.seed,
                                        stream=stream)
    d = ens.d
    A_eff = config.effective_A
    half = expm(-0.5 * config.dt * A_eff)
    nsteps = max(1, int(round(config.t_end / config.dt)))
    series = TimeSeries(columns=_series_columns(d))

    def record():
        if not np.all(np.isfinite(ens.velocities)):
            bad = int(np.sum(~np.isfinite(ens.velocities)))
            raise SimulationError(
                f"NaN/inf velocities ({bad} entries) at t={ens.t:.6g}")
        s = measure_moments(ens)
        row = [ens.t, s.T, s.T_err]
        for i in range(d):
            for j in range(i, d):
                row += [s.B[i, j], s.B_err[i, j]]
        row += [s.m4, s.m4_err]
        series.append(row)

    record()
    for step in range(nsteps):
        ens.velocities = ens.velocities @ half.T
        collision_step(ens, config.kernel, config.dt)
        ens.velocities = ens.velocities @ half.T
        ens.t += config.dt
        if (step + 1) % config.sample_every == 0 or step == nsteps - 1:
            record()
    return series


def run_replicas(config: DsmcConfig, replicas: int) -> list[TimeSeries]:
    """Independent replicas on jumped counter-based streams."""
    return [run(config, stream=r) for r in range(replicas)]


def fit_log_slope(t: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope of log y against t, with its standard error."""
    t = np.asarray(t, dtype=float)
    ly = np.log(np.asarray(y, dtype=float))
    n = len(t)
    if n < 3:
        raise ValueError("need at least 3 points for a slope error estimate")
    X = np.column_stack([np.ones(n), t])
    coef, res, *_ = np.linalg.lstsq(X, ly, rcond=None)
    resid = ly - X @ coef
    s2 = float(resid @ resid) / (n - 2)
    cov = s2 * np.linalg.inv(X.T @ X)
    return float(coef[1]), float(math.sqrt(cov[1, 1]))
