"""Angular collision kernel, its spherical moments, and derived scalar constants.

The kernel enters every other module only through the quantities computed
here: the spherical moments b_n, the cooling rate zeta = z(1-z)(b0-b1),
c11 = (b0-b2)/(d-1), c_tilde = z^2 d c11 / 2, the critical shear alpha0,
and the spectral function lambda_p of the linearized gain operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateKernelError, KernelError, QuadratureAccuracyError

#: default Gauss-Legendre order used by the polar-angle quadrature
DEFAULT_QUADRATURE_ORDER = 64

#: geometric grading ratio and depth of the panel subdivision toward the
#: endpoints of [0, pi]; algebraic singularities sin^p(theta/2) at theta=0
#: (and cos^p at theta=pi for z=1) are resolved by the grading
_PANEL_RATIO = 0.5
_PANEL_LEVELS = 40


def surface_area(m: int) -> float:
    """Surface measure of the unit sphere S^m embedded in R^{m+1}."""
    if m < 0:
        raise ValueError(f"sphere dimension must be >= 0, got {m}")
    return 2.0 * math.pi ** ((m + 1) / 2) / math.gamma((m + 1) / 2)


def chebyshev_nodes(n: int) -> np.ndarray:
    """First-kind Chebyshev nodes on [-1, 1] in increasing order."""
    k = np.arange(n)
    return np.sort(np.cos(np.pi * (2 * k + 1) / (2 * n)))


@dataclass(frozen=True)
class KernelModel:
    """Cutoff angular kernel b(cos theta) with dimension and restitution.

    family is one of "isotropic" (constant, normalized so b0 = 1),
    "series" (c0 + c1*c + c2*c^2 with user coefficients), or "table"
    (values at first-kind Chebyshev nodes, barycentric interpolation).
    """

    d: int
    e_res: float
    family: str = "isotropic"
    coefficients: tuple[float, ...] = ()
    quadrature_order: int = DEFAULT_QUADRATURE_ORDER

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError(f"dimension must be >= 2, got {self.d}")
        if not 0.0 < self.e_res <= 1.0:
            raise ValueError(f"restitution must lie in (0, 1], got {self.e_res}")
        if self.family not in ("isotropic", "series", "table"):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "series" and len(self.coefficients) != 3:
            raise ValueError("series kernel needs exactly (c0, c1, c2)")
        if self.family == "table" and len(self.coefficients) < 4:
            raise ValueError("tabulated kernel needs at least 4 node values")

    @property
    def z(self) -> float:
        return 0.5 * (1.0 + self.e_res)

    @classmethod
    def isotropic(cls, d: int = 3, e_res: float = 1.0, *,
                  quadrature_order: int = DEFAULT_QUADRATURE_ORDER) -> "KernelModel":
        return cls(d=d, e_res=e_res, family="isotropic",
                   quadrature_order=quadrature_order)

    @classmethod
    def series(cls, coefficients, d: int = 3, e_res: float = 1.0, *,
               quadrature_order: int = DEFAULT_QUADRATURE_ORDER) -> "KernelModel":
        return cls(d=d, e_res=e_res, family="series",
                   coefficients=tuple(float(c) for c in coefficients),
                   quadrature_order=quadrature_order)

    @classmethod
    def tabulated(cls, values, d: int = 3, e_res: float = 1.0, *,
                  quadrature_order: int = DEFAULT_QUADRATURE_ORDER) -> "KernelModel":
        """Kernel given by its values at chebyshev_nodes(len(values))."""
        return cls(d=d, e_res=e_res, family="table",
                   coefficients=tuple(float(v) for v in values),
                   quadrature_order=quadrature_order)

    def angular(self, c) -> np.ndarray:
        """Evaluate b(c) for c = cos(theta) in [-1, 1]."""
        c = np.asarray(c, dtype=float)
        if self.family == "isotropic":
            vals = np.full_like(c, 1.0 / surface_area(self.d - 1))
        elif self.family == "series":
            c0, c1, c2 = self.coefficients
            vals = c0 + c1 * c + c2 * c * c
        else:
            vals = _table_interpolator(self)(c)
        if not np.all(np.isfinite(vals)):
            raise KernelError("non-finite kernel value sampled")
        if np.any(vals < 0.0):
            raise KernelError(
                f"negative kernel value sampled (min {float(np.min(vals)):.3e})")
        return vals


@dataclass(frozen=True)
class KernelConstants:
    """Scalar constants derived from a kernel; see derive_constants."""

    d: int
    z: float
    b0: float
    b1: float
    b2: float
    zeta: float
    c11: float
    c_tilde: float
    alpha0: float

    def as_dict(self) -> dict:
        return {
            "d": self.d, "z": self.z, "b0": self.b0, "b1": self.b1,
            "b2": self.b2, "zeta": self.zeta, "c11": self.c11,
            "c_tilde": self.c_tilde, "alpha0": self.alpha0,
        }


@lru_cache(maxsize=32)
def _table_interpolator(kernel: KernelModel):
    from scipy.interpolate import BarycentricInterpolator

    nodes = chebyshev_nodes(len(kernel.coefficients))
    return BarycentricInterpolator(nodes, np.asarray(kernel.coefficients))


@lru_cache(maxsize=64)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


@lru_cache(maxsize=64)
def _panel_nodes(order: int):
    """Graded-panel Gauss-Legendre nodes/weights on [0, pi].

    Panels shrink geometrically toward both endpoints so algebraic
    endpoint behavior theta^p integrates to near machine precision.
    """
    half = math.pi / 2.0
    edges = [0.0] + [half * _PANEL_RATIO ** k for k in range(_PANEL_LEVELS, -1, -1)]
    x, w = _leggauss(order)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        mid, rad = 0.5 * (a + b), 0.5 * (b - a)
        nodes.append(mid + rad * x)
        weights.append(rad * w)
    th = np.concatenate(nodes)
    wt = np.concatenate(weights)
    # mirror onto [pi/2, pi]
    th = np.concatenate([th, math.pi - th])
    wt = np.concatenate([wt, wt])
    return th, wt


def integrate_polar(f, kernel: KernelModel, *, tol: float = 1e-10) -> float:
    """Sphere integral |S^{d-2}| * int_0^pi f(theta) sin^{d-2}(theta) dtheta.

    Evaluates at two per-panel orders and raises QuadratureAccuracyError
    if the results disagree beyond tol (scaled by the integral's L1 size).
    """
    d = kernel.d
    area = surface_area(d - 2)
    lo = max(8, kernel.quadrature_order // 4)
    hi = max(12, (3 * kernel.quadrature_order) // 8)
    vals = []
    scale = 1.0
    for order in (lo, hi):
        th, wt = _panel_nodes(order)
        ft = np.asarray(f(th), dtype=float) * np.sin(th) ** (d - 2)
        if not np.all(np.isfinite(ft)):
            raise KernelError("non-finite integrand in polar quadrature")
        vals.append(area * float(np.dot(wt, ft)))
        scale = max(1.0, area * float(np.dot(wt, np.abs(ft))))
    if abs(vals[0] - vals[1]) > tol * scale:
        raise QuadratureAccuracyError(
            f"quadrature orders {lo}/{hi} disagree by {abs(vals[0]-vals[1]):.3e} "
            f"(tol {tol:.1e} at scale {scale:.3e})")
    return vals[1]


def sphere_moment(kernel: KernelModel, n: int) -> float:
    """n-th spherical moment b_n = int_{S^{d-1}} b(e.sigma) (e.sigma)^n dsigma."""
    if n < 0:
        raise ValueError(f"moment order must be >= 0, got {n}")
    return integrate_polar(
        lambda th: kernel.angular(np.cos(th)) * np.cos(th) ** n, kernel)


def derive_constants(kernel: KernelModel) -> KernelConstants:
    """All scalar constants: b0..b2, cooling rate, c11, c_tilde, critical shear."""
    b0 = sphere_moment(kernel, 0)
    b1 = sphere_moment(kernel, 1)
    b2 = sphere_moment(kernel, 2)
    if not (b0 > b2 > 0.0 and b0 > b1):
        raise DegenerateKernelError(
            f"kernel is degenerate: b0={b0:.6g}, b1={b1:.6g}, b2={b2:.6g} "
            "(need b0 > b2 > 0 and b0 > b1)")
    z = kernel.z
    d = kernel.d
    zeta = z * (1.0 - z) * (b0 - b1)
    c11 = (b0 - b2) / (d - 1)
    c_tilde = z * z * d * c11 / 2.0
    # zero at z=1: cooling and shear heating cannot balance elastically
    alpha0 = (zeta + c_tilde) * math.sqrt(zeta / (z * z * c11))
    return KernelConstants(d=d, z=z, b0=b0, b1=b1, b2=b2, zeta=zeta,
                           c11=c11, c_tilde=c_tilde, alpha0=alpha0)


def lambda_p(kernel: KernelModel, p: float) -> float:
    """Spectral constant of the linearized gain operator on |k|^p.

    lambda_0 = -b0, lambda_2 = zeta, strictly increasing in p, <= b0.
    """
    if p < 0:
        raise ValueError(f"p must be >= 0, got {p}")
    z = kernel.z

    def integrand(th):
        s = np.sin(0.5 * th) ** 2
        return kernel.angular(np.cos(th)) * (
            1.0 - (z * z * s) ** (p / 2.0) - (1.0 - z * (2.0 - z) * s) ** (p / 2.0))

    return integrate_polar(integrand, kernel)


def lambda_root(kernel: KernelModel, *, tol: float = 1e-10) -> float:
    """Unique p0 > 0 with lambda_{p0} = 0; p0 = 2 exactly at z = 1."""
    if kernel.z == 1.0:
        return 2.0
    lo, hi = 0.0, 2.0
    flo = -sphere_moment(kernel, 0)
    fhi = lambda_p(kernel, 2.0)
    if not (flo < 0.0 <= fhi):
        raise ValueError("lambda_p bracket [0, 2] failed; kernel outside contract")
    # plain bisection: 60 halvings of [0, 2] leave width ~2e-18 << tol
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        fm = lambda_p(kernel, mid)
        if fm < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)
