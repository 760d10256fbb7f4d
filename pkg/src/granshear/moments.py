"""Second-moment tensor dynamics, the self-similar parameter, and USF theory.

The second moment matrix in the self-similar frame obeys the linear ODE
dB/dt = -[(2 beta + zeta + c_tilde) B + A B + B A^T - (c_tilde/d) tr(B) I],
so everything here reduces to spectral analysis of one operator on the
space of symmetric d x d matrices.  For uniform shear flow A = alpha E12
the spectrum is explicit via the real root gamma and complex pair
sigma +- i omega of a depressed cubic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import expm

from .errors import NoProfileError, SimulationError
from .kernel import KernelConstants

#: |alpha - alpha0| <= EQ_TOL * max(1, alpha0) counts as the balanced case
ALPHA_EQUALITY_TOL = 1e-12

#: maximum exponent allowed in evolve_second_moment before it aborts
_MAX_GROWTH_EXPONENT = 650.0


@dataclass
class MomentState:
    """Symmetric second-moment matrix at a given time."""

    B: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        self.B = np.asarray(self.B, dtype=float)
        d = self.B.shape[0]
        if self.B.shape != (d, d):
            raise ValueError(f"B must be square, got {self.B.shape}")
        if not np.allclose(self.B, self.B.T, atol=1e-12 * max(1.0, np.abs(self.B).max())):
            raise ValueError("B must be symmetric")
        self.B = 0.5 * (self.B + self.B.T)

    @property
    def temperature(self) -> float:
        return float(np.trace(self.B))


@dataclass(frozen=True)
class SelfSimilarParams:
    """Self-similar rate beta, its shift beta_tilde = beta + zeta/2,
    the trace-normalized stationary profile matrix, and the spectral gap."""

    beta: float
    beta_tilde: float
    B_profile: np.ndarray
    nu: float


@dataclass(frozen=True)
class UsfSpectrum:
    """Real root gamma and complex pair sigma +- i omega of the USF cubic."""

    gamma: float
    sigma: float
    omega: float
    Theta: float


@dataclass(frozen=True)
class TemperatureClassification:
    verdict: str          # "grows" | "decays" | "converges"
    rate: float           # positive decay/growth/convergence rate
    gamma: float
    alpha0: float


@dataclass(frozen=True)
class ObstructionReport:
    """All principal minors of -S for the 2D USF obstruction matrix."""

    S: np.ndarray
    minors: dict          # subset of 1-based indices -> principal minor of -S
    det_minus_S: float
    psd: bool
    beta_tilde: float


def sym_basis(d: int) -> list[np.ndarray]:
    """Orthonormal basis of symmetric matrices: E_ii, (E_ij+E_ji)/sqrt(2)."""
    basis = []
    for i in range(d):
        E = np.zeros((d, d))
        E[i, i] = 1.0
        basis.append(E)
    for i in range(d):
        for j in range(i + 1, d):
            E = np.zeros((d, d))
            E[i, j] = E[j, i] = 1.0 / math.sqrt(2.0)
            basis.append(E)
    return basis


def sym_to_vec(B: np.ndarray) -> np.ndarray:
    d = B.shape[0]
    return np.array([float(np.sum(B * E)) for E in sym_basis(d)])


def vec_to_sym(v: np.ndarray, d: int) -> np.ndarray:
    out = np.zeros((d, d), dtype=v.dtype)
    for c, E in zip(v, sym_basis(d)):
        out = out + c * E
    return out


def usf_matrix(alpha: float, d: int) -> np.ndarray:
    """Uniform shear flow matrix alpha * E12."""
    A = np.zeros((d, d))
    A[0, 1] = alpha
    return A


def build_moment_operator(A: np.ndarray, kc: KernelConstants, beta: float) -> np.ndarray:
    """Matrix M on vectorized symmetric matrices with dB/dt = -M vec(B).

    M vec(B) = vec((2 beta + zeta + c_tilde) B + A B + B A^T
                   - (c_tilde/d) tr(B) I).
    The orthonormal basis keeps the representation similarity-faithful.
    """
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    if A.shape != (d, d):
        raise ValueError(f"A must be square, got {A.shape}")
    basis = sym_basis(d)
    D = len(basis)
    M = np.empty((D, D))
    lam = 2.0 * beta + kc.zeta + kc.c_tilde
    for j, Bj in enumerate(basis):
        img = lam * Bj + A @ Bj + Bj @ A.T - (kc.c_tilde / d) * np.trace(Bj) * np.eye(d)
        for i, Bi in enumerate(basis):
            M[i, j] = float(np.sum(img * Bi))
    return M


def evolve_second_moment(state: MomentState, A: np.ndarray, kc: KernelConstants,
                         beta: float, t: float) -> MomentState:
    """Propagate the second moment by exp(-t M) (scaling-and-squaring)."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    A = np.asarray(A, dtype=float)
    M = build_moment_operator(A, kc, beta)
    growth = -min(np.linalg.eigvals(M).real)
    if growth * t > _MAX_GROWTH_EXPONENT:
        raise SimulationError(
            f"second-moment growth rate {growth:.4g} over t={t:.4g} overflows "
            f"(exponent {growth * t:.1f})")
    vec = expm(-t * M) @ sym_to_vec(state.B)
    return MomentState(B=vec_to_sym(vec, A.shape[0]), t=state.t + t)


def find_beta(A: np.ndarray, kc: KernelConstants) -> SelfSimilarParams:
    """Self-similar rate and PSD stationary profile of the moment equation.

    -2 beta must be an eigenvalue of G(B) = A B + B A^T + zeta B
    + c_tilde (B - tr(B) I/d) whose eigenvector is symmetric PSD; among
    admissible candidates the largest beta is returned (the others are
    traceless or complex and cannot carry a probability measure's moments).
    nu is the gap between the stationary mode and the next-slowest real
    part of the operator at the chosen beta; for USF it equals
    2 gamma + c_tilde.
    """
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    M0 = build_moment_operator(A, kc, beta=0.0)
    eigvals, eigvecs = np.linalg.eig(M0)
    scale = max(1.0, np.abs(eigvals).max())
    candidates = []
    for mu, v in zip(eigvals, eigvecs.T):
        if abs(mu.imag) > 1e-9 * scale:
            continue
        # rotate the phase so the eigenvector is real, then symmetrize
        phase = np.exp(-1j * np.angle(v[np.argmax(np.abs(v))]))
        B = vec_to_sym((phase * v).real, d)
        B = 0.5 * (B + B.T)
        resid = np.linalg.norm(M0 @ sym_to_vec(B) - mu.real * sym_to_vec(B))
        if resid > 1e-8 * scale * max(np.linalg.norm(B), 1e-300):
            continue
        tr = np.trace(B)
        if tr < 0:
            B = -B
            tr = -tr
        nb = np.linalg.norm(B)
        if nb == 0 or tr <= 1e-10 * nb:
            continue
        if np.linalg.eigvalsh(B).min() < -1e-10 * nb:
            continue
        candidates.append((-0.5 * mu.real, B / tr))
    if not candidates:
        raise NoProfileError(
            "no PSD stationary eigenvector; shear/inelasticity outside the "
            "perturbative regime")
    beta, B_profile = max(candidates, key=lambda c: c[0])
    rates = np.sort(np.linalg.eig(build_moment_operator(A, kc, beta))[0].real)
    r0 = rates[0]
    gaps = rates[rates > r0 + 1e-9 * scale]
    nu = float(gaps[0] - r0) if gaps.size else math.inf
    return SelfSimilarParams(beta=float(beta), beta_tilde=float(beta + kc.zeta / 2.0),
                             B_profile=B_profile, nu=nu)


def usf_spectrum(alpha: float, kc: KernelConstants) -> UsfSpectrum:
    """Roots of beta_t (4 beta_t + z^2 d c11)^2 = 2 z^2 c11 alpha^2.

    gamma is the unique real root; sigma +- i omega the complex pair.
    arcosh is evaluated in log1p form so gamma ~ alpha^2/(d c_tilde)
    keeps full accuracy as alpha -> 0.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    ct = kc.c_tilde
    w = 27.0 * (alpha / ct) ** 2 / kc.d
    Theta = math.log1p(w + math.sqrt(w * (w + 2.0))) / 3.0
    gamma = (2.0 * ct / 3.0) * math.sinh(Theta / 2.0) ** 2
    sigma = -(ct / 6.0) * (2.0 + math.cosh(Theta))
    omega = ct / (2.0 * math.sqrt(3.0)) * math.sinh(Theta)
    return UsfSpectrum(gamma=gamma, sigma=sigma, omega=omega, Theta=Theta)


def usf_cubic_residual(beta_tilde: float, alpha: float, kc: KernelConstants) -> float:
    """Relative residual of the USF cubic at beta_tilde."""
    z2c11 = 2.0 * kc.c_tilde / kc.d
    lhs = beta_tilde * (4.0 * beta_tilde + kc.d * z2c11) ** 2
    rhs = 2.0 * z2c11 * alpha ** 2
    return abs(lhs - rhs) / max(abs(rhs), 1e-300)


def usf_profile_matrix(alpha: float, kc: KernelConstants,
                       trace: float) -> tuple[np.ndarray, np.ndarray]:
    """Stationary PSD profile for the real root gamma, plus its eigenvalues.

    B = trace/(d (1 + 2 gamma/ct)) (I - sqrt(d gamma/ct)(E12+E21)
        + 2 (d gamma/ct) E11);  eigenvalues 1 + x +- sqrt(x(1+x)) (x = d
    gamma/ct) around d-2 unit ones, scaled by the same prefactor.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    d = kc.d
    ct = kc.c_tilde
    gamma = usf_spectrum(alpha, kc).gamma
    x = d * gamma / ct
    B = np.eye(d)
    B[0, 1] = B[1, 0] = -math.sqrt(x)
    B[0, 0] += 2.0 * x
    B *= trace / (d * (1.0 + 2.0 * gamma / ct))
    eigs = np.sort(np.linalg.eigvalsh(B))[::-1]
    return B, eigs


def usf_temperature_coeffs(B0: MomentState | np.ndarray, alpha: float,
                           kc: KernelConstants) -> tuple[float, float, float]:
    """Coefficients (c0, r, m) of the closed-form temperature trajectory.

    Solves the defining 3x3 system
        T(0)   = c0 + 2 r
        B12(0) = -(gamma/alpha) c0 - (2 sigma/alpha) r + (2 omega/alpha) m
        B22(0) = ct/(d(2 gamma+ct)) c0
                 + 2 ct (2 sigma+ct)/(d q) r + 4 ct omega/(d q) m,
    q = (2 sigma+ct)^2 + 4 omega^2.  The solution reproduces
    exp(2 beta t) T(t) = c0 e^{(2 gamma - zeta) t}
                       + e^{(2 sigma - zeta) t} (2 r cos 2 omega t
                                                 - 2 m sin 2 omega t).
    """
    if alpha <= 0:
        raise ValueError("temperature coefficients are undefined at alpha = 0")
    B = B0.B if isinstance(B0, MomentState) else np.asarray(B0, dtype=float)
    d = kc.d
    ct = kc.c_tilde
    sp = usf_spectrum(alpha, kc)
    g, s, w = sp.gamma, sp.sigma, sp.omega
    q = (2.0 * s + ct) ** 2 + 4.0 * w ** 2
    A = np.array([
        [1.0, 2.0, 0.0],
        [-g / alpha, -2.0 * s / alpha, 2.0 * w / alpha],
        [ct / (d * (2.0 * g + ct)), 2.0 * ct * (2.0 * s + ct) / (d * q),
         4.0 * ct * w / (d * q)],
    ])
    rhs = np.array([np.trace(B), B[0, 1], B[1, 1]])
    c0, r, m = np.linalg.solve(A, rhs)
    return float(c0), float(r), float(m)


def usf_temperature(t, coeffs: tuple[float, float, float], alpha: float,
                    kc: KernelConstants, beta: float = 0.0):
    """Closed-form T(t) from usf_temperature_coeffs (physical frame beta=0)."""
    c0, r, m = coeffs
    sp = usf_spectrum(alpha, kc)
    t = np.asarray(t, dtype=float)
    osc = 2.0 * r * np.cos(2.0 * sp.omega * t) - 2.0 * m * np.sin(2.0 * sp.omega * t)
    return np.exp(-2.0 * beta * t) * (
        c0 * np.exp((2.0 * sp.gamma - kc.zeta) * t)
        + np.exp((2.0 * sp.sigma - kc.zeta) * t) * osc)


def classify_temperature(alpha: float, kc: KernelConstants) -> TemperatureClassification:
    """Trichotomy of the USF temperature against the critical shear alpha0."""
    if not 0.5 < kc.z < 1.0:
        raise ValueError("classification needs inelastic z in (1/2, 1)")
    sp = usf_spectrum(alpha, kc)
    if abs(alpha - kc.alpha0) <= ALPHA_EQUALITY_TOL * max(1.0, kc.alpha0):
        return TemperatureClassification(
            verdict="converges", rate=kc.zeta - 2.0 * sp.sigma,
            gamma=sp.gamma, alpha0=kc.alpha0)
    if alpha > kc.alpha0:
        return TemperatureClassification(
            verdict="grows", rate=2.0 * sp.gamma - kc.zeta,
            gamma=sp.gamma, alpha0=kc.alpha0)
    return TemperatureClassification(
        verdict="decays", rate=kc.zeta - 2.0 * sp.gamma,
        gamma=sp.gamma, alpha0=kc.alpha0)


def check_R_positive(W: np.ndarray, A: np.ndarray, kc: KernelConstants,
                     beta_tilde: float) -> bool:
    """True iff R(W) = A_bt^T W + W A_bt + ct (W - tr(W) I/d) is PD."""
    W = np.asarray(W, dtype=float)
    A = np.asarray(A, dtype=float)
    d = W.shape[0]
    Ab = A + beta_tilde * np.eye(d)
    R = Ab.T @ W + W @ Ab + kc.c_tilde * (W - np.trace(W) / d * np.eye(d))
    R = 0.5 * (R + R.T)
    return bool(np.linalg.eigvalsh(R).min() > 0.0)


def obstruction_matrix(alpha: float, beta_tilde: float, c_tilde: float) -> np.ndarray:
    """Symmetric 4x4 matrix S with W^T S W = C^2 - C1^2 - C2^2 on d=2 USF.

    C, C1, C2 are the mean, cos(2 theta) and sin(2 theta) coefficients of
    x^T R(W) x on the unit circle; min_{|x|=1} x^T R x > 0 iff C > 0 and
    W^T S W > 0.  S = c c^T - c1 c1^T - c2 c2^T has rank <= 3, so
    det(-S) = 0 identically.
    """
    half = beta_tilde + c_tilde / 2.0
    c = np.array([beta_tilde, alpha / 2.0, alpha / 2.0, beta_tilde])
    c1 = np.array([half, -alpha / 2.0, -alpha / 2.0, -half])
    c2 = np.array([alpha, half, half, 0.0])
    return np.outer(c, c) - np.outer(c1, c1) - np.outer(c2, c2)


def check_2d_usf_obstruction(alpha: float, kc: KernelConstants) -> ObstructionReport:
    """Enumerate the 15 principal minors of -S at beta_tilde = gamma (d=2)."""
    if kc.d != 2:
        raise ValueError("the obstruction matrix is specific to d = 2")
    bt = usf_spectrum(alpha, kc).gamma
    S = obstruction_matrix(alpha, bt, kc.c_tilde)
    minus_S = -S
    minors = {}
    for k in range(1, 5):
        for idx in combinations(range(4), k):
            sub = minus_S[np.ix_(idx, idx)]
            minors[tuple(i + 1 for i in idx)] = float(np.linalg.det(sub))
    det = minors[(1, 2, 3, 4)]
    psd = all(v >= -1e-12 for v in minors.values())
    return ObstructionReport(S=S, minors=minors, det_minus_S=det, psd=psd,
                             beta_tilde=bt)
