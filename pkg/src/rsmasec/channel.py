"""Spatially correlated channel model.

Each terminal sees the array through a one-ring scatterer geometry: the
covariance of its channel is an average of steering outer products over a
narrow angular interval around the terminal's azimuth.  Channels are drawn
through the Karhunen-Loeve factorization of that covariance, and limited
CSIT is modeled as a quantized estimate whose error covariance is known in
closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .config import SystemConfig

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ArrayGeometry:
    """Antenna positions in wavelengths (rows of ``positions``, 2-D plane)."""

    n_antennas: int
    positions: np.ndarray

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=float)
        if pos.shape != (self.n_antennas, 2):
            raise ValueError("positions must have shape (n_antennas, 2)")
        object.__setattr__(self, "positions", pos)

    @classmethod
    def ula(cls, n_antennas: int, spacing: float = 0.5) -> "ArrayGeometry":
        """Uniform linear array along the x-axis, spacing in wavelengths."""
        pos = np.zeros((n_antennas, 2))
        pos[:, 0] = spacing * np.arange(n_antennas)
        return cls(n_antennas, pos)


@dataclass(frozen=True)
class HermitianCovariance:
    """Hermitian PSD matrix wrapper; construction validates both properties."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.entries, dtype=complex)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError("covariance must be square")
        if np.abs(r - r.conj().T).max() > 1e-12 * max(1.0, np.abs(r).max()):
            raise ValueError("covariance must be Hermitian")
        w = np.linalg.eigvalsh(r)
        if w[0] < -1e-10 * max(w[-1], 1e-300):
            raise ValueError("covariance must be positive semidefinite")
        object.__setattr__(self, "entries", r)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class KlDecomposition:
    """Retained eigenpairs of a covariance: R ~= U diag(eigvals) U^H."""

    eigvecs: np.ndarray   # (dim, rank), orthonormal columns
    eigvals: np.ndarray   # (rank,), positive, descending

    def __post_init__(self) -> None:
        u = np.asarray(self.eigvecs, dtype=complex)
        lam = np.asarray(self.eigvals, dtype=float)
        if u.ndim != 2 or lam.ndim != 1 or u.shape[1] != lam.shape[0]:
            raise ValueError("inconsistent eigvecs/eigvals shapes")
        if lam.size and (np.any(lam <= 0) or np.any(np.diff(lam) > 0)):
            raise ValueError("eigvals must be positive and descending")
        object.__setattr__(self, "eigvecs", u)
        object.__setattr__(self, "eigvals", lam)

    @property
    def dim(self) -> int:
        return self.eigvecs.shape[0]

    @property
    def rank(self) -> int:
        return self.eigvals.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.eigvecs * self.eigvals) @ self.eigvecs.conj().T


@lru_cache(maxsize=8)
def _gauss_nodes(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n_nodes)


def one_ring_covariance(
    aoa: float,
    spread: float,
    geometry: ArrayGeometry,
    n_nodes: int = 512,
) -> HermitianCovariance:
    """One-ring covariance for a terminal at azimuth ``aoa``.

    [R]_{a,b} = (1/2*spread) * integral over x in [aoa-spread, aoa+spread]
    of exp(-j*2*pi*(cos x, sin x) . (r_a - r_b)), positions r in wavelengths.
    Evaluated with fixed-node Gauss-Legendre quadrature (deterministic,
    sub-1e-9 accurate for these smooth oscillatory integrands).
    """
    if spread <= 0:
        raise ValueError("angular spread must be positive")
    if n_nodes < 2:
        raise ValueError("n_nodes must be >= 2")
    x, w = _gauss_nodes(n_nodes)
    ang = aoa + spread * x
    direction = np.stack([np.cos(ang), np.sin(ang)])          # (2, nodes)
    phase = TWO_PI * (geometry.positions @ direction)          # (n, nodes)
    steer = np.exp(-1j * phase)
    # Interval substitution cancels the 1/(2*spread) prefactor down to 1/2.
    r = 0.5 * (steer * w) @ steer.conj().T
    r = 0.5 * (r + r.conj().T)
    return HermitianCovariance(r)


def kl_decompose(cov: HermitianCovariance, trunc_rel: float = 1e-10) -> KlDecomposition:
    """Eigendecompose and keep modes whose eigenvalue exceeds trunc_rel * max."""
    w, u = np.linalg.eigh(cov.entries)
    w = w[::-1]
    u = u[:, ::-1]
    if w.size == 0 or w[0] <= 0:
        return KlDecomposition(u[:, :0], w[:0])
    keep = w > trunc_rel * w[0]
    return KlDecomposition(u[:, keep], w[keep])


def sample_channel(kl: KlDecomposition, rng: np.random.Generator) -> np.ndarray:
    """h = U diag(sqrt(eigvals)) zeta with zeta ~ CN(0, I)."""
    zeta = _cn_vector(kl.rank, rng)
    return kl.eigvecs @ (np.sqrt(kl.eigvals) * zeta)


def fdd_estimate(
    h: np.ndarray,
    kl: KlDecomposition,
    kappa: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Quantized estimate of ``h`` plus its error.

    estimate = sqrt(1-kappa^2)*h + kappa*U diag(sqrt(eigvals)) v, v ~ CN(0, I);
    returns (estimate, h - estimate).  The perturbation v is drawn even at
    kappa = 0 so that seed-matched runs across kappa values share channel
    draws.
    """
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("kappa must be in [0, 1]")
    v = _cn_vector(kl.rank, rng)
    estimate = math.sqrt(1.0 - kappa**2) * h + kappa * (kl.eigvecs @ (np.sqrt(kl.eigvals) * v))
    return estimate, h - estimate


def error_covariance(kl: KlDecomposition, kappa: float) -> np.ndarray:
    """E[(h - estimate)(h - estimate)^H] = (2 - 2*sqrt(1-kappa^2)) U diag(eigvals) U^H."""
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("kappa must be in [0, 1]")
    scale = 2.0 - 2.0 * math.sqrt(1.0 - kappa**2)
    return scale * kl.reconstruct()


def _cn_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)


@dataclass(frozen=True)
class ScenarioLayout:
    """Everything that positions terminals and shapes their statistics.

    ``user_mode`` selects how the K user azimuths are laid out:
      - "sector": equispaced across a sector of total width ``user_sector``
        centered at ``user_center`` (adjacent spacing = width / (K-1));
      - "spacing": fixed pairwise spacing ``user_spacing`` centered at
        ``user_center``.
    Eavesdropper azimuths are drawn uniformly from a sector of width
    ``eve_sector`` around ``eve_center`` (default: the full circle).
    """

    user_mode: str = "sector"
    user_sector: float = math.pi / 6
    user_spacing: float = math.pi / 6
    user_center: float = 0.0
    eve_center: float = 0.0
    eve_sector: float = TWO_PI
    angular_spread: float = math.pi / 6
    antenna_spacing: float = 0.5
    kappa: float = 0.4
    trunc_rel: float = 1e-10
    quad_nodes: int = 512

    def __post_init__(self) -> None:
        if self.user_mode not in ("sector", "spacing"):
            raise ValueError("user_mode must be 'sector' or 'spacing'")
        if self.angular_spread <= 0:
            raise ValueError("angular_spread must be positive")
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError("kappa must be in [0, 1]")
        if self.antenna_spacing <= 0:
            raise ValueError("antenna_spacing must be positive")

    def user_aoas(self, n_users: int) -> np.ndarray:
        if n_users == 1:
            return np.asarray([self.user_center % TWO_PI])
        if self.user_mode == "sector":
            offsets = np.linspace(-self.user_sector / 2, self.user_sector / 2, n_users)
        else:
            offsets = (np.arange(n_users) - (n_users - 1) / 2) * self.user_spacing
        return (self.user_center + offsets) % TWO_PI

    def user_spacing_value(self, n_users: int) -> float:
        if n_users == 1:
            return 0.0
        if self.user_mode == "sector":
            return self.user_sector / (n_users - 1)
        return self.user_spacing


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of all channels plus the statistics the transmitter knows.

    Under limited CSIT the transmitter sees ``user_estimates``, ``error_covs``
    and the covariances; ``user_channels``/``eve_channels`` are ground truth
    used only for scoring.  ``quant_errors`` keeps the q_k perturbation term
    of each estimate for statistical tests.
    """

    user_channels: np.ndarray        # (K, N)
    eve_channels: np.ndarray         # (E, N)
    user_estimates: np.ndarray       # (K, N)
    quant_errors: np.ndarray         # (K, N)
    error_covs: np.ndarray           # (K, N, N)
    user_covs: tuple[HermitianCovariance, ...]
    eve_covs: tuple[HermitianCovariance, ...]
    kappa: float
    user_aoas: np.ndarray = field(default=None)
    eve_aoas: np.ndarray = field(default=None)
    user_spacing: float = 0.0

    @property
    def n_users(self) -> int:
        return self.user_channels.shape[0]

    @property
    def n_eves(self) -> int:
        return self.eve_channels.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.user_channels.shape[1]


def draw_scenario(
    config: SystemConfig,
    layout: ScenarioLayout,
    rng: np.random.Generator,
) -> ChannelRealization:
    """Place terminals, build their covariances, and draw one channel set."""
    n = config.n_antennas
    k = config.n_users
    e = config.n_eves
    geometry = ArrayGeometry.ula(n, layout.antenna_spacing)

    user_aoas = layout.user_aoas(k)
    eve_aoas = (
        layout.eve_center + layout.eve_sector * (rng.uniform(size=e) - 0.5)
    ) % TWO_PI

    err_scale = 2.0 - 2.0 * math.sqrt(1.0 - layout.kappa**2)
    h = np.zeros((k, n), dtype=complex)
    h_est = np.zeros((k, n), dtype=complex)
    q = np.zeros((k, n), dtype=complex)
    phi = np.zeros((k, n, n), dtype=complex)
    user_covs = []
    for i in range(k):
        cov = one_ring_covariance(user_aoas[i], layout.angular_spread, geometry, layout.quad_nodes)
        kl = kl_decompose(cov, layout.trunc_rel)
        h[i] = sample_channel(kl, rng)
        h_est[i], _ = fdd_estimate(h[i], kl, layout.kappa, rng)
        q[i] = h_est[i] - math.sqrt(1.0 - layout.kappa**2) * h[i]
        phi[i] = err_scale * cov.entries
        user_covs.append(cov)

    g = np.zeros((e, n), dtype=complex)
    eve_covs = []
    for i in range(e):
        cov = one_ring_covariance(eve_aoas[i], layout.angular_spread, geometry, layout.quad_nodes)
        g[i] = sample_channel(kl_decompose(cov, layout.trunc_rel), rng)
        eve_covs.append(cov)

    return ChannelRealization(
        user_channels=h,
        eve_channels=g,
        user_estimates=h_est,
        quant_errors=q,
        error_covs=phi,
        user_covs=tuple(user_covs),
        eve_covs=tuple(eve_covs),
        kappa=layout.kappa,
        user_aoas=user_aoas,
        eve_aoas=eve_aoas,
        user_spacing=layout.user_spacing_value(k),
    )
