"""Reference transmit schemes the rate-splitting solver is compared against."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .config import SystemConfig
from .quadforms import build_quadforms_limited, build_quadforms_perfect
from .rates import PrecoderStack
from .solver import SolveTrace, gpi_solve_vector

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SdmaPrecoderStack:
    """Stacked private-only precoder [f_1; ...; f_K], no common stream."""

    entries: np.ndarray
    n_antennas: int

    def __post_init__(self) -> None:
        vec = np.asarray(self.entries, dtype=complex).ravel()
        if vec.size % self.n_antennas != 0 or vec.size < self.n_antennas:
            raise ValueError("stack length must be a positive multiple of n_antennas")
        object.__setattr__(self, "entries", vec)

    @property
    def n_blocks(self) -> int:
        return self.entries.size // self.n_antennas

    @property
    def blocks(self) -> np.ndarray:
        return self.entries.reshape(self.n_blocks, self.n_antennas)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def normalized(self) -> "SdmaPrecoderStack":
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalize a zero stack")
        return SdmaPrecoderStack(self.entries / n, self.n_antennas)

    def to_rsma(self) -> PrecoderStack:
        """Pad a zero common block so the stack can be scored like RSMA."""
        padded = np.concatenate([np.zeros(self.n_antennas, dtype=complex), self.entries])
        return PrecoderStack(padded, self.n_antennas)


def mrt_init(
    estimates: np.ndarray,
    rng: np.random.Generator | None = None,
) -> PrecoderStack:
    """Matched-filter initializer: f_k = estimate_k, f_c = their average.

    All-zero estimates are degenerate; a uniformly random unit stack is
    returned instead and a warning logged.
    """
    est = np.asarray(estimates, dtype=complex)
    if est.ndim != 2:
        raise ValueError("estimates must be a (K, N) array")
    k, n = est.shape
    blocks = np.concatenate([est.mean(axis=0, keepdims=True), est], axis=0)
    total = np.linalg.norm(blocks)
    if total == 0:
        log.warning("mrt_init got all-zero estimates; falling back to a random stack")
        rng = rng if rng is not None else np.random.default_rng(0)
        raw = rng.standard_normal((k + 1) * n) + 1j * rng.standard_normal((k + 1) * n)
        return PrecoderStack(raw / np.linalg.norm(raw), n)
    return PrecoderStack(blocks.ravel() / total, n)


def mrt_init_sdma(
    estimates: np.ndarray,
    rng: np.random.Generator | None = None,
) -> SdmaPrecoderStack:
    """Private-only matched filter, unit total power."""
    est = np.asarray(estimates, dtype=complex)
    if est.ndim != 2:
        raise ValueError("estimates must be a (K, N) array")
    k, n = est.shape
    total = np.linalg.norm(est)
    if total == 0:
        log.warning("mrt_init_sdma got all-zero estimates; falling back to a random stack")
        rng = rng if rng is not None else np.random.default_rng(0)
        raw = rng.standard_normal(k * n) + 1j * rng.standard_normal(k * n)
        return SdmaPrecoderStack(raw / np.linalg.norm(raw), n)
    return SdmaPrecoderStack(est.ravel() / total, n)


def rzf_precoder(
    estimates: np.ndarray,
    config: SystemConfig,
    regularization: float | None = None,
) -> SdmaPrecoderStack:
    """Regularized zero-forcing on the estimated channels.

    Directions are the columns of (H H^H + reg I)^-1 H with H = estimates^T
    and reg = K * sigma^2 / P by default; reg = 0 gives plain zero-forcing
    via the pseudoinverse.  Columns carry equal power and the stack is
    normalized to unit total power.
    """
    est = np.asarray(estimates, dtype=complex)
    if est.ndim != 2:
        raise ValueError("estimates must be a (K, N) array")
    k, n = est.shape
    if regularization is None:
        regularization = k * config.noise_user_ratio
    if regularization < 0:
        raise ValueError("regularization must be >= 0")
    h = est.T  # (N, K), columns are channels
    if regularization > 0:
        w = np.linalg.solve(h @ h.conj().T + regularization * np.eye(n), h)
    else:
        w = np.linalg.pinv(h.conj().T)
    col_norms = np.linalg.norm(w, axis=0)
    if np.any(col_norms == 0):
        raise ValueError("zero precoding column; estimates are degenerate")
    w = w / col_norms / math.sqrt(k)
    return SdmaPrecoderStack(w.T.ravel(), n)


def gpi_sdma_solve(
    realization: ChannelRealization,
    config: SystemConfig,
    csit_mode: str = "perfect",
    rng: np.random.Generator | None = None,
) -> tuple[SdmaPrecoderStack, SolveTrace]:
    """Power iteration on the private-only objective (no common stream).

    Identical machinery to the rate-splitting solver on a stack one block
    shorter: no common-rate terms in the objective or the operators.
    """
    if csit_mode not in ("perfect", "limited"):
        raise ValueError("csit_mode must be 'perfect' or 'limited'")
    if csit_mode == "limited":
        quadforms = build_quadforms_limited(realization, config, common_stream=False)
        knowledge = realization.user_estimates
    else:
        quadforms = build_quadforms_perfect(realization, config, common_stream=False)
        knowledge = realization.user_channels
    start = mrt_init_sdma(knowledge, rng)
    vec, trace = gpi_solve_vector(quadforms, start.entries, config)
    return SdmaPrecoderStack(vec, config.n_antennas), trace
