"""Block-diagonal quadratic-form encoding of every rate expression.

With a unit-norm stacked precoder f, each spectral efficiency becomes
log2(f^H A f / f^H B f) for a pair (A, B) of block-diagonal Hermitian
matrices (one N x N block per stream).  The blocks are never assembled into
the full N*(K+1) x N*(K+1) matrix; everything operates on the (n_blocks, N, N)
stacks, which is what makes the solver's linear algebra cost scale with the
number of blocks rather than its cube.

Two variants exist:
  - "perfect": true channels, one pair per rate; the secrecy leakage is the
    max over the wiretap set (smoothed with log-sum-exp).
  - "limited": estimated channels with known error covariance; rate pairs
    encode Jensen lower bounds, and leakage pairs encode the terms of a
    full-collusion upper bound log2(1 + sum of ratios), which needs no max.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .channel import ChannelRealization
from .config import SystemConfig
from .rates import PrecoderStack, lse_max, lse_min


@dataclass(frozen=True)
class QuadFormPair:
    """Numerator/denominator blocks of one Rayleigh quotient."""

    numerator: np.ndarray     # (n_blocks, N, N)
    denominator: np.ndarray   # (n_blocks, N, N)

    def quad_num(self, f_blocks: np.ndarray) -> float:
        return _quad(self.numerator, f_blocks)

    def quad_den(self, f_blocks: np.ndarray) -> float:
        return _quad(self.denominator, f_blocks)

    def ratio(self, f_blocks: np.ndarray) -> float:
        return self.quad_num(f_blocks) / self.quad_den(f_blocks)


def _quad(blocks: np.ndarray, f_blocks: np.ndarray) -> float:
    return float(np.einsum("bi,bij,bj->", f_blocks.conj(), blocks, f_blocks).real)


@dataclass(frozen=True)
class QuadFormSet:
    """All quadratic-form pairs for one scenario.

    ``common_pairs`` is empty when the set is built without a common stream
    (the SDMA baseline); then the stack holds K blocks instead of K+1.
    ``eve_leak_pairs[s][e]`` and ``user_leak_pairs[s][j]`` cover secret user
    s's wiretap set; the user lists follow ``wiretap_users(s)`` order.
    """

    common_pairs: tuple[QuadFormPair, ...]
    private_pairs: tuple[QuadFormPair, ...]
    eve_leak_pairs: tuple[tuple[QuadFormPair, ...], ...]
    user_leak_pairs: tuple[tuple[QuadFormPair, ...], ...]
    variant: str
    n_antennas: int
    n_secret: int

    def __post_init__(self) -> None:
        if self.variant not in ("perfect", "limited"):
            raise ValueError("variant must be 'perfect' or 'limited'")

    @property
    def has_common(self) -> bool:
        return bool(self.common_pairs)

    @property
    def n_users(self) -> int:
        return len(self.private_pairs)

    @property
    def n_eves(self) -> int:
        return len(self.eve_leak_pairs[0]) if self.eve_leak_pairs else 0

    @property
    def n_blocks(self) -> int:
        return self.n_users + (1 if self.has_common else 0)

    @property
    def stack_dim(self) -> int:
        return self.n_blocks * self.n_antennas

    def wiretap_users(self, secret: int) -> list[int]:
        return [u for u in range(self.n_users) if u != secret]

    def f_blocks(self, precoder: PrecoderStack | np.ndarray) -> np.ndarray:
        vec = precoder.entries if isinstance(precoder, PrecoderStack) else np.asarray(precoder)
        if vec.size != self.stack_dim:
            raise ValueError(
                f"stack length {vec.size} does not match {self.stack_dim}"
            )
        return vec.reshape(self.n_blocks, self.n_antennas)

    # Stacked per-family views used by the solver's einsum paths.
    @cached_property
    def _stacks(self) -> dict[str, np.ndarray]:
        out = {}
        if self.common_pairs:
            out["common_num"] = np.stack([p.numerator for p in self.common_pairs])
            out["common_den"] = np.stack([p.denominator for p in self.common_pairs])
        out["private_num"] = np.stack([p.numerator for p in self.private_pairs])
        out["private_den"] = np.stack([p.denominator for p in self.private_pairs])
        if self.eve_leak_pairs and self.eve_leak_pairs[0]:
            out["eve_num"] = np.stack([[p.numerator for p in row] for row in self.eve_leak_pairs])
            out["eve_den"] = np.stack([[p.denominator for p in row] for row in self.eve_leak_pairs])
        if self.user_leak_pairs and self.user_leak_pairs[0]:
            out["user_num"] = np.stack([[p.numerator for p in row] for row in self.user_leak_pairs])
            out["user_den"] = np.stack([[p.denominator for p in row] for row in self.user_leak_pairs])
        return out

    def evaluate(self, f_blocks: np.ndarray) -> "QuadValues":
        """All quadratic forms at one point, grouped by rate family."""
        stacks = self._stacks

        def ev(key):
            if key not in stacks:
                return None
            return np.einsum("...bij,bi,bj->...", stacks[key], f_blocks.conj(), f_blocks).real

        return QuadValues(
            common_num=ev("common_num"),
            common_den=ev("common_den"),
            private_num=ev("private_num"),
            private_den=ev("private_den"),
            eve_num=ev("eve_num"),
            eve_den=ev("eve_den"),
            user_num=ev("user_num"),
            user_den=ev("user_den"),
            variant=self.variant,
            n_secret=self.n_secret,
        )


@dataclass(frozen=True)
class QuadValues:
    """Numerator/denominator quadratic forms per rate family at one iterate."""

    common_num: np.ndarray | None
    common_den: np.ndarray | None
    private_num: np.ndarray
    private_den: np.ndarray
    eve_num: np.ndarray | None      # (S, E)
    eve_den: np.ndarray | None
    user_num: np.ndarray | None     # (S, K-1)
    user_den: np.ndarray | None
    variant: str
    n_secret: int

    def common_rates(self) -> np.ndarray | None:
        if self.common_num is None:
            return None
        return np.log2(self.common_num / self.common_den)

    def private_rates(self) -> np.ndarray:
        return np.log2(self.private_num / self.private_den)

    def leak_ratios(self, secret: int) -> np.ndarray:
        """Wiretap-set ratios for one secret user, eavesdroppers first."""
        parts = []
        if self.eve_num is not None:
            parts.append(self.eve_num[secret] / self.eve_den[secret])
        if self.user_num is not None:
            parts.append(self.user_num[secret] / self.user_den[secret])
        if not parts:
            return np.zeros(0)
        return np.concatenate(parts)

    def smoothed_leakage(self, secret: int, alpha: float) -> float:
        """Leakage term for one secret user, in bits.

        Perfect variant: log-sum-exp smoothed max over the wiretap set.
        Limited variant: the collusion bound log2(1 + sum of ratios), which
        is already smooth.  Empty wiretap set contributes zero.
        """
        ratios = self.leak_ratios(secret)
        if ratios.size == 0:
            return 0.0
        if self.variant == "perfect":
            return lse_max(np.log2(ratios), alpha)
        return math.log2(1.0 + float(ratios.sum()))


def smoothed_objective(
    quadforms: QuadFormSet,
    precoder: PrecoderStack | np.ndarray,
    config: SystemConfig,
) -> float:
    """Log-sum-exp smoothed sum secrecy SE evaluated through the quad forms.

    The smoothed min over common rates replaces the hard min, each secret
    user's leakage enters through ``smoothed_leakage``, and the positive-part
    clamp on secrecy rates is relaxed.  Scale-invariant in the precoder.
    """
    fb = quadforms.f_blocks(precoder)
    vals = quadforms.evaluate(fb)
    alpha = config.smoothing
    private = vals.private_rates()
    total = 0.0
    if quadforms.has_common:
        total += lse_min(vals.common_rates(), alpha)
    for s in range(quadforms.n_secret):
        total += private[s] - vals.smoothed_leakage(s, alpha)
    total += float(private[quadforms.n_secret:].sum())
    return float(total)


def _ridge_blocks(n_blocks: int, n: int, ridge: float) -> np.ndarray:
    out = np.zeros((n_blocks, n, n), dtype=complex)
    idx = np.arange(n)
    out[:, idx, idx] = ridge
    return out


def _outer(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


def build_quadforms_perfect(
    realization: ChannelRealization,
    config: SystemConfig,
    common_stream: bool = True,
) -> QuadFormSet:
    """Pairs over true channels; rates are exact SINR-plus-one quotients."""
    return _build(realization, config, common_stream, limited=False)


def build_quadforms_limited(
    realization: ChannelRealization,
    config: SystemConfig,
    common_stream: bool = True,
) -> QuadFormSet:
    """Pairs over the transmitter's knowledge: channel estimates plus error
    covariances for rate lower bounds, wiretapper covariances for the
    collusion leakage upper bound.  True channels are not read."""
    return _build(realization, config, common_stream, limited=True)


def _build(
    realization: ChannelRealization,
    config: SystemConfig,
    common_stream: bool,
    limited: bool,
) -> QuadFormSet:
    n = config.n_antennas
    k = config.n_users
    s_cnt = config.n_secret
    e_cnt = config.n_eves
    if realization.n_users != k or realization.n_antennas != n:
        raise ValueError("realization/config dimension mismatch")
    if realization.n_eves != e_cnt:
        raise ValueError("realization/config eavesdropper mismatch")

    off = 1 if common_stream else 0
    nb = k + off
    ridge_u = config.noise_user_ratio
    ridge_e = config.noise_eve_ratio

    if limited:
        signal = [_outer(realization.user_estimates[i]) for i in range(k)]
        extra = [np.asarray(realization.error_covs[i], dtype=complex) for i in range(k)]
    else:
        signal = [_outer(realization.user_channels[i]) for i in range(k)]
        extra = [None] * k

    common_pairs = []
    if common_stream:
        for i in range(k):
            a = _ridge_blocks(nb, n, ridge_u)
            a += signal[i]
            if extra[i] is not None:
                a += extra[i]
            b = a.copy()
            b[0] -= signal[i]
            common_pairs.append(QuadFormPair(a, b))

    private_pairs = []
    for i in range(k):
        a = _ridge_blocks(nb, n, ridge_u)
        a[off:] += signal[i]
        if extra[i] is not None:
            a[off:] += extra[i]
        b = a.copy()
        b[off + i] -= signal[i]
        private_pairs.append(QuadFormPair(a, b))

    eve_rows = []
    user_rows = []
    for s in range(s_cnt):
        eve_row = []
        for e in range(e_cnt):
            if limited:
                cov = realization.eve_covs[e].entries
                a = np.zeros((nb, n, n), dtype=complex)
                a[off + s] = cov
                b = _ridge_blocks(nb, n, ridge_e)
                b += cov
                b[off + s] -= cov
            else:
                gg = _outer(realization.eve_channels[e])
                a = _ridge_blocks(nb, n, ridge_e)
                a += gg
                b = a.copy()
                b[off + s] -= gg
            eve_row.append(QuadFormPair(a, b))
        eve_rows.append(tuple(eve_row))

        user_row = []
        for u in range(k):
            if u == s:
                continue
            if limited:
                cov = realization.user_covs[u].entries
                a = np.zeros((nb, n, n), dtype=complex)
                a[off + s] = cov
                b = _ridge_blocks(nb, n, ridge_u)
                b[off:] += cov
                b[off + u] -= cov
                b[off + s] -= cov
            else:
                hh = _outer(realization.user_channels[u])
                a = _ridge_blocks(nb, n, ridge_u)
                a[off:] += hh
                a[off + u] -= hh
                b = a.copy()
                b[off + s] -= hh
            user_row.append(QuadFormPair(a, b))
        user_rows.append(tuple(user_row))

    return QuadFormSet(
        common_pairs=tuple(common_pairs),
        private_pairs=tuple(private_pairs),
        eve_leak_pairs=tuple(eve_rows),
        user_leak_pairs=tuple(user_rows),
        variant="limited" if limited else "perfect",
        n_antennas=n,
        n_secret=s_cnt,
    )
