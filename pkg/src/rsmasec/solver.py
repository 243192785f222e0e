"""Generalized power iteration for the smoothed sum secrecy objective.

A first-order stationary point of the smoothed objective satisfies a
nonlinear eigenvector equation B(f)^-1 A(f) f = lam(f) f, where A and B are
block-diagonal positive-definite operators rebuilt from the current iterate:
every Rayleigh-quotient term contributes its numerator matrix (scaled by one
over its own quadratic form) to the operator on the side the term helps, and
its denominator matrix to the other side.  Leakage terms enter with the roles
swapped because they are subtracted.  The iteration repeatedly applies
B^-1 A and renormalizes; the arbitrary positive prefactors of A and B are
fixed to one, which leaves the iterates unchanged.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lu_factor, lu_solve
from scipy.special import softmax

from .config import SystemConfig
from .quadforms import QuadFormSet, QuadValues
from .rates import LN2, PrecoderStack, lse_min


class NumericError(RuntimeError):
    """A weight, quadratic form, or solve came out nonfinite or nonpositive."""


@dataclass(frozen=True)
class WeightSet:
    """Raw term weights of the stationarity operator at one iterate.

    Perfect variant: common weights are ratio^(-1/(alpha*ln2)) and leakage
    weights ratio^(+1/(alpha*ln2)) (the log-sum-exp exponentials in disguise).
    Limited variant: common weights as above on the lower-bound ratios,
    leakage weights are the raw collusion-term ratios.
    """

    common: np.ndarray    # (K,) or (0,) when no common stream
    eve: np.ndarray       # (S, E)
    user: np.ndarray      # (S, K-1)
    variant: str


@dataclass(frozen=True)
class KktOperator:
    """Assembled block-diagonal operator pair plus the lambda diagnostic."""

    a_blocks: np.ndarray  # (n_blocks, N, N)
    b_blocks: np.ndarray
    lam: float


@dataclass(frozen=True)
class SolveTrace:
    """Per-iteration records: (iteration, step_norm, objective, lam).

    Row 0 holds the initializer (step_norm is NaN there).  ``converged``
    reports whether the step-norm test fired before ``t_max``.
    """

    iterates: tuple[tuple[int, float, float, float], ...]
    converged: bool
    iterations_used: int


def compute_weights(
    quadforms: QuadFormSet,
    precoder: PrecoderStack | np.ndarray,
    config: SystemConfig,
) -> WeightSet:
    fb = quadforms.f_blocks(precoder)
    vals = quadforms.evaluate(fb)
    expo = 1.0 / (config.smoothing * LN2)

    if vals.common_num is not None:
        common = np.power(vals.common_num / vals.common_den, -expo)
    else:
        common = np.zeros(0)

    s_cnt = quadforms.n_secret
    eve = np.zeros((s_cnt, 0))
    user = np.zeros((s_cnt, 0))
    if vals.eve_num is not None:
        eve = vals.eve_num / vals.eve_den
        if quadforms.variant == "perfect":
            eve = np.power(eve, expo)
    if vals.user_num is not None:
        user = vals.user_num / vals.user_den
        if quadforms.variant == "perfect":
            user = np.power(user, expo)

    for name, arr in (("common", common), ("eve", eve), ("user", user)):
        bad = ~(np.isfinite(arr) & (arr > 0))
        if bad.any():
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            raise NumericError(f"nonpositive or nonfinite {name} weight at index {idx}")
    return WeightSet(common=common, eve=eve, user=user, variant=quadforms.variant)


def _lambda_from_values(vals: QuadValues, has_common: bool, alpha: float) -> float:
    """Objective-linked eigenvalue diagnostic.

    exp(smoothed common + sum normal rates) * (exp(sum secret private rates)
    - exp(sum smoothed leakages)); negative when leakage exceeds the secret
    rates at the current point.  Recorded only, never fed back.
    """
    private = vals.private_rates()
    s_cnt = vals.n_secret
    base = float(private[s_cnt:].sum())
    if has_common:
        base += lse_min(vals.common_rates(), alpha)
    leak = sum(vals.smoothed_leakage(s, alpha) for s in range(s_cnt))
    secret = float(private[:s_cnt].sum())
    with np.errstate(over="ignore"):
        return float(np.exp(base) * (np.exp(secret) - np.exp(leak)))


def assemble_kkt(
    quadforms: QuadFormSet,
    precoder: PrecoderStack | np.ndarray,
    config: SystemConfig,
    values: QuadValues | None = None,
) -> KktOperator:
    """Build the operator pair of the stationarity condition at one iterate.

    Normalized weights are computed in log space (softmax over rates divided
    by alpha), which is algebraically identical to the raw-weight form but
    immune to exponential overflow.
    """
    fb = quadforms.f_blocks(precoder)
    vals = values if values is not None else quadforms.evaluate(fb)
    stacks = quadforms._stacks
    alpha = config.smoothing
    nb, n = quadforms.n_blocks, quadforms.n_antennas

    a_op = np.zeros((nb, n, n), dtype=complex)
    b_op = np.zeros((nb, n, n), dtype=complex)

    if quadforms.has_common:
        w_c = softmax(-vals.common_rates() / alpha)
        a_op += np.einsum("k,kbij->bij", w_c / vals.common_num, stacks["common_num"])
        b_op += np.einsum("k,kbij->bij", w_c / vals.common_den, stacks["common_den"])

    a_op += np.einsum("k,kbij->bij", 1.0 / vals.private_num, stacks["private_num"])
    b_op += np.einsum("k,kbij->bij", 1.0 / vals.private_den, stacks["private_den"])

    s_cnt = quadforms.n_secret
    have_eve = vals.eve_num is not None
    have_user = vals.user_num is not None
    if s_cnt and (have_eve or have_user):
        if quadforms.variant == "perfect":
            # Pooled softmax over each wiretap set; split back per family.
            parts = []
            if have_eve:
                parts.append(np.log2(vals.eve_num / vals.eve_den))
            if have_user:
                parts.append(np.log2(vals.user_num / vals.user_den))
            pooled = softmax(np.concatenate(parts, axis=1) / alpha, axis=1)
            e_cnt = vals.eve_num.shape[1] if have_eve else 0
            w_eve, w_user = pooled[:, :e_cnt], pooled[:, e_cnt:]
            if have_eve:
                a_op += np.einsum("se,sebij->bij", w_eve / vals.eve_den, stacks["eve_den"])
                b_op += np.einsum("se,sebij->bij", w_eve / vals.eve_num, stacks["eve_num"])
            if have_user:
                a_op += np.einsum("su,subij->bij", w_user / vals.user_den, stacks["user_den"])
                b_op += np.einsum("su,subij->bij", w_user / vals.user_num, stacks["user_num"])
        else:
            # Collusion bound: weights are the raw ratios and the normalizer
            # carries the +1 from log2(1 + sum).  On the B side the ratio's
            # numerator cancels, so the coefficient stays finite even when a
            # collusion term's numerator quadratic form vanishes.
            norm = np.ones(s_cnt)
            if have_eve:
                norm += (vals.eve_num / vals.eve_den).sum(axis=1)
            if have_user:
                norm += (vals.user_num / vals.user_den).sum(axis=1)
            if have_eve:
                coef_a = vals.eve_num / (vals.eve_den**2 * norm[:, None])
                coef_b = 1.0 / (vals.eve_den * norm[:, None])
                a_op += np.einsum("se,sebij->bij", coef_a, stacks["eve_den"])
                b_op += np.einsum("se,sebij->bij", coef_b, stacks["eve_num"])
            if have_user:
                coef_a = vals.user_num / (vals.user_den**2 * norm[:, None])
                coef_b = 1.0 / (vals.user_den * norm[:, None])
                a_op += np.einsum("su,subij->bij", coef_a, stacks["user_den"])
                b_op += np.einsum("su,subij->bij", coef_b, stacks["user_num"])

    if not (np.isfinite(a_op).all() and np.isfinite(b_op).all()):
        raise NumericError("operator assembly produced nonfinite blocks")
    lam = _lambda_from_values(vals, quadforms.has_common, alpha)
    return KktOperator(a_blocks=a_op, b_blocks=b_op, lam=lam)


def block_solve(b_blocks: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve the block-diagonal system one Hermitian block at a time.

    Cholesky per block, falling back to pivoted LU for a block that is not
    numerically positive definite.  Cost is n_blocks * N^3 instead of the
    (n_blocks * N)^3 of a dense solve.
    """
    nb, n, _ = b_blocks.shape
    r = np.asarray(rhs, dtype=complex).reshape(nb, n)
    out = np.empty_like(r)
    for i in range(nb):
        try:
            out[i] = cho_solve(cho_factor(b_blocks[i], check_finite=False), r[i], check_finite=False)
        except np.linalg.LinAlgError:
            out[i] = lu_solve(lu_factor(b_blocks[i], check_finite=False), r[i], check_finite=False)
        if not np.isfinite(out[i]).all():
            raise NumericError(f"solve produced nonfinite values in block {i}")
    return out.ravel()


def _matvec(blocks: np.ndarray, vec: np.ndarray) -> np.ndarray:
    nb, n, _ = blocks.shape
    return (blocks @ vec.reshape(nb, n)[:, :, None])[:, :, 0].ravel()


def _align_phase(vec: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Rotate out the global phase so vec is as close to ref as possible."""
    inner = np.vdot(ref, vec)
    mag = abs(inner)
    if mag < 1e-300:
        return vec
    return vec * (inner.conjugate() / mag)


def _objective_from_values(vals: QuadValues, quadforms: QuadFormSet, alpha: float) -> float:
    private = vals.private_rates()
    total = 0.0
    if quadforms.has_common:
        total += lse_min(vals.common_rates(), alpha)
    for s in range(quadforms.n_secret):
        total += private[s] - vals.smoothed_leakage(s, alpha)
    total += float(private[quadforms.n_secret:].sum())
    return float(total)


def gpi_solve_vector(
    quadforms: QuadFormSet,
    start: np.ndarray,
    config: SystemConfig,
) -> tuple[np.ndarray, SolveTrace]:
    """Power-iterate from ``start`` (any nonzero stack of matching length).

    Stops when the phase-aligned step norm drops to config.epsilon or after
    config.t_max steps.  On exhaustion the best-objective iterate seen is
    returned with converged=False.

    The plain map f -> normalize(B^-1 A f) can settle into a short periodic
    orbit when its linearization has an eigenvalue outside the unit disk with
    negative or complex phase (sharp softmax weights do this at tight
    tolerances).  When an iterate lands back near a recently visited point,
    subsequent steps are damped by blending with the previous iterate; the
    damped map has exactly the same fixed points, and contracting runs never
    trigger it.
    """
    vec = np.asarray(start, dtype=complex).ravel()
    if vec.size != quadforms.stack_dim:
        raise ValueError("start vector length does not match the quad-form set")
    nrm = np.linalg.norm(vec)
    if nrm == 0 or not np.isfinite(nrm):
        raise ValueError("start vector must be nonzero and finite")
    vec = vec / nrm

    alpha = config.smoothing
    vals = quadforms.evaluate(vec.reshape(quadforms.n_blocks, quadforms.n_antennas))
    obj = _objective_from_values(vals, quadforms, alpha)
    lam = _lambda_from_values(vals, quadforms.has_common, alpha)
    rows = [(0, math.nan, obj, lam)]
    best_obj, best_vec = obj, vec
    converged = False
    iterations = 0
    hist: deque[np.ndarray] = deque(maxlen=5)
    gamma = 1.0

    for t in range(1, config.t_max + 1):
        op = assemble_kkt(quadforms, vec, config, values=vals)
        nxt = block_solve(op.b_blocks, _matvec(op.a_blocks, vec))
        nrm = np.linalg.norm(nxt)
        if nrm == 0 or not np.isfinite(nrm):
            raise NumericError("iteration produced a zero or nonfinite stack")
        nxt = _align_phase(nxt / nrm, vec)
        if gamma < 1.0:
            nxt = vec + gamma * (nxt - vec)
            nxt = _align_phase(nxt / np.linalg.norm(nxt), vec)

        step = float(np.linalg.norm(nxt - vec))
        if step > config.epsilon and any(
            float(np.linalg.norm(nxt - past)) < 0.5 * step for past in hist
        ):
            # returned near a point visited a few steps ago: periodic orbit
            gamma = max(0.5 * gamma, 0.0625)
        vals = quadforms.evaluate(nxt.reshape(quadforms.n_blocks, quadforms.n_antennas))
        obj = _objective_from_values(vals, quadforms, alpha)
        lam = _lambda_from_values(vals, quadforms.has_common, alpha)
        rows.append((t, step, obj, lam))
        iterations = t
        if obj > best_obj:
            best_obj, best_vec = obj, nxt
        hist.append(vec)
        vec = nxt
        if step <= config.epsilon:
            converged = True
            break

    result = vec if converged else best_vec
    return result, SolveTrace(tuple(rows), converged, iterations)


def gpi_solve(
    quadforms: QuadFormSet,
    start: PrecoderStack,
    config: SystemConfig,
) -> tuple[PrecoderStack, SolveTrace]:
    """GPI on a full rate-splitting stack (common block plus K private blocks)."""
    if not quadforms.has_common:
        raise ValueError("quad-form set has no common stream; use the SDMA solver")
    vec, trace = gpi_solve_vector(quadforms, start.entries, config)
    return PrecoderStack(vec, quadforms.n_antennas), trace


def kkt_residual(
    quadforms: QuadFormSet,
    precoder: PrecoderStack | np.ndarray,
    config: SystemConfig,
) -> float:
    """Distance between f and the normalized, phase-aligned image B^-1 A f.

    Zero exactly at a fixed point of the iteration map; the convergence
    tolerance epsilon bounds it loosely at a converged solve.
    """
    vec = precoder.entries if isinstance(precoder, PrecoderStack) else np.asarray(precoder, dtype=complex).ravel()
    vec = vec / np.linalg.norm(vec)
    op = assemble_kkt(quadforms, vec, config)
    image = block_solve(op.b_blocks, _matvec(op.a_blocks, vec))
    image = image / np.linalg.norm(image)
    return float(np.linalg.norm(_align_phase(image, vec) - vec))
