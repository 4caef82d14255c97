"""Composite emotion-guidance training objective.

Given a decoder's per-step logits over the vocabulary, three components are
combined (sums run over the T response steps; no length normalization):

  nll    -sum_t log softmax(h_t)[y_t]                       (natural log)
  peg     sum_t [ p_pos * ED_t + (1 - p_pos) * f(|C|) * ED_t ]
  ner     sum_t p_neg * || E[vad]_t ||_2

  total   nll + alpha * peg - beta * ner

where ED_t = || u1_mean - E[vad]_t ||_2 is the emotional distance between the
conversation opener's mean VAD and the expected VAD of the step-t token
distribution E[vad]_t = softmax(h_t)^T M, and f(|C|) = cos(pi * |C| / max_turn)
schedules how strongly the opener's emotion is mirrored as the dialog ages
(|C| = number of context utterances, clamped at max_turn).

The ner term enters with a negative sign: maximizing the norm of the expected
VAD pushes probability mass away from near-origin (strongly negative) words
when the opener is negative.

All math here is float64 and the gradient w.r.t. the logits is hand-derived:

  d nll / dh_t = s_t - onehot(y_t)
  d ED_t / dh_t = s_t ⊙ (g - <s_t, g>),   g = M @ (e_t - u1) / ED~_t
  d ||e_t|| / dh_t = s_t ⊙ (g - <s_t, g>), g = M @ e_t / ||e_t||~

with a 1e-12 guard added under the square root in gradient denominators so the
norm's non-differentiability at zero resolves to a zero gradient.  Reported
loss values use the exact (unguarded) norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .polarity import PolarityDistribution
from .vad import VadMatrix, VadVector, check_distribution

NORM_GUARD = 1e-12


@dataclass(frozen=True)
class PegeConfig:
    """Objective weights and schedule parameters."""

    alpha: float = 5.0
    beta: float = 2.0
    max_turn: int = 7
    peg_baseline: tuple[float, float, float] = (0.5, 0.5, 0.5)

    def __post_init__(self) -> None:
        if not math.isfinite(self.alpha) or self.alpha < 0.0:
            raise ValueError(f"alpha must be a nonnegative real, got {self.alpha!r}")
        if not math.isfinite(self.beta) or self.beta < 0.0:
            raise ValueError(f"beta must be a nonnegative real, got {self.beta!r}")
        if not isinstance(self.max_turn, int) or self.max_turn < 1:
            raise ValueError(f"max_turn must be a positive integer, got {self.max_turn!r}")
        if len(self.peg_baseline) != 3 or any(
            not math.isfinite(b) or not 0.0 <= b <= 1.0 for b in self.peg_baseline
        ):
            raise ValueError(f"peg_baseline must lie in the unit cube, got {self.peg_baseline!r}")


@dataclass(frozen=True)
class LossBreakdown:
    """Per-component values plus the analytic gradient w.r.t. the logits."""

    nll: float
    peg: float
    ner: float
    total: float
    grad_logits: np.ndarray


def dialog_progress(context_turns: int, max_turn: int = 7) -> float:
    """Mirroring schedule cos(pi * |C| / max_turn); |C| is clamped at max_turn.

    Starts at +1 (mirror the opener's emotion), crosses zero mid-dialog, and
    saturates at -1 (drive away from it).
    """
    if not isinstance(context_turns, int) or context_turns < 0:
        raise ValueError(f"context_turns must be a nonnegative integer, got {context_turns!r}")
    if not isinstance(max_turn, int) or max_turn < 1:
        raise ValueError(f"max_turn must be a positive integer, got {max_turn!r}")
    ratio = min(context_turns, max_turn) / max_turn
    return math.cos(math.pi * ratio)


def _as_vad_array(u1_mean) -> np.ndarray:
    if isinstance(u1_mean, VadVector):
        return u1_mean.to_array()
    arr = np.asarray(u1_mean, dtype=np.float64)
    if arr.shape != (3,):
        raise ValueError(f"expected a 3-dim VAD point, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("VAD point must lie in the unit cube")
    return arr


def emotional_distance(u1_mean, probs: np.ndarray, matrix: VadMatrix) -> float:
    """Euclidean distance between the opener's mean VAD and E[vad] under probs."""
    u1 = _as_vad_array(u1_mean)
    p = check_distribution(probs, matrix.vocab_size)
    return float(np.linalg.norm(u1 - p @ matrix.values))


def peg_loss(p_pos: float, eds: Sequence[float], progress: float) -> float:
    """sum_t [ p_pos * ED_t + (1 - p_pos) * progress * ED_t ]."""
    if not math.isfinite(p_pos) or not 0.0 <= p_pos <= 1.0:
        raise ValueError(f"p_pos must lie in [0, 1], got {p_pos!r}")
    if not math.isfinite(progress) or not -1.0 <= progress <= 1.0:
        raise ValueError(f"progress must lie in [-1, 1], got {progress!r}")
    total = 0.0
    for t, ed in enumerate(eds):
        ed = float(ed)
        if not math.isfinite(ed) or ed < 0.0:
            raise ValueError(f"step {t}: emotional distance must be nonnegative, got {ed!r}")
        total += p_pos * ed + (1.0 - p_pos) * progress * ed
    return total


def ner_loss(p_neg: float, dists: Sequence[np.ndarray] | np.ndarray, matrix: VadMatrix) -> float:
    """sum_t p_neg * || E[vad]_t ||_2 over per-step token distributions."""
    if not math.isfinite(p_neg) or not 0.0 <= p_neg <= 1.0:
        raise ValueError(f"p_neg must lie in [0, 1], got {p_neg!r}")
    total = 0.0
    for dist in dists:
        p = check_distribution(dist, matrix.vocab_size)
        total += p_neg * float(np.linalg.norm(p @ matrix.values))
    return total


def _check_logits(logits: np.ndarray) -> np.ndarray:
    arr = np.asarray(logits, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected logits of shape (T, V), got {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"degenerate logits shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite logits")
    return arr


def _check_targets(targets, steps: int, vocab_size: int) -> np.ndarray:
    ids = np.asarray(targets)
    if ids.ndim != 1 or ids.shape[0] != steps:
        raise ValueError(f"expected {steps} target ids, got shape {ids.shape}")
    if not np.issubdtype(ids.dtype, np.integer):
        raise ValueError(f"target ids must be integers, got dtype {ids.dtype}")
    if ids.min() < 0 or ids.max() >= vocab_size:
        raise ValueError("target id out of range")
    return ids.astype(np.int64)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise log softmax, numerically stable."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, numerically stable."""
    shifted = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return shifted / shifted.sum(axis=-1, keepdims=True)


def nll_loss(logits: np.ndarray, targets) -> float:
    """-sum_t log softmax(h_t)[y_t] (teacher forcing, natural log)."""
    arr = _check_logits(logits)
    ids = _check_targets(targets, arr.shape[0], arr.shape[1])
    logp = log_softmax(arr)
    return float(-logp[np.arange(arr.shape[0]), ids].sum())


def pege_loss(
    logits: np.ndarray,
    targets,
    u1_mean,
    polarity: PolarityDistribution,
    context_turns: int,
    matrix: VadMatrix,
    config: PegeConfig = PegeConfig(),
) -> LossBreakdown:
    """Composite loss with its analytic gradient w.r.t. the logits.

    ``targets`` are the teacher-forced response token ids, ``u1_mean`` the
    opener's mean VAD, ``polarity`` the opener's polarity distribution and
    ``context_turns`` the number of utterances in the conversation context
    (fixed for all steps of one example).
    """
    arr = _check_logits(logits)
    T, V = arr.shape
    if matrix.vocab_size != V:
        raise ValueError(f"VAD matrix rows {matrix.vocab_size} != vocab size {V}")
    ids = _check_targets(targets, T, V)
    u1 = _as_vad_array(u1_mean)

    logp = log_softmax(arr)
    s = np.exp(logp)  # (T, V)
    m = matrix.values  # (V, 3)
    e = s @ m  # (T, 3) expected VAD per step

    diff = e - u1
    ed_sq = np.einsum("ij,ij->i", diff, diff)
    eds = np.sqrt(ed_sq)  # exact norms, reported
    nrm_sq = np.einsum("ij,ij->i", e, e)
    nrms = np.sqrt(nrm_sq)

    progress = dialog_progress(context_turns, config.max_turn)
    p_pos, p_neg = polarity.p_pos, polarity.p_neg
    w_peg = p_pos + (1.0 - p_pos) * progress

    nll = float(-logp[np.arange(T), ids].sum())
    peg = float(np.sum(p_pos * eds + (1.0 - p_pos) * progress * eds))
    ner = float(p_neg * nrms.sum())
    total = nll + config.alpha * peg - config.beta * ner

    # Gradient.  For a norm term n(h) = ||A s(h)|| the chain rule gives
    # dn/dh = s ⊙ (g - <s, g>) with g = A^T (A s)/n; guards keep the
    # denominators nonzero at the kink.
    grad = s.copy()
    grad[np.arange(T), ids] -= 1.0  # d nll / dh

    ed_guard = np.sqrt(ed_sq + NORM_GUARD)
    u_p = diff / ed_guard[:, None]  # (T, 3)
    g_p = u_p @ m.T  # (T, V)
    dot_p = np.einsum("ij,ij->i", s, g_p)
    grad += config.alpha * w_peg * s * (g_p - dot_p[:, None])

    nrm_guard = np.sqrt(nrm_sq + NORM_GUARD)
    u_n = e / nrm_guard[:, None]
    g_n = u_n @ m.T
    dot_n = np.einsum("ij,ij->i", s, g_n)
    grad -= config.beta * p_neg * s * (g_n - dot_n[:, None])

    return LossBreakdown(nll=nll, peg=peg, ner=ner, total=total, grad_logits=grad)


def finite_diff_check(
    loss_at: Callable[[np.ndarray], float],
    point: np.ndarray,
    grad: np.ndarray,
    eps: float = 1e-5,
) -> float:
    """Max relative error between ``grad`` and central finite differences.

    The relative error at each coordinate uses max(|analytic|, |numeric|,
    1e-8) as the denominator so near-zero coordinates do not blow up.
    """
    if not math.isfinite(eps) or eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    x = np.asarray(point, dtype=np.float64)
    g = np.asarray(grad, dtype=np.float64)
    if x.shape != g.shape:
        raise ValueError(f"point shape {x.shape} != grad shape {g.shape}")
    max_rel = 0.0
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + eps
        f_plus = float(loss_at(x))
        x[idx] = orig - eps
        f_minus = float(loss_at(x))
        x[idx] = orig
        if not math.isfinite(f_plus) or not math.isfinite(f_minus):
            raise ValueError(f"non-finite loss at perturbed point {idx}")
        numeric = (f_plus - f_minus) / (2.0 * eps)
        rel = abs(g[idx] - numeric) / max(abs(g[idx]), abs(numeric), 1e-8)
        max_rel = max(max_rel, rel)
    return max_rel


def gradient_check_suite(
    seed: int = 0,
    cases: int = 10,
    eps: float = 1e-5,
    config: PegeConfig = PegeConfig(),
) -> float:
    """Worst finite-difference relative error across random small problems.

    Each case draws logits (T <= 4, V <= 16), targets, a VAD row matrix,
    an opener mean, and a polarity distribution, then compares the analytic
    composite-loss gradient against central differences.
    """
    if cases < 1:
        raise ValueError(f"cases must be positive, got {cases!r}")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        T = int(rng.integers(1, 5))
        V = int(rng.integers(4, 17))
        logits = rng.normal(0.0, 2.0, size=(T, V))
        targets = rng.integers(0, V, size=T)
        matrix = VadMatrix(values=rng.uniform(0.0, 1.0, size=(V, 3)), listed=V)
        u1_mean = rng.uniform(0.0, 1.0, size=3)
        p = rng.dirichlet((1.0, 1.0, 1.0))
        polarity = PolarityDistribution(float(p[0]), float(p[1]), float(p[2]))
        context_turns = int(rng.integers(0, 10))
        analytic = pege_loss(
            logits, targets, u1_mean, polarity, context_turns, matrix, config
        ).grad_logits

        def loss_at(x, _t=targets, _u=u1_mean, _p=polarity, _c=context_turns, _m=matrix):
            return pege_loss(x, _t, _u, _p, _c, _m, config).total

        worst = max(worst, finite_diff_check(loss_at, logits, analytic, eps))
    return worst
