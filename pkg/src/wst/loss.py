"""Training criteria: standard transducer loss and its weakly supervised variant.

Both losses are the negative log total weight of the corresponding training
lattice. The hot path does not materialize arc objects: it runs the
forward-backward recurrence directly on the T x (U+1) grid, which is
mathematically identical to ``wfst.total_weight`` on the built lattice (the
test suite asserts equality against both the lattice route and exhaustive
path enumeration).

Gradients are with respect to the logits by default: arc occupancies are
routed through the log-softmax Jacobian, and bypass arcs additionally apply
the star chain rule — the star weight depends on the row only through the
blank log-probability, with d(star)/d(logp_blank) = -p_blank / (1 - p_blank).
The raw log-probability-level gradient (plain occupancy accumulation) is
available via ``grad_wrt="logprobs"``.
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import NoPath, ShapeMismatch, WstError
from .graphs import PenaltyConfig
from .numerics import NEG_INF
from .vocab import Vocab, validate_transcript

_NEG_INF = -np.inf


def log_softmax(logits) -> np.ndarray:
    """Numerically stable log-softmax over the last axis."""
    z = np.asarray(logits, dtype=float)
    m = z.max(axis=-1, keepdims=True)
    shifted = z - m
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def star_logprob(row) -> float:
    """Log of the average non-blank probability of one normalized row.

    row[0] is the blank log-probability; the result is
    log((1 - p_blank) / (|V| - 1)), -inf when blank takes all the mass.
    """
    r = np.asarray(row, dtype=float)
    if r.ndim != 1 or r.shape[0] < 2:
        raise ShapeMismatch("expected one probability row of length >= 2")
    from .numerics import star_log_prob

    return star_log_prob(float(r[0]), r.shape[0])


def _star_rows(blank_lp: np.ndarray, vocab_size: int) -> np.ndarray:
    """Vectorized star log-weight from blank log-probabilities (stable log1mexp)."""
    b = np.minimum(blank_lp, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        near = np.log(-np.expm1(b))
        far = np.log1p(-np.exp(b))
        out = np.where(b > math.log(0.5), near, far)
    out = np.where(b >= 0.0, _NEG_INF, out)
    return out - math.log(vocab_size - 1)


def _grid_loss_grad(
    lp: np.ndarray,
    ys: np.ndarray,
    use_star: bool,
    lambda1: float,
    lambda2: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """Forward-backward over the (t, u) grid for a batch of equal-shape items.

    lp: [B, T, U+1, V] log-probabilities; ys: [B, U] token ids.
    Returns (log total weight [B], occupancy-routed sensitivity
    d(log total)/d(lp) as [B, T, U+1, V]).
    """
    b_sz, t_len, cols, v_size = lp.shape
    u_len = cols - 1
    blank = lp[..., 0]  # [B, T, U+1]
    if u_len > 0:
        idx = np.broadcast_to(ys[:, None, :], (b_sz, t_len, u_len))
        tok = np.take_along_axis(lp[:, :, :u_len, :], idx[..., None], axis=-1)[..., 0]
    else:
        tok = np.zeros((b_sz, t_len, 0))

    if use_star:
        star = _star_rows(blank, v_size)  # [B, T, U+1]
        star1 = star[:, :, :u_len] + lambda1 if lambda1 != NEG_INF else np.full_like(tok, _NEG_INF)
        star2 = star + lambda2 if lambda2 != NEG_INF else np.full_like(blank, _NEG_INF)
        vert = np.logaddexp(tok, star1)
        horiz = np.logaddexp(blank, star2)
    else:
        vert = tok
        horiz = blank

    alpha = np.full((b_sz, t_len, cols), _NEG_INF)
    alpha[:, 0, 0] = 0.0
    for t in range(t_len):
        for u in range(cols):
            if t == 0 and u == 0:
                continue
            acc = np.full(b_sz, _NEG_INF)
            if u > 0:
                acc = alpha[:, t, u - 1] + vert[:, t, u - 1]
            if t > 0:
                acc = np.logaddexp(acc, alpha[:, t - 1, u] + horiz[:, t - 1, u])
            alpha[:, t, u] = acc

    term = blank[:, t_len - 1, u_len]  # mandatory final blank, never bypassed
    total = alpha[:, t_len - 1, u_len] + term

    beta = np.full((b_sz, t_len, cols), _NEG_INF)
    beta[:, t_len - 1, u_len] = term
    for t in range(t_len - 1, -1, -1):
        for u in range(cols - 1, -1, -1):
            if t == t_len - 1 and u == u_len:
                continue
            acc = np.full(b_sz, _NEG_INF)
            if u < u_len:
                acc = vert[:, t, u] + beta[:, t, u + 1]
            if t < t_len - 1:
                acc = np.logaddexp(acc, horiz[:, t, u] + beta[:, t + 1, u])
            beta[:, t, u] = acc

    tot = total[:, None, None]
    with np.errstate(invalid="ignore"):
        log_g_vert = alpha[:, :, :u_len] + vert + beta[:, :, 1:]
        gamma_vert = np.where(log_g_vert == _NEG_INF, 0.0, np.exp(log_g_vert - tot))
        log_g_horiz = alpha[:, : t_len - 1, :] + horiz[:, : t_len - 1, :] + beta[:, 1:, :]
        gamma_horiz = np.where(log_g_horiz == _NEG_INF, 0.0, np.exp(log_g_horiz - tot))
    gamma_term = np.where(
        alpha[:, t_len - 1, u_len] == _NEG_INF, 0.0,
        np.exp(alpha[:, t_len - 1, u_len] + term - tot[:, 0, 0]),
    )

    if use_star:
        with np.errstate(invalid="ignore"):
            gamma_tok = np.where(gamma_vert > 0.0, gamma_vert * np.exp(tok - vert), 0.0)
            gamma_tok_byp = gamma_vert - gamma_tok
            h = horiz[:, : t_len - 1, :]
            gamma_blank = np.where(
                gamma_horiz > 0.0, gamma_horiz * np.exp(blank[:, : t_len - 1, :] - h), 0.0
            )
            gamma_blank_byp = gamma_horiz - gamma_blank
    else:
        gamma_tok = gamma_vert
        gamma_blank = gamma_horiz
        gamma_tok_byp = gamma_blank_byp = None

    dlp = np.zeros_like(lp)
    if u_len > 0:
        scatter = np.zeros((b_sz, t_len, u_len, v_size))
        np.put_along_axis(scatter, idx[..., None], gamma_tok[..., None], axis=-1)
        dlp[:, :, :u_len, :] += scatter
    dlp[:, : t_len - 1, :, 0] += gamma_blank
    dlp[:, t_len - 1, u_len, 0] += gamma_term

    if use_star:
        gamma_star = np.zeros((b_sz, t_len, cols))
        gamma_star[:, :, :u_len] += gamma_tok_byp
        gamma_star[:, : t_len - 1, :] += gamma_blank_byp
        # d(star)/d(logp_blank) = -p_blank / (1 - p_blank); zero occupancy rows
        # contribute nothing even where the factor would blow up.
        p_blank = np.exp(blank)
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = p_blank / np.expm1(blank)  # = -p/(1-p)
        dlp[..., 0] += np.where(gamma_star > 0.0, gamma_star * factor, 0.0)

    return total, dlp


def _prepare(logits, tokens) -> Tuple[np.ndarray, np.ndarray, Vocab]:
    z = np.asarray(logits, dtype=float)
    if z.ndim != 3:
        raise ShapeMismatch(f"expected a [T][U+1][|V|] logit tensor, got {z.ndim} dimensions")
    t_len, cols, v_size = z.shape
    if v_size < 2:
        raise ShapeMismatch("vocabulary axis must have size >= 2")
    if t_len < 1:
        raise ShapeMismatch("need at least one frame")
    if cols != len(tokens) + 1:
        raise ShapeMismatch(f"tensor has {cols} transcript rows, expected U+1={len(tokens) + 1}")
    if not np.all(np.isfinite(z)):
        raise ShapeMismatch("logits must be finite")
    vocab = Vocab(v_size)
    validate_transcript(vocab, tokens)
    return z, np.asarray(list(tokens), dtype=int), vocab


def _logit_grad(dlp: np.ndarray, lp: np.ndarray) -> np.ndarray:
    p = np.exp(lp)
    return -(dlp - p * dlp.sum(axis=-1, keepdims=True))


def _single_loss(logits, tokens, use_star, penalties, grad_wrt) -> Tuple[float, np.ndarray]:
    z, ys, _ = _prepare(logits, tokens)
    lp = log_softmax(z)
    lam1 = penalties.lambda1 if penalties is not None else 0.0
    lam2 = penalties.lambda2 if penalties is not None else 0.0
    total, dlp = _grid_loss_grad(lp[None], ys[None], use_star, lam1, lam2)
    if total[0] == _NEG_INF:
        raise NoPath("lattice admits no accepting path")
    if grad_wrt == "logits":
        grad = _logit_grad(dlp, lp[None])[0]
    elif grad_wrt == "logprobs":
        grad = -dlp[0]
    else:
        raise ValueError(f"grad_wrt must be 'logits' or 'logprobs', got {grad_wrt!r}")
    return float(-total[0]), grad


def rnnt_loss(logits, tokens: Sequence[int], grad_wrt: str = "logits") -> Tuple[float, np.ndarray]:
    """Standard transducer loss -log P(y|x) and its gradient.

    ``logits`` is a [T][U+1][|V|] tensor of unnormalized scores; row-wise
    log-softmax is applied internally.
    """
    return _single_loss(logits, tokens, use_star=False, penalties=None, grad_wrt=grad_wrt)


def wst_loss(
    logits,
    tokens: Sequence[int],
    penalties: PenaltyConfig,
    grad_wrt: str = "logits",
) -> Tuple[float, np.ndarray]:
    """Weakly supervised transducer loss over the bypass-augmented lattice.

    With both penalties at -inf this reduces exactly (bit-for-bit) to
    ``rnnt_loss``. For finite penalties the loss is strictly below the
    standard loss, since the path set is a strict superset.
    """
    return _single_loss(logits, tokens, use_star=True, penalties=penalties, grad_wrt=grad_wrt)


def batched_grid_loss(
    logits: np.ndarray,
    ys: np.ndarray,
    criterion: str = "rnnt",
    penalties: Optional[PenaltyConfig] = None,
    grad_wrt: str = "logits",
) -> Tuple[np.ndarray, np.ndarray]:
    """Loss and gradient for a batch of equal-shape items.

    logits: [B, T, U+1, V]; ys: [B, U]. Per-item results are bit-identical to
    the corresponding single calls (the recurrence is elementwise over the
    batch axis).
    """
    z = np.asarray(logits, dtype=float)
    if z.ndim != 4:
        raise ShapeMismatch(f"expected a [B][T][U+1][|V|] tensor, got {z.ndim} dimensions")
    use_star = _criterion_flag(criterion)
    lp = log_softmax(z)
    lam1 = penalties.lambda1 if penalties is not None else 0.0
    lam2 = penalties.lambda2 if penalties is not None else 0.0
    total, dlp = _grid_loss_grad(lp, np.asarray(ys, dtype=int), use_star, lam1, lam2)
    if grad_wrt == "logits":
        grad = _logit_grad(dlp, lp)
    else:
        grad = -dlp
    return -total, grad


def _criterion_flag(criterion: str) -> bool:
    if criterion == "rnnt":
        return False
    if criterion == "wst":
        return True
    raise ValueError(f"criterion must be 'rnnt' or 'wst', got {criterion!r}")


class BatchItemError(WstError):
    """Wraps a per-item failure inside batch_loss with the item index."""

    def __init__(self, index: int, cause: Exception):
        self.index = index
        self.cause = cause
        super().__init__(f"item {index}: {cause}")


def batch_loss(
    items: Sequence[Tuple[np.ndarray, Sequence[int]]],
    criterion: str = "rnnt",
    penalties: Optional[PenaltyConfig] = None,
    grad_wrt: str = "logits",
) -> Tuple[List[float], List[np.ndarray], float]:
    """Per-item losses and gradients plus the arithmetic mean loss.

    Items are independent; results are identical to per-item calls regardless
    of batch order. Failures carry the offending item index.
    """
    use_star = _criterion_flag(criterion)
    losses: List[float] = []
    grads: List[np.ndarray] = []
    for i, (logits, tokens) in enumerate(items):
        try:
            loss, grad = _single_loss(logits, tokens, use_star, penalties, grad_wrt)
        except WstError as exc:
            raise BatchItemError(i, exc) from exc
        losses.append(loss)
        grads.append(grad)
    mean = sum(losses) / len(losses) if losses else 0.0
    return losses, grads, mean
