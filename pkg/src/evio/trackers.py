"""Trajectory producers and the attention/loss pieces they share.

``centroid_track`` is a non-learned baseline. ``train_linear`` fits an
affine readout of binary frame features under the time-normalised RMSE
loss. ``build_bias``/``biased_attention`` implement multi-head attention with
a bidirectional relative-position bias.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .events import Trajectory, format_decimal
from .representation import FrameStack, WindowSpec, sliding_windows

log = logging.getLogger(__name__)


# ------------------------------------------------------------ centroid

def centroid_track(stack: FrameStack, decay: float = 1.0, min_events: float = 1.0) -> Trajectory:
    """Activity-weighted centroid of an exponentially decayed event map.

    ``decay`` is the half-life in frames. When the decayed activity sums to
    less than ``min_events`` the previous prediction is repeated (the frame
    centre for the first frame).
    """
    if decay <= 0:
        raise ValueError("decay half-life must be positive")
    keep = 2.0 ** (-1.0 / decay)
    h, w = stack.height, stack.width
    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    activity = np.zeros((h, w))
    prev = (w / 2, h / 2)
    out = np.empty((len(stack), 2))
    for i in range(len(stack)):
        activity = activity * keep + stack.pos[i] + stack.neg[i]
        mass = activity.sum()
        if mass >= min_events and mass > 0:
            prev = (float(activity.sum(axis=0) @ xs / mass), float(activity.sum(axis=1) @ ys / mass))
        out[i] = prev
    return Trajectory(out, "centroid")


# ------------------------------------------------------------ attention

def default_slopes(heads: int) -> np.ndarray:
    """Linear, strictly decreasing, all-negative slopes ``-(i + 1) / h``."""
    return -np.arange(1, heads + 1, dtype=np.float64) / heads


@dataclass(frozen=True)
class AttentionConfig:
    T: int
    heads: int
    d_k: int
    slopes: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.T < 1 or self.heads < 1 or self.d_k < 1:
            raise ValueError(f"invalid attention shape {self}")
        m = default_slopes(self.heads) if self.slopes is None else np.asarray(self.slopes, dtype=np.float64)
        if m.shape != (self.heads,):
            raise ValueError(f"need {self.heads} slopes, got {m.shape}")
        if np.any(m >= 0) or np.any(np.diff(m) >= 0):
            raise ValueError("slopes must be negative and strictly decreasing by head")
        object.__setattr__(self, "slopes", tuple(float(v) for v in m))

    @property
    def m(self) -> np.ndarray:
        return np.asarray(self.slopes)


def build_bias(cfg: AttentionConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Forward, backward and total bias, each of shape ``(heads, T, T)``.

    ``forward[i, t, s] = m_i * (t - s)`` for ``t >= s`` (else 0) and
    ``backward[i, t, s] = m_i * (s - t)`` for ``t < s`` (else 0).
    """
    t = np.arange(cfg.T)[:, None]
    s = np.arange(cfg.T)[None, :]
    m = cfg.m[:, None, None]
    lower = t >= s
    forward = np.where(lower, m * (t - s), 0.0)
    backward = np.where(lower, 0.0, m * (s - t))
    return forward, backward, forward + backward


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    z = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def attention_weights(Q, K, bias) -> np.ndarray:
    Q = np.asarray(Q, dtype=np.float64)
    K = np.asarray(K, dtype=np.float64)
    d_k = Q.shape[-1]
    return softmax(Q @ np.swapaxes(K, -1, -2) / math.sqrt(d_k) + bias)


def biased_attention(Q, K, V, cfg: AttentionConfig, bias: np.ndarray | None = None) -> np.ndarray:
    """Per-head ``softmax(Q K^T / sqrt(d_k) + B) V``.

    ``Q`` and ``K`` are ``(heads, T, d_k)``, ``V`` is ``(heads, T, d_v)``.
    ``bias`` overrides the configured relative-position bias.
    """
    Q = np.asarray(Q, dtype=np.float64)
    K = np.asarray(K, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    want = (cfg.heads, cfg.T, cfg.d_k)
    if Q.shape != want or K.shape != want:
        raise ValueError(f"Q and K must be {want}, got {Q.shape} and {K.shape}")
    if V.ndim != 3 or V.shape[:2] != (cfg.heads, cfg.T):
        raise ValueError(f"V must be ({cfg.heads}, {cfg.T}, d_v), got {V.shape}")
    if bias is None:
        bias = build_bias(cfg)[2]
    bias = np.broadcast_to(np.asarray(bias, dtype=np.float64), (cfg.heads, cfg.T, cfg.T))
    return attention_weights(Q, K, bias) @ V


# ------------------------------------------------------------ loss


brat_attention = biased_attention  # name used by the public interface


def rmse_time_loss(pred, label) -> float:
    """``sqrt(sum_t ||pred_t - label_t||^2) / T``."""
    r = _residual(pred, label)
    return math.sqrt(float(np.sum(r * r))) / len(r)


def rmse_time_loss_grad(pred, label) -> np.ndarray:
    """Gradient of :func:`rmse_time_loss` with respect to ``pred``.

    Undefined at zero residual; raises ``ZeroDivisionError`` there.
    """
    r = _residual(pred, label)
    norm = math.sqrt(float(np.sum(r * r)))
    if norm == 0.0:
        raise ZeroDivisionError("loss gradient is singular at zero residual")
    return r / (len(r) * norm)


def _residual(pred, label) -> np.ndarray:
    p = pred.points if isinstance(pred, Trajectory) else np.asarray(pred, dtype=np.float64)
    q = label.points if hasattr(label, "points") else np.asarray(label, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"prediction {p.shape} and label {q.shape} differ in shape")
    if len(p) == 0:
        raise ValueError("loss over zero time steps")
    return p - q


# ------------------------------------------------------------ linear readout

@dataclass
class LinearModel:
    """Affine map ``features -> (x, y)``: ``W`` is ``(2, n_features)``."""

    W: np.ndarray
    b: np.ndarray
    loss_history: list[float] = field(default_factory=list, repr=False)
    skipped_steps: int = 0

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64).reshape(2)
        if self.W.ndim != 2 or self.W.shape[0] != 2:
            raise ValueError(f"W must be (2, n), got {self.W.shape}")
        if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b))):
            raise ValueError("model parameters must be finite")

    @property
    def n_features(self) -> int:
        return self.W.shape[1]

    def save(self, path) -> None:
        """CSV: one ``w`` row per output coordinate, then the ``b`` row."""
        with Path(path).open("w", encoding="utf-8") as fh:
            for row in self.W:
                fh.write("w," + ",".join(format_decimal(v) for v in row) + "\n")
            fh.write("b," + ",".join(format_decimal(v) for v in self.b) + "\n")

    @classmethod
    def load(cls, path) -> "LinearModel":
        W, b = [], None
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            tag, *vals = line.split(",")
            try:
                row = [float(v) for v in vals]
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
            if tag == "w":
                W.append(row)
            elif tag == "b":
                b = row
            else:
                raise ValueError(f"{path}: line {lineno}: unknown row tag {tag!r}")
        if len(W) != 2 or b is None or len(b) != 2 or len(W[0]) != len(W[1]):
            raise ValueError(f"{path}: expected two equal-length w rows and one b row of 2")
        return cls(np.array(W), np.array(b))


def _as_features(features) -> np.ndarray:
    F = np.asarray(features, dtype=np.float64)
    if F.ndim != 2:
        raise ValueError(f"features must be (n_samples, n_features), got {F.shape}")
    return F


def linear_objective(W, b, F, target, windows: np.ndarray | None = None):
    """Loss and its gradient ``(dW, db)``; ``None`` gradient at a singular point.

    Without ``windows`` the loss is taken over the whole sequence. With an
    index array of shape ``(n_windows, T)`` it is the mean per-window loss.
    """
    P = F @ W.T + b
    R = P - target
    groups = [np.arange(len(F))] if windows is None else list(windows)
    loss = 0.0
    dP = np.zeros_like(P)
    singular = False
    for idx in groups:
        r = R[idx]
        norm = math.sqrt(float(np.sum(r * r)))
        loss += norm / len(idx)
        if norm == 0.0:
            singular = True
        else:
            np.add.at(dP, idx, r / (len(idx) * norm))
    loss /= len(groups)
    if singular:
        return loss, None
    dP /= len(groups)
    return loss, (dP.T @ F, dP.sum(axis=0))


def train_linear(features, track, lr: float = 100.0, epochs: int = 300, seed: int = 0,
                 window: WindowSpec | None = None) -> LinearModel:
    """Full-batch gradient descent on the time-normalised RMSE.

    The loss is divided by ``T`` outside the root, so its gradient shrinks
    like ``1 / sqrt(T)``; the default step size is large to match. The
    gradient of a norm keeps its magnitude near the optimum, so a step that
    would raise the loss is rejected and the step size halved. The recorded
    loss history is therefore non-increasing.

    Parameters start at ``W = 0`` and ``b`` = mean label, so the result does
    not depend on ``seed``; it is accepted so every stochastic-looking stage
    in a pipeline takes one. Steps at a zero residual are skipped and
    counted in ``skipped_steps``.
    """
    if lr < 0:
        raise ValueError("learning rate must be non-negative")
    F = _as_features(features)
    target = track.points if hasattr(track, "points") else np.asarray(track, dtype=np.float64)
    if len(target) != len(F):
        raise ValueError(f"{len(F)} feature rows for {len(target)} labels")
    if len(F) == 0:
        raise ValueError("no training samples")
    windows = None
    if window is not None:
        windows = sliding_windows(len(F), window)
        if len(windows) == 0:
            raise ValueError(f"sequence of {len(F)} frames is shorter than one {window}")
    W = np.zeros((2, F.shape[1]))
    b = target.mean(axis=0)
    history: list[float] = []
    skipped = 0
    step = lr
    loss, grad = linear_objective(W, b, F, target, windows)
    for _ in range(epochs):
        history.append(loss)
        if grad is None:
            skipped += 1
            continue
        W_new = W - step * grad[0]
        b_new = b - step * grad[1]
        new_loss, new_grad = linear_objective(W_new, b_new, F, target, windows)
        if new_loss > loss:
            step *= 0.5
            continue
        W, b, loss, grad = W_new, b_new, new_loss, new_grad
    history.append(loss)
    if skipped:
        log.info("skipped %d steps at zero residual", skipped)
    return LinearModel(W, b, history, skipped)


def predict_linear(model: LinearModel, features) -> Trajectory:
    F = _as_features(features)
    if F.shape[1] != model.n_features:
        raise ValueError(f"model expects {model.n_features} features, got {F.shape[1]}")
    return Trajectory(F @ model.W.T + model.b, "linear")
