import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evio.events import LabelTrack, Trajectory
from evio.metrics import pixel_error
from evio.representation import FrameStack, WindowSpec
from evio.trackers import (
    AttentionConfig,
    LinearModel,
    attention_weights,
    biased_attention,
    build_bias,
    centroid_track,
    default_slopes,
    linear_objective,
    predict_linear,
    rmse_time_loss,
    rmse_time_loss_grad,
    train_linear,
)


def stack_of(pos, neg=None):
    pos = np.asarray(pos, dtype=np.int64)
    neg = np.zeros_like(pos) if neg is None else np.asarray(neg, dtype=np.int64)
    return FrameStack(pos, neg, 10_000)


# ---------------------------------------------------------------- centroid

def test_centroid_point_mass():
    pos = np.zeros((1, 10, 20))
    pos[0, 7, 12] = 5
    assert centroid_track(stack_of(pos)).points.tolist() == [[12.0, 7.0]]


def test_centroid_fallback_and_hold():
    pos = np.zeros((3, 10, 20))
    pos[1, 2, 3] = 1
    pts = centroid_track(stack_of(pos), decay=0.01).points.tolist()
    assert pts[0] == [10.0, 5.0]
    assert pts[1] == [3.0, 2.0]
    assert pts[2] == [3.0, 2.0]  # decayed below min_events, held


def test_centroid_two_pixels():
    pos = np.zeros((1, 5, 11))
    neg = np.zeros((1, 5, 11))
    pos[0, 0, 0] = 2
    neg[0, 0, 10] = 2
    assert centroid_track(stack_of(pos, neg)).points.tolist() == [[5.0, 0.0]]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31))
def test_centroid_in_bounding_box_of_active_pixels(seed):
    rng = np.random.default_rng(seed)
    pos = rng.integers(0, 3, (6, 9, 13)) * (rng.random((6, 9, 13)) < 0.05)
    pts = centroid_track(stack_of(pos), decay=2.0).points
    seen = np.zeros((9, 13), bool)
    for i in range(6):
        seen |= pos[i] > 0
        ys, xs = np.nonzero(seen)
        if len(xs) == 0:
            assert pts[i].tolist() == [6.5, 4.5]
            continue
        # the hull of active pixels sits inside their bounding box
        assert xs.min() - 1e-9 <= pts[i, 0] <= xs.max() + 1e-9
        assert ys.min() - 1e-9 <= pts[i, 1] <= ys.max() + 1e-9


def test_centroid_rejects_bad_decay():
    with pytest.raises(ValueError):
        centroid_track(stack_of(np.zeros((1, 2, 2))), decay=0)


# ---------------------------------------------------------------- bias

def test_bias_example():
    fwd, bwd, B = build_bias(AttentionConfig(3, 1, 4, slopes=(-1.0,)))
    assert fwd[0].tolist() == [[0, 0, 0], [-1, 0, 0], [-2, -1, 0]]
    assert B[0].tolist() == [[0, -1, -2], [-1, 0, -1], [-2, -1, 0]]


@pytest.mark.parametrize("T", range(1, 17))
def test_bias_closed_forms(T):
    cfg = AttentionConfig(T, 4, 2)
    fwd, bwd, B = build_bias(cfg)
    assert fwd.shape == bwd.shape == B.shape == (4, T, T)
    for i, t, s in itertools.product(range(4), range(T), range(T)):
        m = -(i + 1) / 4
        assert fwd[i, t, s] == (m * (t - s) if t >= s else 0.0)
        assert bwd[i, t, s] == (m * (s - t) if t < s else 0.0)
        assert B[i, t, s] == fwd[i, t, s] + bwd[i, t, s]
        assert B[i, t, s] == B[i, s, t]
    assert np.all(np.diagonal(B, axis1=1, axis2=2) == 0)


def test_default_slopes():
    assert default_slopes(4).tolist() == [-0.25, -0.5, -0.75, -1.0]
    with pytest.raises(ValueError):
        AttentionConfig(3, 2, 4, slopes=(-1.0, -0.5))
    with pytest.raises(ValueError):
        AttentionConfig(3, 1, 4, slopes=(0.0,))


# ---------------------------------------------------------------- attention

def test_uniform_attention_gives_column_mean():
    cfg = AttentionConfig(5, 2, 3)
    V = np.random.default_rng(0).normal(size=(2, 5, 4))
    Z = np.zeros((2, 5, 3))
    out = biased_attention(Z, Z, V, cfg, bias=np.zeros((2, 5, 5)))
    np.testing.assert_allclose(out, np.repeat(V.mean(axis=1, keepdims=True), 5, axis=1), atol=1e-12)


def test_strong_bias_recovers_v():
    cfg = AttentionConfig(6, 1, 2, slopes=(-1e3,))
    V = np.eye(6)[None]
    Z = np.zeros((1, 6, 2))
    assert np.max(np.abs(biased_attention(Z, Z, V, cfg) - V)) < 1e-6


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 16), st.integers(1, 4))
def test_softmax_rows_and_shift_invariance(seed, T, h):
    rng = np.random.default_rng(seed)
    cfg = AttentionConfig(T, h, 3)
    Q, K = rng.normal(size=(2, h, T, 3)) * 3
    V = rng.normal(size=(h, T, 2))
    B = build_bias(cfg)[2]
    A = attention_weights(Q, K, B)
    assert np.max(np.abs(A.sum(axis=-1) - 1.0)) < 1e-6
    shifted = B.copy()
    row = int(rng.integers(T))
    shifted[:, row, :] += rng.normal() * 50
    np.testing.assert_allclose(biased_attention(Q, K, V, cfg, shifted), biased_attention(Q, K, V, cfg), atol=1e-9)


def test_attention_matches_loop_formula():
    rng = np.random.default_rng(3)
    cfg = AttentionConfig(4, 2, 3)
    Q, K = rng.normal(size=(2, 2, 4, 3))
    V = rng.normal(size=(2, 4, 5))
    B = build_bias(cfg)[2]
    out = biased_attention(Q, K, V, cfg)
    for i in range(2):
        for t in range(4):
            logits = [Q[i, t] @ K[i, s] / np.sqrt(3) + B[i, t, s] for s in range(4)]
            w = np.exp(logits) / np.sum(np.exp(logits))
            np.testing.assert_allclose(out[i, t], w @ V[i], atol=1e-12)


def test_attention_shape_errors():
    cfg = AttentionConfig(4, 2, 3)
    with pytest.raises(ValueError):
        biased_attention(np.zeros((2, 4, 2)), np.zeros((2, 4, 3)), np.zeros((2, 4, 1)), cfg)
    with pytest.raises(ValueError):
        biased_attention(np.zeros((2, 4, 3)), np.zeros((2, 4, 3)), np.zeros((2, 3, 1)), cfg)


# ---------------------------------------------------------------- loss

def test_loss_examples():
    lab = np.zeros((4, 2))
    assert rmse_time_loss(lab, lab) == 0.0
    assert rmse_time_loss([[3.0, 4.0]], [[0.0, 0.0]]) == 5.0
    assert rmse_time_loss(np.tile([3.0, 4.0], (4, 1)), lab) == 2.5
    with pytest.raises(ValueError):
        rmse_time_loss(np.zeros((0, 2)), np.zeros((0, 2)))
    with pytest.raises(ValueError):
        rmse_time_loss(np.zeros((2, 2)), np.zeros((3, 2)))
    with pytest.raises(ZeroDivisionError):
        rmse_time_loss_grad(lab, lab)


def _central_diff(fn, x, h=1e-5):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        up, dn = x.copy(), x.copy()
        up[idx] += h
        dn[idx] -= h
        g[idx] = (fn(up) - fn(dn)) / (2 * h)
    return g


@pytest.mark.parametrize("seed", range(10))
def test_loss_grad_wrt_prediction(seed):
    rng = np.random.default_rng(seed)
    lab = rng.normal(size=(7, 2))
    pred = lab + rng.normal(size=(7, 2))
    num = _central_diff(lambda p: rmse_time_loss(p, lab), pred)
    ana = rmse_time_loss_grad(pred, lab)
    assert np.linalg.norm(ana - num) / np.linalg.norm(num) < 1e-4


@pytest.mark.parametrize("windowed", [False, True])
@pytest.mark.parametrize("seed", range(10))
def test_linear_objective_gradient(seed, windowed):
    rng = np.random.default_rng(100 + seed)
    F = (rng.random((12, 5)) < 0.4).astype(float)
    target = rng.normal(20, 5, size=(12, 2))
    W = rng.normal(size=(2, 5))
    b = rng.normal(20, 2, size=2)
    win = np.array([[0, 1, 2, 3], [2, 3, 4, 5], [6, 8, 10, 11]]) if windowed else None
    loss, (gW, gb) = linear_objective(W, b, F, target, win)
    nW = _central_diff(lambda w: linear_objective(w, b, F, target, win)[0], W)
    nb = _central_diff(lambda v: linear_objective(W, v, F, target, win)[0], b)
    ana = np.concatenate([gW.ravel(), gb])
    num = np.concatenate([nW.ravel(), nb])
    assert np.linalg.norm(ana - num) / np.linalg.norm(num) < 1e-4


def test_objective_singular_point():
    F = np.ones((3, 1))
    target = np.full((3, 2), 4.0)
    loss, grad = linear_objective(np.zeros((2, 1)), np.array([4.0, 4.0]), F, target)
    assert loss == 0.0 and grad is None


# ---------------------------------------------------------------- training

def test_lr_zero_leaves_parameters():
    rng = np.random.default_rng(0)
    F = rng.random((10, 4))
    track = LabelTrack(rng.normal(30, 3, 10), rng.normal(20, 3, 10), np.zeros(10, bool))
    m = train_linear(F, track, lr=0.0, epochs=20)
    assert np.all(m.W == 0)
    assert np.array_equal(m.b, track.points.mean(axis=0))


def test_single_sample_fits():
    track = LabelTrack([12.5], [7.25], [False])
    m = train_linear(np.array([[1.0, 0.0, 1.0]]), track, lr=0.1, epochs=500)
    assert m.loss_history[-1] < 1e-6
    assert m.skipped_steps == 500


def test_training_decreases_loss():
    rng = np.random.default_rng(1)
    F = (rng.random((60, 6)) < 0.5).astype(float)
    W_true = rng.normal(0, 4, size=(2, 6))
    P = F @ W_true.T + [40, 30]
    m = train_linear(F, LabelTrack(P[:, 0], P[:, 1], np.zeros(60, bool)), epochs=200)
    assert m.loss_history[-1] < 0.2 * m.loss_history[0]
    m2 = train_linear(F, LabelTrack(P[:, 0], P[:, 1], np.zeros(60, bool)), epochs=200,
                      window=WindowSpec(10, 5))
    assert m2.loss_history[-1] < m2.loss_history[0]


def test_predict_examples():
    m = LinearModel(np.zeros((2, 3)), [40.0, 30.0])
    assert predict_linear(m, np.ones((2, 3))).points.tolist() == [[40.0, 30.0]] * 2
    m = LinearModel([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], [0.0, 0.0])
    assert predict_linear(m, [[0.0, 1.0, 0.0]]).points.tolist() == [[2.0, 5.0]]
    with pytest.raises(ValueError):
        predict_linear(m, np.ones((1, 4)))


def test_linear_beats_centroid_on_separable_data():
    # the pupil is at one of four positions; events come from a fixed
    # off-centre blob, so the centroid is biased while one-hot features
    # identify the position exactly
    rng = np.random.default_rng(7)
    spots = np.array([[10.0, 10.0], [30.0, 10.0], [10.0, 25.0], [30.0, 25.0]])
    which = rng.integers(0, 4, 80)
    pos = np.zeros((80, 30, 40), dtype=np.int64)
    for i, k in enumerate(which):
        x, y = spots[k].astype(int)
        pos[i, y, x + 3] = 4
        pos[i, y + 2, x + 3] = 4
    stack = stack_of(pos)
    track = LabelTrack(spots[which, 0], spots[which, 1], np.zeros(80, bool))
    feats = np.eye(4)[which]
    m = train_linear(feats, track, epochs=500)
    lin = pixel_error(predict_linear(m, feats), track).pixel_error
    cen = pixel_error(centroid_track(stack), track).pixel_error
    assert lin < cen


def test_model_csv_round_trip(tmp_path):
    m = LinearModel(np.random.default_rng(0).normal(size=(2, 5)), [1.5, -0.1])
    f = tmp_path / "m.csv"
    m.save(f)
    back = LinearModel.load(f)
    assert np.array_equal(back.W, m.W) and np.array_equal(back.b, m.b)
    f.write_text("w,1\nq,2\n")
    with pytest.raises(ValueError, match="line 2"):
        LinearModel.load(f)


def test_model_rejects_non_finite():
    with pytest.raises(ValueError):
        LinearModel([[np.nan], [0.0]], [0.0, 0.0])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.01, 1e4))
def test_loss_history_never_increases(seed, lr):
    rng = np.random.default_rng(seed)
    F = (rng.random((20, 4)) < 0.5).astype(float)
    P = rng.normal(30, 5, size=(20, 2))
    m = train_linear(F, LabelTrack(P[:, 0], P[:, 1], np.zeros(20, bool)), lr=lr, epochs=30)
    assert len(m.loss_history) == 31
    assert np.all(np.diff(m.loss_history) <= 0)
