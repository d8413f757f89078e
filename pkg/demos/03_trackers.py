"""Centroid baseline, a linear readout trained on the time-normalised RMSE,
and the relative-position attention bias."""
import numpy as np

from evio.metrics import pixel_error
from evio.representation import bin_to_frames, frame_features
from evio.simulator import benchmark_recording
from evio.trackers import AttentionConfig, biased_attention, build_bias, centroid_track, predict_linear, train_linear

train_stream, train_track = benchmark_recording(0)
test_stream, test_track = benchmark_recording(1)

cen = centroid_track(bin_to_frames(test_stream, test_track))
print("centroid pixel error:", round(pixel_error(cen, test_track).pixel_error, 3))

F_train = frame_features(bin_to_frames(train_stream, train_track), 4)
F_test = frame_features(bin_to_frames(test_stream, test_track), 4)
model = train_linear(F_train, train_track)
print("loss first/last epoch:", round(model.loss_history[0], 4), round(model.loss_history[-1], 4))
print("linear pixel error on train:", round(pixel_error(predict_linear(model, F_train), train_track).pixel_error, 3))
# one 5 s recording is far too little data to generalise from
print("linear pixel error on held-out recording:",
      round(pixel_error(predict_linear(model, F_test), test_track).pixel_error, 3))

# bias for one head with slope -1: plain negative distance
fwd, bwd, B = build_bias(AttentionConfig(T=5, heads=1, d_k=4, slopes=(-1.0,)))
print(B[0])

cfg = AttentionConfig(T=8, heads=4, d_k=16)
rng = np.random.default_rng(0)
Q, K, V = rng.normal(size=(3, 4, 8, 16))
out = biased_attention(Q, K, V, cfg)
print("attention output", out.shape, "slopes", cfg.slopes)
