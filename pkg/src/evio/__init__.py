"""Event-based eye tracking: event I/O, representations, a DVS simulator,
baseline trackers, trajectory post-processing, augmentation and metrics."""
from .events import (
    BoundsError,
    Event,
    EventFormatError,
    EventStream,
    LabelTrack,
    Polarity,
    Trajectory,
    read_events_bin,
    read_events_csv,
    read_labels_csv,
    read_trajectory_csv,
    slice_events,
    write_events_bin,
    write_events_csv,
    write_labels_csv,
    write_trajectory_csv,
)
from .representation import (
    BinaRep,
    Frame,
    FrameStack,
    WindowSpec,
    bin_to_frames,
    bina_rep,
    binarize,
    downsample,
    sliding_windows,
)
from .simulator import MotionScript, Segment, SimConfig, render_events, synth_trajectory
from .trackers import (
    AttentionConfig,
    LinearModel,
    biased_attention,
    brat_attention,
    build_bias,
    centroid_track,
    predict_linear,
    rmse_time_loss,
    train_linear,
)
from .postprocess import M2FParams, MotionMethod, OFEParams, blink_override, m2f, motion_variance, ofe
from .augment import AugSpec, event_deletion, spatial_flip, temporal_shift
from .metrics import EvalReport, compare, pixel_error

__version__ = "0.1.0"
