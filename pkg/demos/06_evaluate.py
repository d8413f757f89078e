"""Scoring trajectories and writing the comparison report.

The same flow is available from the shell:

    evio simulate --out run/sim
    evio track --events run/sim/events.csv --labels run/sim/labels.csv --out run/raw.csv
    evio postprocess --pred run/raw.csv --out run/post.csv --events run/sim/events.csv \
        --labels run/sim/labels.csv --m2f --blink-override
    evio report --pred raw=run/raw.csv --pred post=run/post.csv --labels run/sim/labels.csv --out run/report
"""
import tempfile
from pathlib import Path

from evio.metrics import compare, format_table, pixel_error, write_report_csv
from evio.postprocess import blink_override, m2f
from evio.report import trajectory_svg
from evio.representation import bin_to_frames
from evio.simulator import benchmark_recording
from evio.trackers import centroid_track

stream, track = benchmark_recording(42)
stack = bin_to_frames(stream, track)
raw = centroid_track(stack)
post = blink_override(m2f(raw), stack)

reports = {"centroid": pixel_error(raw, track), "centroid+m2f+blink": pixel_error(post, track)}
rows = compare(reports)
print(format_table(rows))
print("with blink frames scored:", round(pixel_error(post, track, exclude_blink=False).pixel_error, 4))

out = Path(tempfile.mkdtemp())
write_report_csv(rows, out / "report.csv")
(out / "trajectory.svg").write_text(trajectory_svg(track, {"centroid": raw, "refined": post}))
print("wrote", out / "report.csv", "and", out / "trajectory.svg")
