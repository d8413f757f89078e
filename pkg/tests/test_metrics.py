import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evio.augment import spatial_flip
from evio.events import LabelTrack, Trajectory
from evio.metrics import compare, format_table, p_accuracy, pixel_error, write_report_csv

from conftest import make_stream


def gt_of(points, blink=None):
    points = np.asarray(points, dtype=np.float64)
    blink = np.zeros(len(points), bool) if blink is None else np.asarray(blink)
    return LabelTrack(points[:, 0], points[:, 1], blink)


def loop_report(pred, gt, exclude_blink=True):
    dists = []
    for i in range(len(gt)):
        if exclude_blink and gt.blink[i]:
            continue
        dists.append(math.sqrt((pred[i][0] - gt.x[i]) ** 2 + (pred[i][1] - gt.y[i]) ** 2))
    mean = sum(dists) / len(dists)
    acc = {}
    for p in (5, 10, 15):
        hits = 0
        for d in dists:
            if d <= p:
                hits += 1
        acc[p] = hits / len(dists)
    return mean, acc


def test_identical_prediction():
    gt = gt_of([[1.0, 2.0], [3.0, 4.0]])
    r = pixel_error(Trajectory(gt.points), gt)
    assert r.pixel_error == 0.0 and r.p_acc == {5: 1.0, 10: 1.0, 15: 1.0}


def test_three_four_five():
    # on a dyadic grid the offset survives the subtraction exactly
    gt = gt_of(np.random.default_rng(0).integers(10, 50, (20, 2)) + 0.25)
    r = pixel_error(Trajectory(gt.points + [3.0, 4.0]), gt)
    assert r.pixel_error == 5.0
    assert r.p_acc == {5: 1.0, 10: 1.0, 15: 1.0}


def test_distances_five_and_twelve():
    gt = gt_of([[0.0, 0.0], [0.0, 0.0]])
    r = pixel_error(Trajectory([[3.0, 4.0], [5.0, 12.0]]), gt)
    assert r.per_frame.tolist() == [5.0, 13.0]
    assert p_accuracy(np.array([5.0, 12.0]), 10) == 0.5


def test_blink_exclusion():
    gt = gt_of([[0.0, 0.0], [0.0, 0.0]], blink=[False, True])
    pred = Trajectory([[1.0, 0.0], [9.0, 0.0]])
    assert pixel_error(pred, gt).pixel_error == 1.0
    assert pixel_error(pred, gt).n_scored == 1
    assert pixel_error(pred, gt, exclude_blink=False).pixel_error == 5.0


def test_errors():
    gt = gt_of([[0.0, 0.0]], blink=[True])
    with pytest.raises(ValueError):
        pixel_error(Trajectory([[0.0, 0.0]]), gt)
    with pytest.raises(ValueError):
        pixel_error(Trajectory([[0.0, 0.0], [1.0, 1.0]]), gt)


@pytest.mark.parametrize("seed", range(100))
def test_matches_straight_loop(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 60))
    gt = gt_of(rng.uniform(0, 80, (n, 2)), rng.random(n) < 0.2)
    if gt.blink.all():
        gt = gt_of(gt.points)
    pred = gt.points + rng.normal(0, rng.uniform(0.5, 12), (n, 2))
    r = pixel_error(Trajectory(pred), gt)
    mean, acc = loop_report(pred.tolist(), gt)
    assert abs(r.pixel_error - mean) <= 1e-12
    for p in (5, 10, 15):
        assert abs(r.p_acc[p] - acc[p]) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=50))
def test_p_accuracy_monotone(d):
    d = np.array(d)
    accs = [p_accuracy(d, p) for p in (0, 5, 10, 15, 50)]
    assert accs == sorted(accs)
    assert all(0.0 <= a <= 1.0 for a in accs)
    assert p_accuracy(d, d.max()) == 1.0


def test_flip_invariance():
    rng = np.random.default_rng(4)
    gt = gt_of(np.round(rng.uniform(0, 63, (40, 2)) * 256) / 256)
    pred = gt_of(np.round((gt.points + rng.normal(0, 3, (40, 2))).clip(0, 63) * 256) / 256)
    s = make_stream([], 64, 64)
    base = pixel_error(Trajectory(pred.points), gt)
    _, fgt = spatial_flip(s, gt, True, True)
    _, fpred = spatial_flip(s, pred, True, True)
    flipped = pixel_error(Trajectory(fpred.points), fgt)
    assert flipped.pixel_error == base.pixel_error
    assert flipped.p_acc == base.p_acc


def test_compare_ordering():
    gt = gt_of([[0.0, 0.0]])
    mk = lambda e: pixel_error(Trajectory([[e, 0.0]]), gt)
    rows = compare({"a": mk(1.5), "b": mk(1.4)})
    assert [r["name"] for r in rows] == ["b", "a"]
    rows = compare([("z", mk(1.0)), ("a", mk(1.0)), ("m", mk(0.5))])
    assert [r["name"] for r in rows] == ["m", "z", "a"]
    assert len(compare({"only": mk(2.0)})) == 1


def test_table_and_csv(tmp_path):
    gt = gt_of([[0.0, 0.0]])
    rows = compare({"centroid": pixel_error(Trajectory([[0.0, 0.0]]), gt)})
    table = format_table(rows)
    assert "0.0000" in table.splitlines()[1]
    f = tmp_path / "r.csv"
    write_report_csv(rows, f)
    assert f.read_text() == ("name,pixel_error,p5,p10,p15,n_scored\n"
                             "centroid,0.000000,1.000000,1.000000,1.000000,1\n")
