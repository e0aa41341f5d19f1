import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pupilarc.arcs import EllipticalArc
from pupilarc.config import Config
from pupilarc.geometry import EllipseParams, FitResult, fit_ellipse, overlap_ratio
from pupilarc.imaging import GrayImage
from pupilarc.pipeline import (FAST, FULL, NO_PUPIL, PUPIL, STAGES, DetectionResult, PupilCandidate, arc_subsets,
                               candidate_cost, cap_arcs, detect, generate_candidates, select_pupil)
from pupilarc.roi import RoiResult
from pupilarc.synth import SceneSpec, render

from conftest import ellipse_points, eye

pos = st.floats(1e-3, 1e3, allow_nan=False)
ecc = st.floats(0.0, 0.999)


def arc_from(points, segment=0):
    px = np.floor(np.asarray(points) + 0.5).astype(np.int32)
    return EllipticalArc(px, fit_ellipse(px), segment, 0)


def candidate(cost, phi=1.0, rmse=1.0, ids=(0,)):
    fit = FitResult(EllipseParams.make(0, 0, 10, 9), rmse, 10, "taubin")
    return PupilCandidate(ids, fit, phi, cost)


def test_cost_closed_forms():
    assert candidate_cost(1, 0, 1) == 1
    assert candidate_cost(2, 0.5, 0.5) == pytest.approx(4 * math.sqrt(math.pi) / 0.25)
    assert candidate_cost(2, 0.5, 0.5) == pytest.approx(28.36, abs=0.01)


@settings(max_examples=300)
@given(pos, ecc, pos, st.floats(1.001, 10))
def test_cost_monotone(rmse, e, phi, k):
    c = candidate_cost(rmse, e, phi)
    assert candidate_cost(rmse * k, e, phi) > c
    assert candidate_cost(rmse, e, phi * k) < c
    e2 = min(e + 0.001 * k, 0.9999)
    assert candidate_cost(rmse, e2, phi) > c


@given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=30), st.floats(1e-3, 1e3))
def test_argmin_invariant_under_scaling(costs, k):
    cands = [candidate(c, ids=(i,)) for i, c in enumerate(costs)]
    scaled = [candidate(c * k, ids=(i,)) for i, c in enumerate(costs)]
    assert select_pupil(cands, math.inf)[1].arc_ids == select_pupil(scaled, math.inf)[1].arc_ids


def test_subset_enumeration():
    assert list(arc_subsets(3)) == [(0,), (1,), (0, 1), (2,), (0, 2), (1, 2), (0, 1, 2)]
    assert sum(1 for _ in arc_subsets(10)) == 1023


def test_cap_keeps_longest_in_order():
    arcs = [arc_from(ellipse_points(50, 40, 0, 100, 100, n)[: n // 2]) for n in (60, 200, 100, 300)]
    kept = cap_arcs(arcs, 2)
    assert [len(a.pixels) for a in kept] == [100, 150]


def test_single_full_circle_candidate():
    arc = arc_from(ellipse_points(40, 40, 0, 100, 100, 252))
    cands = generate_candidates([arc])
    assert len(cands) == 1 and cands[0].phi == pytest.approx(1.0, abs=0.02)


def test_eyelid_arc_never_joins_the_pupil():
    e = ellipse_points(60, 50, 0.3, 200, 200, 400)
    left = arc_from(e[20:140])
    right = arc_from(e[220:340])
    # a gently curved lid well outside the pupil
    t = np.linspace(-0.15, 0.15, 120)
    lid = arc_from(np.column_stack([200 + 900 * np.sin(t), 120 - 900 * (1 - np.cos(t))]))
    cands = generate_candidates([left, right, lid], max_major=300)
    ids = {c.arc_ids for c in cands}
    assert (0, 1) in ids
    # the lid arc may stand alone, but never pooled with pupil arcs
    assert all(c == (2,) or 2 not in c for c in ids)
    verdict, best = select_pupil(cands)
    assert verdict == PUPIL and best.arc_ids == (0, 1)


def test_selection_rules():
    assert select_pupil([], 50) == (NO_PUPIL, None)
    verdict, best = select_pupil([candidate(80)], 50)
    assert verdict == NO_PUPIL and best.cost == 80
    tie = [candidate(1.0, phi=0.5, ids=(0,)), candidate(1.0, phi=0.9, rmse=2, ids=(1,)),
           candidate(1.0, phi=0.9, rmse=1, ids=(2,))]
    assert select_pupil(tie, 50)[1].arc_ids == (2,)


def test_result_requires_ellipse_for_pupil():
    roi = RoiResult((0, 0, 150, 150), 150, 1.0)
    with pytest.raises(ValueError):
        DetectionResult(PUPIL, None, 1.0, roi, FAST, {})
    with pytest.raises(ValueError):
        DetectionResult(NO_PUPIL, EllipseParams.make(1, 1, 2, 2), None, roi, FULL, {})


def test_json_layout():
    roi = RoiResult((10, 20, 150, 150), 150, 3.0)
    r = DetectionResult(PUPIL, EllipseParams.make(1.5, 2, 4, 3, math.pi / 4), 0.25, roi, FAST,
                        dict.fromkeys(STAGES, 7))
    text = r.to_json()
    assert text.startswith('{"verdict": "pupil", "ellipse": {"cx": 1.500000, "cy": 2.000000, "a": 4.000000, '
                           '"b": 3.000000, "theta_deg": 45.000000}, "cost": 0.250000, "roi": {"x": 10, "y": 20, '
                           '"w": 150, "h": 150}, "path": "fast", "timings_us": {"roi": 7,')
    assert list(json.loads(text)["timings_us"]) == list(STAGES)
    none = DetectionResult(NO_PUPIL, None, None, roi, FULL, dict.fromkeys(STAGES, 0))
    assert list(json.loads(none.to_json())) == ["verdict", "roi", "path", "timings_us"]


def test_clean_pupil_takes_fast_path():
    spec = eye(cx=500, cy=330, a=60, b=54, theta=0.7, width=1000, height=700, noise_sigma=2.0, seed=1)
    img, gt = render(spec)
    r, trace = detect(img, trace=True)
    assert r.verdict == PUPIL and r.path == FAST
    assert overlap_ratio(gt, r.ellipse, (img.width, img.height)) >= 0.95
    assert all(a.segment == trace.near_circular for a in trace.arcs)
    assert trace.best.fit.rmse <= Config().candidate_rmse and r.cost <= Config().cost_threshold


def test_forty_percent_occlusion_takes_full_path():
    spec = eye(cx=500, cy=330, a=60, b=54, theta=0.7, width=1000, height=700, noise_sigma=2.0, seed=2,
               lid=True, occlusion=0.4, lid_margin=0.0)
    img, gt = render(spec)
    r = detect(img)
    assert r.verdict == PUPIL and r.path == FULL
    assert overlap_ratio(gt, r.ellipse, (img.width, img.height)) >= 0.85


def test_closed_eye_has_no_pupil():
    spec = SceneSpec(pupil=None, iris_center=(500, 330), iris_radius=220, width=1000, height=700,
                     occlusion=1.0, lid_margin=10, noise_sigma=2.0, lash_strokes=8, seed=3)
    img, _ = render(spec)
    assert detect(img).verdict == NO_PUPIL


def test_blank_frame_is_no_pupil_not_error():
    r = detect(GrayImage(np.full((400, 400), 128, dtype=np.uint8)))
    assert r.verdict == NO_PUPIL and r.ellipse is None


def test_detect_deterministic_without_timings():
    img, _ = render(eye(noise_sigma=2.0, seed=4))
    cfg = Config(timings=False)
    a, b = detect(img, cfg), detect(img, cfg)
    assert a.to_json() == b.to_json()
    assert all(v == 0 for v in a.timings_us.values())
    assert detect(img).total_us > 0
