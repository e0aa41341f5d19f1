import numpy as np
import pytest

from pupilarc.errors import RoiError
from pupilarc.geometry import bounding_box
from pupilarc.imaging import GrayImage, integral
from pupilarc.roi import detect_roi, haar_response, inner_side, search_window
from pupilarc.synth import preset, render

from conftest import disk_image, eye


def brute_response(px, cx, cy, ap):
    s = inner_side(ap)
    x0, y0 = cx - ap // 2, cy - ap // 2
    outer = px[y0:y0 + ap, x0:x0 + ap].astype(float)
    ix, iy = cx - s // 2, cy - s // 2
    inner = px[iy:iy + s, ix:ix + s].astype(float)
    return (outer.sum() - inner.sum()) / (ap * ap - s * s) - inner.mean()


def test_inner_side_ratio():
    assert [inner_side(a) for a in (150, 200, 250, 300, 350)] == [90, 120, 150, 180, 210]


def test_uniform_image_responds_zero():
    ii = integral(GrayImage(np.full((300, 300), 77, dtype=np.uint8)))
    for c in [(150, 150), (100, 120), (200, 199)]:
        assert haar_response(ii, c, 200) == 0.0


def test_inner_darker_by_delta():
    px = np.full((200, 200), 150, dtype=np.uint8)
    s = inner_side(150)
    px[100 - s // 2:100 - s // 2 + s, 100 - s // 2:100 - s // 2 + s] = 130
    assert haar_response(integral(GrayImage(px)), (100, 100), 150) == pytest.approx(20.0)


def test_response_matches_brute_force():
    px = np.random.default_rng(0).integers(0, 256, (260, 280)).astype(np.uint8)
    ii = integral(GrayImage(px))
    for cx, cy, ap in [(140, 130, 150), (100, 101, 200), (179, 180, 151)]:
        assert haar_response(ii, (cx, cy), ap) == pytest.approx(brute_response(px, cx, cy, ap))


def test_out_of_bounds_window_is_skipped():
    ii = integral(GrayImage(np.zeros((100, 100), dtype=np.uint8)))
    assert haar_response(ii, (10, 50), 60) is None


def test_dark_disk_found_within_two_pixels():
    img = GrayImage(disk_image(230, 170, 60, 480, 360))
    r = detect_roi(img, (200,))
    cx, cy = r.center
    assert abs(cx - 230) <= 2 and abs(cy - 170) <= 2
    assert r.rect[2] == r.rect[3] == r.aperture == 200


def test_rect_contains_pupil():
    img, gt = render(eye(cx=400, cy=300, a=50, b=50, width=800, height=600))
    r = detect_roi(img)
    x, y, w, h = r.rect
    x0, y0, x1, y1 = bounding_box(gt)
    assert x <= x0 and y <= y0 and x1 < x + w and y1 < y + h
    assert 0 <= x and 0 <= y and x + w <= img.width and y + h <= img.height


def test_too_small_image_raises():
    with pytest.raises(RoiError):
        detect_roi(GrayImage(np.zeros((100, 100), dtype=np.uint8)))
    with pytest.raises(RoiError):
        detect_roi(GrayImage(np.zeros((400, 400), dtype=np.uint8)), ())


def test_offset_invariance():
    px = disk_image(200, 160, 50, 400, 320, inside=40, outside=180)
    a = detect_roi(GrayImage(px), (150, 200))
    b = detect_roi(GrayImage(px + 30), (150, 200))
    assert a.rect == b.rect and a.score == pytest.approx(b.score)


@pytest.mark.parametrize("dx,dy", [(13, 0), (0, -21), (37, 18)])
def test_translation_covariance(dx, dy):
    a = detect_roi(GrayImage(disk_image(300, 250, 55, 640, 520)), (150, 200))
    b = detect_roi(GrayImage(disk_image(300 + dx, 250 + dy, 55, 640, 520)), (150, 200))
    assert abs(b.center[0] - a.center[0] - dx) <= 4 and abs(b.center[1] - a.center[1] - dy) <= 4


def test_coarse_refine_equals_exhaustive_on_smoke_scenes():
    for spec in preset("smoke")[::3]:
        img, _ = render(spec)
        assert detect_roi(img, stride=4) == detect_roi(img, stride=1)


def test_search_window_expands_and_clamps():
    img = GrayImage(disk_image(80, 80, 30, 400, 300))
    r = detect_roi(img, (150,))
    x, y, w, h = search_window(r, 400, 300, 0.10)
    assert x >= 0 and y >= 0 and x + w <= 400 and y + h <= 300
    assert w >= r.rect[2] and h >= r.rect[3]
    assert search_window(r, 400, 300, 0.0) == r.rect
