"""Compiled vs pure-Python kernels, one at a time and end to end.

    python3 benchmarks/bench_kernels.py [--repeat N]

Inputs come from a synthetic 1280x720 frame so the kernels see realistic
data. End-to-end numbers run ``detect`` in a child process per backend,
since the backend is chosen once at import.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from pupilarc import kernels
from pupilarc.edges import find_anchors
from pupilarc.imaging import compute_gradients, gaussian_kernel, gaussian_smooth
from pupilarc.roi import detect_roi, inner_side, search_window
from pupilarc.synth import preset, render

E2E = """
import statistics, time
from pupilarc import kernels
from pupilarc.pipeline import detect
from pupilarc.synth import preset, render
imgs = [render(s)[0] for s in preset("smoke")]
for img in imgs:
    detect(img)
ts = []
for _ in range({repeat}):
    for img in imgs:
        t = time.perf_counter(); detect(img); ts.append(time.perf_counter() - t)
print(kernels.BACKEND, statistics.median(ts) * 1e3)
"""


def workloads():
    img, _ = render(preset("smoke")[0])
    px = img.pixels
    roi = detect_roi(img)
    wx, wy, ww, wh = search_window(roi, img.width, img.height)
    sub = img.crop(wx, wy, ww, wh)
    field = compute_gradients(gaussian_smooth(sub, 1.0))
    anchors, horizontal = find_anchors(field, 8.0, 2)
    horizontal = horizontal.astype(np.uint8)
    sat = kernels.python_backend.integral_table(px)
    ap = 250
    rng = np.random.default_rng(0)
    u = rng.uniform(-150, 150, 2000)
    v = rng.uniform(-150, 150, 2000)
    k = gaussian_kernel(1.0)
    h, w = px.shape
    chain = kernels.python_backend.route_edges(field.mag, horizontal, anchors, 8.0)
    longest = max(chain, key=len)
    return {
        "smooth_rows_cols 1280x720": lambda m: m.smooth_rows_cols(px, k),
        "sobel 1280x720": lambda m: m.sobel(px),
        "integral_table 1280x720": lambda m: m.integral_table(px),
        "haar_best stride 4": lambda m: m.haar_best(sat, ap, inner_side(ap), 0, h - ap, 0, w - ap, 4),
        "route_edges window": lambda m: m.route_edges(field.mag, horizontal, anchors, 8.0),
        "thin_chain longest": lambda m: m.thin_chain(longest),
        "ellipse_distances 2000": lambda m: m.ellipse_distances(u, v, 90.0, 60.0),
    }


def bench(fn, repeat):
    n = 1
    while timeit.timeit(fn, number=n) < 0.05 and n < 1000:
        n *= 2
    return min(timeit.repeat(fn, number=n, repeat=repeat)) / n * 1e3


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the python backend is available")
    print(f"{'kernel':<28}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}   (ms, best of {args.repeat})")
    for name, call in workloads().items():
        ms = {b: bench(lambda: call(m), args.repeat) for b, m in backends.items()}
        speed = f"{ms['python'] / ms['cython']:>9.1f}x" if "cython" in ms else ""
        print(f"{name:<28}" + "".join(f"{ms[b]:>12.3f}" for b in backends) + speed)

    print("\nend-to-end detect, median ms per frame")
    for forced in ("", "1"):
        env = dict(os.environ, PUPILARC_PURE_PYTHON=forced)
        out = subprocess.run([sys.executable, "-c", E2E.format(repeat=3)], env=env,
                             capture_output=True, text=True, check=True).stdout.split()
        print(f"  {out[0]:<8}{float(out[1]):>10.2f}")


if __name__ == "__main__":
    main()
