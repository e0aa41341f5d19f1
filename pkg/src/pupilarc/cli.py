"""``pupilarc`` command line: detect, synth, eval and bench."""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import load_config
from .errors import PupilArcError, SpecError
from .evaluation import GT_CLASSES, evaluate_images
from .geometry import EllipseParams
from .imaging import dump_pgm, read_pgm, write_ppm
from .overlay import draw_detection
from .pipeline import PUPIL, STAGES, Real, detect, encode_json
from .synth import PRESETS, SceneSpec, preset, render

EXIT_PUPIL, EXIT_NO_PUPIL, EXIT_ERROR = 0, 1, 2
MANIFEST = "manifest.json"


class CliError(Exception):
    """A user-facing failure; reported on stderr with exit code 2."""


def _atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_set(pairs):
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise CliError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _config(args):
    overrides = _parse_set(args.set)
    if args.seed is not None:
        overrides["synth.seed"] = args.seed
    if args.no_timings:
        overrides["report.timings"] = False
    if getattr(args, "eps_threshold", None) is not None:
        overrides["eval.eps_threshold"] = args.eps_threshold
    return load_config(args.config, overrides)


def _jobs(args) -> int:
    if args.jobs < 1:
        raise CliError("--jobs must be at least 1")
    return args.jobs


# ----------------------------------------------------------------- commands


def cmd_detect(args) -> int:
    cfg = _config(args)
    img = read_pgm(args.image)
    if args.overlay:
        result, trace = detect(img, cfg, trace=True)
        write_ppm(args.overlay, draw_detection(img, result, trace))
    else:
        result = detect(img, cfg)
    sys.stdout.write(result.to_json() + "\n")
    return EXIT_PUPIL if result.verdict == PUPIL else EXIT_NO_PUPIL


def _load_specs(path) -> list:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: not valid JSON ({exc})") from None
    if isinstance(doc, dict) and "frames" in doc:
        doc = [f["spec"] if isinstance(f, dict) and "spec" in f else f for f in doc["frames"]]
    if isinstance(doc, dict):
        doc = [doc]
    if not isinstance(doc, list) or not doc:
        raise SpecError(f"{path}: expected a scene object or a non-empty list of scenes")
    specs = []
    for i, d in enumerate(doc):
        if not isinstance(d, dict):
            raise SpecError(f"{path}: scene {i} is not an object")
        d = dict(d)
        d.setdefault("frame_id", f"f{i:04d}")
        specs.append(SceneSpec.from_json(d))
    return specs


def _render_bytes(spec):
    img, _ = render(spec)
    return dump_pgm(img)


def cmd_synth(args) -> int:
    cfg = _config(args)
    if (args.preset is None) == (args.spec is None):
        raise CliError("give exactly one of --preset or --spec")
    specs = preset(args.preset, cfg.seed) if args.preset else _load_specs(args.spec)
    ids = [s.frame_id for s in specs]
    if len(set(ids)) != len(ids) or any(not i or "/" in i for i in ids):
        raise SpecError("frame ids must be unique, non-empty file names")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = _jobs(args)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            blobs = list(pool.map(_render_bytes, specs))
    else:
        blobs = [_render_bytes(s) for s in specs]
    frames = []
    for spec, blob in zip(specs, blobs):
        name = f"{spec.frame_id}.pgm"
        _atomic_write(out / name, blob)
        gt = spec.ground_truth
        frames.append({"frame_id": spec.frame_id, "file": name, "gt_class": spec.gt_class,
                       "ground_truth": None if gt is None else gt.to_json(), "spec": spec.to_json()})
    manifest = {"preset": args.preset, "seed": cfg.seed if args.preset else None, "frames": frames}
    _atomic_write(out / MANIFEST, (json.dumps(manifest, indent=1) + "\n").encode("utf-8"))
    print(f"wrote {len(frames)} frames to {out}")
    return 0


def _read_manifest(frames_dir: Path, manifest_path=None) -> list:
    path = Path(manifest_path) if manifest_path else frames_dir / MANIFEST
    if not path.is_file():
        raise CliError(f"no manifest at {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        entries = doc["frames"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CliError(f"{path}: malformed manifest ({exc})") from None
    if not entries:
        raise CliError(f"{path}: no frames listed")
    out = []
    for e in entries:
        try:
            gt = None if e.get("ground_truth") is None else EllipseParams.from_json(e["ground_truth"])
            if e["gt_class"] not in GT_CLASSES:
                raise KeyError(f"gt_class {e['gt_class']!r}")
            out.append((frames_dir / e["file"], gt, e["gt_class"], str(e["frame_id"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise CliError(f"{path}: bad frame entry ({exc})") from None
    return out


def cmd_eval(args) -> int:
    cfg = _config(args)
    frames_dir = Path(args.frames)
    if not frames_dir.is_dir():
        raise CliError(f"{frames_dir} is not a directory")
    entries = _read_manifest(frames_dir, args.manifest)
    frames = [(read_pgm(p), gt, cls, fid) for p, gt, cls, fid in entries]
    report = evaluate_images(frames, cfg, _jobs(args))
    out = Path(args.out) if args.out else frames_dir
    out.mkdir(parents=True, exist_ok=True)
    _atomic_write(out / "results.csv", report.to_csv().encode("utf-8"))
    _atomic_write(out / "report.json", report.to_json().encode("utf-8"))
    if args.overlay:
        odir = Path(args.overlay)
        odir.mkdir(parents=True, exist_ok=True)
        for img, _, _, fid in frames:
            result, trace = detect(img, cfg, trace=True)
            write_ppm(odir / f"{fid}.ppm", draw_detection(img, result, trace))
    p, r, f = report.scores()
    mean_or = report.mean_overlap()
    print(f"frames={len(report.records)} precision={p:.4f} recall={r:.4f} F={f:.4f} "
          f"mean_or={'n/a' if mean_or is None else f'{mean_or:.4f}'}")
    return 0


def bench_frames(frames, cfg, repetitions: int) -> list:
    """Per frame: (group, path, per-stage median microseconds)."""
    cfg = cfg.replace(timings=True)
    rows = []
    for img, group in frames:
        runs = [detect(img, cfg) for _ in range(repetitions)]
        med = np.median([[r.timings_us[s] for s in STAGES] for r in runs], axis=0)
        rows.append((group, runs[0].path, med))
    return rows


def bench_table(rows) -> list:
    """Mean of the per-frame medians, grouped by frame group and by path."""
    groups = {}
    for group, path, med in rows:
        groups.setdefault(f"class:{group}", []).append(med)
        groups.setdefault(f"path:{path}", []).append(med)
        groups.setdefault("all", []).append(med)
    table = []
    for name in sorted(groups):
        m = np.mean(groups[name], axis=0)
        table.append({"group": name, "frames": len(groups[name]),
                      **{s: Real(v) for s, v in zip(STAGES, m)}, "total": Real(m.sum())})
    return table


def cmd_bench(args) -> int:
    cfg = _config(args)
    if args.repetitions < 1:
        raise CliError("--repetitions must be at least 1")
    frames_dir = Path(args.frames)
    if not frames_dir.is_dir():
        raise CliError(f"{frames_dir} is not a directory")
    if (frames_dir / MANIFEST).is_file():
        frames = [(read_pgm(p), cls) for p, _, cls, _ in _read_manifest(frames_dir)]
    else:
        frames = [(read_pgm(p), "unlabelled") for p in sorted(frames_dir.glob("*.pgm"))]
    if not frames:
        raise CliError(f"no frames in {frames_dir}")
    table = bench_table(bench_frames(frames, cfg, args.repetitions))
    head = f"{'group':<18}{'frames':>7}" + "".join(f"{s:>11}" for s in STAGES) + f"{'total':>11}"
    print(f"per-stage mean of per-frame medians, microseconds ({args.repetitions} repetitions)")
    print(head)
    for row in table:
        print(f"{row['group']:<18}{row['frames']:>7}" + "".join(f"{row[s]:>11.1f}" for s in STAGES)
              + f"{row['total']:>11.1f}")
    if args.json:
        doc = {"repetitions": args.repetitions, "table": table, "config": cfg.to_json()}
        _atomic_write(Path(args.json), (encode_json(doc) + "\n").encode("utf-8"))
    return 0


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="key = value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config key (repeatable); wins over --config")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for batch work")
    common.add_argument("--seed", type=int, help="corpus seed (synth.seed)")
    common.add_argument("--no-timings", action="store_true", help="report zero stage timings")

    ap = argparse.ArgumentParser(prog="pupilarc", description="Pupil boundary detection on grayscale eye frames.")
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", parents=[common], help="detect the pupil in one PGM frame")
    d.add_argument("image")
    d.add_argument("--overlay", metavar="PPM", help="write a debug drawing")
    d.set_defaults(func=cmd_detect)

    s = sub.add_parser("synth", parents=[common], help="render synthetic frames and a manifest")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--spec", metavar="JSON", help="scene object, list of scenes, or a manifest")
    s.add_argument("--out", required=True, metavar="DIR")
    s.set_defaults(func=cmd_synth)

    e = sub.add_parser("eval", parents=[common], help="score detections against a manifest")
    e.add_argument("frames", metavar="DIR")
    e.add_argument("--manifest", metavar="JSON", help=f"defaults to DIR/{MANIFEST}")
    e.add_argument("--out", metavar="DIR", help="where results.csv and report.json go (default DIR)")
    e.add_argument("--eps-threshold", type=float, help="overlap-error threshold for a TP")
    e.add_argument("--overlay", metavar="DIR", help="write one debug drawing per frame")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", parents=[common], help="per-stage timing table (single process)")
    b.add_argument("frames", metavar="DIR")
    b.add_argument("--repetitions", type=int, default=5)
    b.add_argument("--json", metavar="FILE", help="also write the table as JSON")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, PupilArcError, OSError, ValueError) as exc:
        print(f"pupilarc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
