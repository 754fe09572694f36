"""``spheremetric`` command line interface.

Exit codes: 0 success, 2 bad arguments, 3 dataset error, 4 feature backend
error, 5 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, kernels, synthetic
from .corruption import CORRUPTIONS, DEFAULT_SWEEPS, apply_corruption
from .dataset import (
    DatasetManifest,
    FeatureCache,
    ManifestEntry,
    get_or_compute_features,
    load_and_normalize,
    pixel_hash,
    save_image,
    scan,
    to_uint8,
)
from .discontinuity import KERNELS, DsConfig, ds_image, summarize_scores
from .errors import InvalidInputError, SpheremetricError
from .features import EXTRACTORS, make_extractor
from .frechet import DEFAULT_MIN_SAMPLES, VIEW_GROUPS, fid_from_features, omnifid_from_features
from .projection import FACES, SAMPLING_METHODS, equirect_to_cubemap

log = logging.getLogger("spheremetric")

SCHEMA_VERSION = 1
# keys excluded from the config echo
_INTERNAL = {"func", "config"}


def _size(text):
    try:
        w, h = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("sizes must be positive")
    return [w, h]


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def parse_sweep(spec: str):
    """``kind`` or ``kind:level,level,...`` -> (kind, [levels])."""
    kind, _, levels = spec.partition(":")
    if kind not in CORRUPTIONS:
        raise InvalidInputError(f"unknown corruption {kind!r}; expected one of {CORRUPTIONS}")
    if not levels:
        return kind, list(DEFAULT_SWEEPS[kind])
    try:
        return kind, [float(x) for x in levels.split(",") if x.strip()]
    except ValueError:
        raise InvalidInputError(f"bad sweep levels in {spec!r}") from None


def level_dirname(kind, level) -> str:
    return f"{kind}_{level:g}"


# ---------------------------------------------------------------- reports

def _config_echo(args) -> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in _INTERNAL:
            continue
        out[key] = os.fspath(value) if isinstance(value, Path) else value
    return out


def make_report(command, args, results, *, started, provenance=None, caught=(), per_image=None) -> dict:
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "spheremetric", "version": __version__},
        "command": command,
        "config": _config_echo(args),
        "provenance": {"kernel_backend": kernels.BACKEND, **(provenance or {})},
        "results": results,
        "warnings": sorted({str(w.message) for w in caught}),
        "timing": {
            "started_utc": datetime.fromtimestamp(started, timezone.utc).isoformat(),
            "elapsed_s": round(time.time() - started, 6),
        },
    }
    if per_image is not None:
        report["per_image"] = per_image
    return report


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def metric_rows(results):
    """Flatten metric results into (metric, group, value) rows."""
    rows = []
    if "fid" in results:
        rows.append(("fid", "", results["fid"]))
    for group, value in results.get("fid_bar", {}).items():
        rows.append(("fid_bar", group, value))
    if "omnifid" in results:
        rows.append(("omnifid", "", results["omnifid"]))
    return rows


# ---------------------------------------------------------------- shared steps

def _target(args):
    return tuple(args.resize) if getattr(args, "resize", None) else None


def _cache(args):
    return FeatureCache(args.cache) if getattr(args, "cache", None) else None


def _features(manifest, extractor, args, view, cache):
    return get_or_compute_features(
        manifest, extractor, view=view, face_size=args.face_size, sampling=args.sampling,
        cache=cache, target=_target(args), strict=args.strict_aspect, jobs=args.jobs,
    )


def compute_metrics(ref: DatasetManifest, ev: DatasetManifest, extractor, args, cache, *, omni=True):
    """FID (and optionally OmniFID) between two manifests."""
    fa = _features(ref, extractor, args, "equirect", cache).features[:, 0]
    fb = _features(ev, extractor, args, "equirect", cache).features[:, 0]
    results = {"fid": fid_from_features(fa, fb, min_samples=args.min_samples),
               "n_ref": len(ref), "n_eval": len(ev)}
    if omni:
        ca = _features(ref, extractor, args, "cubemap", cache).features
        cb = _features(ev, extractor, args, "cubemap", cache).features
        rep = omnifid_from_features(ca, cb, min_samples=args.min_samples)
        results["fid_bar"] = {g.value: rep.fid_bar[g] for g in VIEW_GROUPS}
        results["omnifid"] = rep.omnifid
    return results


def _write_metric_report(command, args, results, started, extractor, caught):
    report = make_report(command, args, results, started=started, caught=caught,
                         provenance={"extractor": extractor.describe()})
    if args.format == "csv":
        _emit(_csv_text(["metric", "group", "value"], metric_rows(results)), args.out)
    else:
        _emit(_dump_json(report), args.out)
    return report


# ---------------------------------------------------------------- commands

def cmd_fid(args, *, omni=False):
    started = time.time()
    extractor = make_extractor(args.extractor, args.model_path)
    ref, ev = scan(args.ref), scan(args.eval)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        results = compute_metrics(ref, ev, extractor, args, _cache(args), omni=omni)
    for w in caught:
        log.warning("%s", w.message)
    _write_metric_report("omnifid" if omni else "fid", args, results, started, extractor, caught)
    return 0


def cmd_omnifid(args):
    return cmd_fid(args, omni=True)


def cmd_ds(args):
    started = time.time()
    cfg = DsConfig(args.ds_kernel, args.ds_c)
    manifest = scan(args.eval)
    target = _target(args)

    def score(entry):
        img = load_and_normalize(manifest.abspath(entry), target, args.strict_aspect)
        return ds_image(img, cfg)

    entries = list(manifest)
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            scores = list(pool.map(score, entries))
    else:
        scores = [score(e) for e in entries]
    summary = summarize_scores([e.path for e in entries], scores)
    rows = summary.rows()
    report = make_report("ds", args, {"ds": summary.to_dict()}, started=started,
                         provenance={"ds": cfg.to_dict()},
                         per_image=[{"path": p, "ds": s} for p, s in rows])
    table = _csv_text(["path", "ds"], rows)
    if args.out is None:
        _emit(table if args.format == "csv" else _dump_json(report), None)
    else:
        out = Path(args.out)
        if args.format == "csv":
            _emit(table, out)
            _emit(_dump_json(report), out.with_name(out.stem + "_summary.json"))
        else:
            _emit(_dump_json(report), out)
            _emit(table, out.with_name(out.stem + "_scores.csv"))
    return 0


def cmd_corrupt(args):
    manifest = scan(args.input)
    sweeps = [parse_sweep(s) for s in args.sweep] or [(k, list(DEFAULT_SWEEPS[k])) for k in
                                                       ("salt_pepper", "gaussian_noise", "gaussian_blur")]
    out_root = Path(args.out)
    if out_root.resolve() == Path(manifest.root).resolve():
        raise InvalidInputError("output directory must differ from the input directory")
    target = _target(args)
    entries = list(enumerate(manifest))
    # decode once; corruption is applied to the (resized) equirect images
    images = [load_and_normalize(manifest.abspath(e), target, args.strict_aspect) for _, e in entries]
    for kind, levels in sweeps:
        for level in levels:
            level_dir = out_root / level_dirname(kind, level)

            def work(item, kind=kind, level=level, level_dir=level_dir):
                idx, entry = item
                pixels = to_uint8(apply_corruption(images[idx], kind, level, args.seed, idx))
                rel = Path(entry.path).with_suffix(".png").as_posix()
                save_image(level_dir / rel, pixels)
                return ManifestEntry(rel, rel, pixel_hash(pixels), pixels.shape[1], pixels.shape[0])

            if args.jobs > 1:
                with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                    written = list(pool.map(work, entries))
            else:
                written = [work(item) for item in entries]
            level_manifest = DatasetManifest(os.fspath(level_dir), sorted(written, key=lambda e: e.path))
            level_manifest.write(level_dir / "manifest.json")
            log.info("wrote %s (%d images)", level_dir, len(written))
    return 0


def cmd_project(args):
    manifest = scan(args.input)
    out_root = Path(args.out)
    target = _target(args)
    for entry in manifest:
        img = load_and_normalize(manifest.abspath(entry), target, args.strict_aspect)
        cm = equirect_to_cubemap(img, args.face_size, args.sampling)
        stem = Path(entry.path).with_suffix("")
        for face in FACES:
            save_image(out_root / f"{stem.as_posix()}_{face.value}.png", cm.faces[face])
    return 0


def cmd_sweep(args):
    """FID/OmniFID of every ``kind_level`` directory under --eval against --ref."""
    started = time.time()
    extractor = make_extractor(args.extractor, args.model_path)
    ref = scan(args.ref)
    cache = _cache(args)
    rows = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for sub in sorted(p for p in Path(args.eval).iterdir() if p.is_dir()):
            kind, _, level = sub.name.rpartition("_")
            if kind not in CORRUPTIONS:
                continue
            res = compute_metrics(ref, scan(sub), extractor, args, cache)
            rows.append((kind, float(level), res["fid"], res["omnifid"],
                         *(res["fid_bar"][g.value] for g in VIEW_GROUPS)))
    if not rows:
        raise InvalidInputError(f"no corruption level directories under {args.eval}")
    rows.sort(key=lambda r: (r[0], r[1]))
    header = ["kind", "level", "fid", "omnifid"] + [f"fid_bar_{g.value}" for g in VIEW_GROUPS]
    if args.format == "csv":
        _emit(_csv_text(header, rows), args.out)
    else:
        results = {"sweep": [dict(zip(header, r)) for r in rows]}
        _emit(_dump_json(make_report("sweep", args, results, started=started, caught=caught,
                                     provenance={"extractor": extractor.describe()})), args.out)
    return 0


def cmd_synth(args):
    out = Path(args.out)
    height = args.width // 2
    for i in range(args.count):
        if args.kind == "seam":
            img = synthetic.seam_panorama(args.width, height, args.seam_step * i, args.seed)
        else:
            img = synthetic.GENERATORS[args.kind](args.width, height, args.seed, i)
        save_image(out / f"{args.kind}_{i:04d}.png", img)
    return 0


# ---------------------------------------------------------------- parser

def _add_common_metric_flags(p, *, extractor=True, projection=True):
    p.add_argument("--resize", type=_size, metavar="WxH", help="resize images after decoding, e.g. 1024x512")
    p.add_argument("--strict-aspect", action=argparse.BooleanOptionalAction, default=True,
                   help="reject images that are not 2:1 (default: on)")
    p.add_argument("--jobs", type=_positive_int, default=os.cpu_count() or 1)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    if extractor:
        p.add_argument("--extractor", choices=EXTRACTORS, default="mock")
        p.add_argument("--model-path", default=None,
                       help="ONNX model file (falls back to $SPHEREMETRIC_MODEL)")
        p.add_argument("--cache", default=None, help="feature cache file")
        p.add_argument("--min-samples", type=int, default=DEFAULT_MIN_SAMPLES,
                       help="warn when a set has fewer samples than this")
    if projection:
        p.add_argument("--face-size", type=int, default=None, help="cubemap face size (default: height / 2)")
        p.add_argument("--sampling", choices=SAMPLING_METHODS, default="bilinear")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spheremetric", description="Geometry-aware fidelity metrics for spherical images.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, help_ in (("fid", cmd_fid, "FID between two equirect datasets"),
                              ("omnifid", cmd_omnifid, "FID, per-group FID-bar and OmniFID")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--ref", required=True)
        p.add_argument("--eval", required=True)
        _add_common_metric_flags(p)
        p.add_argument("--config", help="JSON run config or earlier report to replay")
        p.set_defaults(func=func)

    p = sub.add_parser("ds", help="Discontinuity Score of every image in a dataset")
    p.add_argument("--eval", required=True)
    p.add_argument("--ds-kernel", choices=sorted(KERNELS), default="scharr_second_order")
    p.add_argument("--ds-c", type=float, default=0.1)
    _add_common_metric_flags(p, extractor=False, projection=False)
    p.add_argument("--config", help="JSON run config or earlier report to replay")
    p.set_defaults(func=cmd_ds)

    p = sub.add_parser("corrupt", help="write corrupted copies of a dataset, one directory per level")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sweep", action="append", default=[],
                   help="KIND or KIND:L1,L2,... (repeatable); kinds: " + ", ".join(CORRUPTIONS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resize", type=_size, metavar="WxH")
    p.add_argument("--strict-aspect", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--jobs", type=_positive_int, default=os.cpu_count() or 1)
    p.add_argument("--config", help="JSON run config")
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("project", help="write six cubemap faces per equirect image")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--face-size", type=int, default=None)
    p.add_argument("--sampling", choices=SAMPLING_METHODS, default="bilinear")
    p.add_argument("--resize", type=_size, metavar="WxH")
    p.add_argument("--strict-aspect", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--config", help="JSON run config")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("sweep", help="FID/OmniFID table over the level directories written by corrupt")
    p.add_argument("--ref", required=True)
    p.add_argument("--eval", required=True, help="directory holding KIND_LEVEL subdirectories")
    _add_common_metric_flags(p)
    p.add_argument("--config", help="JSON run config")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="write a synthetic equirect dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("pole", "smooth", "seam"), default="pole")
    p.add_argument("--count", type=_positive_int, default=64)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seam-step", type=float, default=8.0, help="seam contrast increment for --kind seam")
    p.add_argument("--config", help="JSON run config")
    p.set_defaults(func=cmd_synth)
    return parser


def _load_config(path):
    data = json.loads(Path(path).read_text())
    # a report carries its run config under "config"
    if "schema_version" in data and isinstance(data.get("config"), dict):
        data = data["config"]
    return {k.replace("-", "_"): v for k, v in data.items() if k != "command"}


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        subparser.set_defaults(**{k: v for k, v in _load_config(args.config).items() if k in known})
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SpheremetricError as exc:
        print(f"spheremetric: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"spheremetric: error: cannot read config: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SpheremetricError as exc:
        print(f"spheremetric: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
