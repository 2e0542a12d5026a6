"""Command-line entry point.

Exit codes: 0 success, 1 validation error, 2 I/O error. Every command
writes its outputs atomically and records a provenance entry in the
``run.json`` of its output directory.
"""

import argparse
import hashlib
import json
import logging
import os
import statistics
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, _backend, rng
from ._parallel import get_threads, set_threads
from .classic import DepthMap, all_in_focus, fm_curve, wta_depth
from .focusvol import (FocusVolume, aggregation_map, cumulative_variant, ddl_focus_volume,
                       laplacian_focus_volume, multiscale_volumes)
from .kernels import ANGLES, ddl_kernel, standard_laplacian
from .metrics import evaluate
from .noise import NoiseSpec, apply_noise
from .stackio import (StackManifest, load_stack, mean_image, read_depth,
                      read_manifest, read_pfm, to_grayscale, write_depth, write_image,
                      write_manifest, write_pfm, write_text_atomic)
from .synth import PATTERNS, TEXTURES, SynthSpec, generate

log = logging.getLogger("ddlsff")

UNIT_FLAGS = {"index": "index", "dist": "focal-distance"}


class ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


# --- provenance ----------------------------------------------------------

def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


class Run:
    """Collects inputs and outputs of one command for its provenance record."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.inputs = {}
        self.outputs = []
        self.t0 = time.perf_counter()
        self.started = datetime.now(timezone.utc).isoformat()
        self.extra = {}

    def input(self, path):
        path = Path(path)
        if path.is_file():
            self.inputs[str(path)] = _sha256(path)
        return path

    def manifest_inputs(self, manifest_path):
        self.input(manifest_path)
        for p in read_manifest(manifest_path).image_paths:
            self.input(p)

    def output(self, path):
        self.outputs.append(str(path))
        return path

    def record(self):
        flags = {k: _jsonable(v) for k, v in vars(self.args).items() if k not in ("func",)}
        return {
            "command": self.args.command,
            "argv": self.argv,
            "flags": flags,
            "seed": _seed(self.args),
            "threads": get_threads(),
            "version": __version__,
            "backend": _backend.name,
            "rng_algorithm": rng.ALGORITHM,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "started_utc": self.started,
            "wall_time_s": time.perf_counter() - self.t0,
            **self.extra,
        }


def _run_json_target(out_path, is_dir):
    out_path = Path(out_path)
    if is_dir:
        return out_path / "run.json", "."
    return out_path.parent / "run.json", out_path.name


def write_run_json(out_path, is_dir, record):
    path, key = _run_json_target(out_path, is_dir)
    doc = {"runs": {}}
    if path.exists():
        try:
            doc = json.loads(path.read_text())
        except ValueError:
            doc = {"runs": {}}
        doc.setdefault("runs", {})
    doc["runs"][key] = record
    write_text_atomic(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _seed(args):
    s = getattr(args, "seed", None)
    return args.global_seed if s is None else s


# --- helpers --------------------------------------------------------------

def _load_stack(run, manifest, gray=False):
    run.manifest_inputs(manifest)
    stack = load_stack(manifest)
    return to_grayscale(stack) if gray else stack


def _volume_from_stack(stack, r, cumulative, measure, border):
    if measure == "lap":
        return laplacian_focus_volume(stack, border)
    if cumulative:
        return cumulative_variant(multiscale_volumes(stack, r, border), r)
    return ddl_focus_volume(stack, r, border)


def _write_fv_dir(out, fv, focal_distances):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for s in range(fv.S):
        name = f"fv_{s:03d}.pfm"
        write_pfm(out / name, fv.values[s].astype(np.float32))
        files.append(name)
    index = {"kind": fv.kind, "rates": list(fv.rates), "S": fv.S, "H": fv.shape[1], "W": fv.shape[2],
             "files": files, "focal_distances": list(focal_distances), "dtype": "float32"}
    write_text_atomic(out / "index.json", json.dumps(index, indent=2) + "\n")
    return files


def read_fv_dir(path):
    """Load a focus volume written by ``fv``; returns (FocusVolume, focal distances)."""
    path = Path(path)
    index_path = path / "index.json"
    if not index_path.exists():
        raise FileNotFoundError(f"no index.json in {path}")
    index = json.loads(index_path.read_text())
    values = np.stack([read_pfm(path / f).astype(np.float64) for f in index["files"]])
    return FocusVolume(values, rates=tuple(index["rates"]), kind=index["kind"]), index["focal_distances"]


def _parse_px(text):
    try:
        x, y = (int(v) for v in text.split(","))
    except ValueError:
        raise ValidationError(f"--px expects X,Y integers, got {text!r}") from None
    return x, y


def _depth_format(path, fmt):
    if fmt:
        return fmt
    return "png16" if str(path).lower().endswith(".png") else "pfm"


# --- commands ------------------------------------------------------------

def cmd_kernels(args, run):
    k = standard_laplacian() if args.standard else ddl_kernel(args.r, args.theta)
    print(k.to_text())
    return None


def cmd_fv(args, run):
    stack = _load_stack(run, args.manifest, args.gray)
    fv = _volume_from_stack(stack, args.r, args.cumulative, args.measure, args.border)
    for f in _write_fv_dir(args.out, fv, stack.focal_distances):
        run.output(Path(args.out) / f)
    return args.out, True


def cmd_depth(args, run):
    if (args.fv is None) == (args.manifest is None):
        raise ValidationError("give exactly one of --fv or --manifest")
    if args.fv is not None:
        run.input(Path(args.fv) / "index.json")
        fv, dist = read_fv_dir(args.fv)
    else:
        stack = _load_stack(run, args.manifest, args.gray)
        fv = _volume_from_stack(stack, args.r, args.cumulative, args.measure, args.border)
        dist = stack.focal_distances
    depth = wta_depth(fv, UNIT_FLAGS[args.unit], dist)
    write_depth(depth, args.out, _depth_format(args.out, args.format))
    run.output(args.out)
    return args.out, False


def cmd_aif(args, run):
    stack = _load_stack(run, args.manifest)
    depth = DepthMap(read_depth(run.input(args.depth)), "index")
    aif = all_in_focus(stack, depth)
    write_image(args.out, aif, bits=args.bits)
    run.output(args.out)
    return args.out, False


def cmd_fmcurve(args, run):
    px = _parse_px(args.px)
    run.input(Path(args.fv) / "index.json")
    fv, _ = read_fv_dir(args.fv)
    gt = read_depth(run.input(args.gt)) if args.gt else None
    curve = fm_curve(fv, px, gt)
    curve.to_csv(args.out)
    run.output(args.out)
    run.extra["fm_curve"] = {"pixel": list(curve.pixel), "argmax_index": curve.argmax_index,
                             "gt_index": curve.gt_index}
    return args.out, False


def cmd_noise(args, run):
    spec = NoiseSpec(args.kind, args.param, _seed(args))
    run.manifest_inputs(args.manifest)
    manifest = read_manifest(args.manifest)
    noisy = apply_noise(load_stack(manifest), spec)
    out = Path(args.out)
    paths = []
    for s in range(noisy.S):
        p = out / f"slice_{s:03d}.pfm"
        write_pfm(p, noisy.data[s])
        paths.append(str(p))
        run.output(p)
    write_manifest(out / "manifest.json", StackManifest(paths, noisy.focal_distances, manifest.color_mode),
                   relative_to=out)
    run.output(out / "manifest.json")
    return out, True


def cmd_eval(args, run):
    unit = UNIT_FLAGS[args.unit]
    pred = DepthMap(read_depth(run.input(args.pred)), unit)
    gt = DepthMap(read_depth(run.input(args.gt)), unit)
    mask = None
    if args.mask:
        mask = read_depth(run.input(args.mask)) > 0
    report = evaluate(pred, gt, mask, args.badpix_t)
    write_text_atomic(args.out, json.dumps(report.to_dict(), indent=2) + "\n")
    run.output(args.out)
    return args.out, False


def cmd_refine(args, run):
    from . import refiner

    stack = _load_stack(run, args.manifest, gray=True)
    u = aggregation_map(multiscale_volumes(stack, args.r))
    if args.weights:
        weights = refiner.RefinerWeights.load(run.input(args.weights))
    else:
        weights = refiner.build_weights(stack.channels, u.depth, _seed(args))
    if args.save_weights:
        weights.save(args.save_weights)
        run.output(args.save_weights)
    biases = refiner.context_encode(mean_image(stack), weights)
    res = refiner.refine(u, biases, weights, iters=args.iters)
    write_depth(res.depth, args.out, _depth_format(args.out, None))
    run.output(args.out)
    if args.dump_intermediates:
        d = Path(args.dump_intermediates)
        for t, inter in enumerate(res.intermediates, start=1):
            p = d / f"depth_iter_{t:03d}.pfm"
            write_depth(inter, p)
            run.output(p)
    run.extra["weights_checksum"] = weights.checksum()
    return args.out, False


def cmd_synth(args, run):
    spec = SynthSpec(H=args.h, W=args.w, S=args.s, depth_pattern=args.pattern, texture=args.texture,
                     blur_scale=args.blur_scale, seed=_seed(args), steps=args.steps)
    stack, gt = generate(spec)
    out = Path(args.out)
    paths = []
    for s in range(stack.S):
        p = out / f"slice_{s:03d}.png"
        write_image(p, stack.data[s], bits=16)
        paths.append(str(p))
        run.output(p)
    write_manifest(out / "manifest.json", StackManifest(paths, stack.focal_distances, "gray"), relative_to=out)
    write_depth(gt, out / "gt.pfm")
    run.output(out / "manifest.json")
    run.output(out / "gt.pfm")
    return out, True


def cmd_pipeline(args, run):
    stack = _load_stack(run, args.manifest, args.gray)
    fv = _volume_from_stack(stack, args.r, args.cumulative, args.measure, args.border)
    unit = UNIT_FLAGS[args.unit]
    depth = wta_depth(fv, unit, stack.focal_distances)
    out = Path(args.out)
    write_depth(depth, out / "depth.pfm")
    run.output(out / "depth.pfm")
    index_depth = depth if unit == "index" else wta_depth(fv, "index")
    write_image(out / "aif.png", all_in_focus(stack, index_depth))
    run.output(out / "aif.png")
    if args.eval:
        gt = DepthMap(read_depth(run.input(args.eval)), unit)
        report = evaluate(depth, gt, None, args.badpix_t)
        write_text_atomic(out / "report.json", json.dumps(report.to_dict(), indent=2) + "\n")
        run.output(out / "report.json")
    return out, True


def cmd_timeit(args, run):
    if args.repeat < 1:
        raise ValidationError("--repeat must be >= 1")
    sub = list(args.subcommand)
    if sub and sub[0] == "--":
        sub = sub[1:]
    if not sub or sub[0] not in COMMANDS or sub[0] == "timeit":
        raise ValidationError(f"timeit needs a subcommand to run, one of {sorted(set(COMMANDS) - {'timeit'})}")
    parser = build_parser()
    sub_args = parser.parse_args(["--threads", str(get_threads()), "--seed", str(args.global_seed)] + sub)
    times = []
    target = None
    for _ in range(args.repeat):
        sub_run = Run(sub_args, sub)
        t0 = time.perf_counter()
        target = sub_args.func(sub_args, sub_run)
        times.append(time.perf_counter() - t0)
        if target is not None:
            write_run_json(target[0], target[1], sub_run.record())
    timing = {"command": sub[0], "argv": sub, "repeat": args.repeat, "threads": get_threads(),
              "backend": _backend.name, "times_s": times, "mean_s": statistics.fmean(times),
              "std_s": statistics.pstdev(times) if len(times) > 1 else 0.0}
    print(json.dumps(timing))
    if target is not None:
        path, key = _run_json_target(*target)
        doc = json.loads(path.read_text())
        doc["runs"][key].setdefault("timings", []).append(timing)
        write_text_atomic(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return None


COMMANDS = {
    "kernels": cmd_kernels, "fv": cmd_fv, "depth": cmd_depth, "aif": cmd_aif, "fmcurve": cmd_fmcurve,
    "noise": cmd_noise, "eval": cmd_eval, "refine": cmd_refine, "synth": cmd_synth,
    "pipeline": cmd_pipeline, "timeit": cmd_timeit,
}


# --- parser -------------------------------------------------------------

def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _uint64(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _fv_flags(p, rate_required=True):
    p.add_argument("--r", type=_positive_int, required=rate_required, default=None if rate_required else 4,
                   help="dilation rate (with --cumulative: highest rate included)")
    p.add_argument("--cumulative", action="store_true", help="average the volumes of rates 1..r")
    p.add_argument("--measure", choices=("ddl", "lap"), default="ddl")
    p.add_argument("--border", choices=("replicate", "reflect", "zero"), default="replicate")
    p.add_argument("--gray", action="store_true", help="convert the stack to grayscale first")


def build_parser():
    parser = _Parser(prog="ddlsff", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1)
    parser.add_argument("--seed", dest="global_seed", type=_uint64, default=0)
    parser.add_argument("--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = subs.add_parser("kernels", help="print a kernel as a text matrix")
    p.add_argument("action", choices=("dump",))
    p.add_argument("--r", type=_positive_int, default=1)
    p.add_argument("--theta", type=int, choices=ANGLES, default=0)
    p.add_argument("--standard", action="store_true", help="dump the 3x3 Laplacian instead")

    p = subs.add_parser("fv", help="compute a focus volume")
    p.add_argument("--manifest", required=True)
    _fv_flags(p)
    p.add_argument("--out", required=True)

    p = subs.add_parser("depth", help="winner-takes-all depth")
    p.add_argument("--fv")
    p.add_argument("--manifest")
    _fv_flags(p, rate_required=False)
    p.add_argument("--unit", choices=tuple(UNIT_FLAGS), default="index")
    p.add_argument("--format", choices=("pfm", "png16"))
    p.add_argument("--out", required=True)

    p = subs.add_parser("aif", help="all-in-focus composite")
    p.add_argument("--manifest", required=True)
    p.add_argument("--depth", required=True)
    p.add_argument("--bits", type=int, choices=(8, 16), default=8)
    p.add_argument("--out", required=True)

    p = subs.add_parser("fmcurve", help="export one pixel's focus curve as CSV")
    p.add_argument("--fv", required=True)
    p.add_argument("--px", required=True, help="X,Y")
    p.add_argument("--gt")
    p.add_argument("--out", required=True)

    p = subs.add_parser("noise", help="corrupt a stack")
    p.add_argument("--manifest", required=True)
    p.add_argument("--kind", choices=("gaussian", "salt_pepper", "speckle"), required=True)
    p.add_argument("--param", type=float, required=True)
    p.add_argument("--seed", type=_uint64)
    p.add_argument("--out", required=True)

    p = subs.add_parser("eval", help="evaluate a depth map against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--mask")
    p.add_argument("--badpix-t", type=float, required=True)
    p.add_argument("--unit", choices=tuple(UNIT_FLAGS), required=True)
    p.add_argument("--out", required=True)

    p = subs.add_parser("refine", help="recurrent depth refinement with seeded weights")
    p.add_argument("--manifest", required=True)
    p.add_argument("--iters", type=_positive_int, default=32)
    p.add_argument("--r", type=_positive_int, default=4)
    p.add_argument("--seed", type=_uint64)
    p.add_argument("--weights", help="load weights instead of generating them")
    p.add_argument("--save-weights")
    p.add_argument("--dump-intermediates")
    p.add_argument("--out", required=True)

    p = subs.add_parser("synth", help="synthetic stack with ground truth")
    p.add_argument("--h", type=_positive_int, default=64)
    p.add_argument("--w", type=_positive_int, default=64)
    p.add_argument("--s", type=_positive_int, default=10)
    p.add_argument("--pattern", choices=PATTERNS, default="staircase")
    p.add_argument("--texture", choices=TEXTURES, default="noise-texture")
    p.add_argument("--blur-scale", type=float, default=SynthSpec.blur_scale)
    p.add_argument("--steps", type=_positive_int, default=4)
    p.add_argument("--seed", type=_uint64)
    p.add_argument("--out", required=True)

    p = subs.add_parser("pipeline", help="manifest -> focus volume -> depth -> AIF -> metrics")
    p.add_argument("--manifest", required=True)
    _fv_flags(p, rate_required=False)
    p.add_argument("--unit", choices=tuple(UNIT_FLAGS), default="index")
    p.add_argument("--eval", help="ground-truth depth map")
    p.add_argument("--badpix-t", type=float)
    p.add_argument("--out", default="pipeline_out")

    p = subs.add_parser("timeit", help="time another subcommand")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("subcommand", nargs=argparse.REMAINDER)

    for name, fn in COMMANDS.items():
        subs.choices[name].set_defaults(func=fn)
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
    except ValidationError as exc:
        print(f"ddlsff: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    set_threads(args.threads)
    run = Run(args, argv)
    try:
        target = args.func(args, run)
        if target is not None:
            path = write_run_json(target[0], target[1], run.record())
            log.info("provenance written to %s", path)
    except (ValidationError, ValueError) as exc:
        print(f"ddlsff: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ddlsff: I/O error: {exc}", file=sys.stderr)
        return 2
    return 0
