"""Command-line entry point: ``voxmetrics <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import nifti_io, report
from .augment import AugmentSpec, apply_pipeline
from .errors import VoxError
from .metrics import evaluate_case
from .phantom import PhantomSpec, generate
from .preprocess import DEFAULT_CLIP_PERCENTILE, emit_training_protocol, preprocess_case
from .stats import ADJUSTMENTS
from .volume import resample_intensity, resample_labels

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
NIFTI_SUFFIXES = (".nii.gz", ".nii")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _triple(text: str, kind=float):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated values, got {text!r}")
    try:
        return tuple(kind(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_triple(text):
    return _triple(text, int)


def _default_jobs() -> int:
    env = os.environ.get("VOXMETRICS_JOBS", "1")
    try:
        return max(1, int(env))
    except ValueError:
        raise UsageError(f"VOXMETRICS_JOBS must be an integer, got {env!r}") from None


def parallel_map(fn, items, jobs: int):
    """Ordered map; the worker count only changes wall time."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _case_name(path: Path) -> str:
    name = path.name
    for suf in NIFTI_SUFFIXES:
        if name.endswith(suf):
            return name[: -len(suf)]
    return name


def _nifti_files(directory: Path) -> dict[str, Path]:
    return {p.name: p for p in sorted(directory.iterdir()) if p.name.endswith(NIFTI_SUFFIXES)}


def _require_file(path):
    if not Path(path).is_file():
        raise UsageError(f"no such file: {path}")


def _require_dir(path):
    if not Path(path).is_dir():
        raise UsageError(f"no such directory: {path}")


def _emit(data: bytes, out):
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))


# ---------------------------------------------------------------------------
# subcommands


def cmd_preprocess(args):
    _require_file(args.inp)
    vol = nifti_io.read_volume(args.inp)
    nifti_io.write_volume(preprocess_case(vol, args.clip_percentile), args.out)


def cmd_resample(args):
    _require_file(args.inp)
    if args.labels:
        out = resample_labels(nifti_io.read_volume(args.inp, labels=True), args.spacing)
    else:
        out = resample_intensity(nifti_io.read_volume(args.inp), args.spacing)
    nifti_io.write_volume(out, args.out)


def cmd_augment(args):
    _require_file(args.image)
    _require_file(args.labels)
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    spec = AugmentSpec()
    if args.config:
        _require_file(args.config)
        spec = AugmentSpec.from_json(Path(args.config).read_text(encoding="utf-8"))
    spec.seed = args.seed
    vol = nifti_io.read_volume(args.image)
    labels = nifti_io.read_volume(args.labels, labels=True)
    if vol.dims != labels.dims:
        raise VoxError(f"image {vol.dims} and labels {labels.dims} differ in shape")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = _case_name(Path(args.image))

    def one(i):
        v, l = apply_pipeline(spec, vol, labels, case_index=i)
        nifti_io.write_volume(v, out_dir / f"{stem}_aug{i:04d}_image.nii.gz")
        nifti_io.write_volume(l, out_dir / f"{stem}_aug{i:04d}_labels.nii.gz")

    parallel_map(one, range(args.count), args.jobs)


def cmd_evaluate(args):
    _require_dir(args.pred_dir)
    _require_dir(args.gt_dir)
    pred = _nifti_files(Path(args.pred_dir))
    gt = _nifti_files(Path(args.gt_dir))
    if set(pred) != set(gt):
        only_pred = sorted(set(pred) - set(gt))
        only_gt = sorted(set(gt) - set(pred))
        raise VoxError(f"prediction / ground-truth file sets differ: only in pred {only_pred}, only in gt {only_gt}")
    if not gt:
        raise VoxError(f"no NIfTI files in {args.gt_dir}")

    def one(name):
        p = nifti_io.read_volume(pred[name], labels=True)
        g = nifti_io.read_volume(gt[name], labels=True)
        return evaluate_case(p, g, _case_name(Path(name)), args.method)

    records = parallel_map(one, sorted(gt), args.jobs)
    report.save_records(records, args.out)


def _load_all(paths):
    records = []
    for p in paths:
        _require_file(p)
    for p in paths:
        records.extend(report.load_records(p))
    return records


def cmd_compare(args):
    records = _load_all(args.records)
    comp = report.compare_methods(records, args.metric, args.adjust, args.sample_unit)
    summaries = report.aggregate(records)
    _emit(report.render(summaries, {args.metric: comp}, args.format), args.out)


def cmd_report(args):
    records = _load_all(args.records)
    summaries = report.aggregate(records)
    comparison = None
    if args.with_stats:
        comparison = {m: report.compare_methods(records, m, args.adjust, args.sample_unit) for m in report.METRICS}
    _emit(report.render(summaries, comparison, args.format), args.out)


def cmd_phantom(args):
    spec = PhantomSpec(dims=args.dims, spacing=args.spacing, seed=args.seed, noise_sigma=args.noise_sigma)
    vol, labels = generate(spec)
    out = Path(args.out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    nifti_io.write_volume(vol, out / "images" / f"{args.name}.nii.gz")
    nifti_io.write_volume(labels, out / "labels" / f"{args.name}.nii.gz")


def cmd_protocol(args):
    Path(args.out).write_text(emit_training_protocol().to_json(), encoding="utf-8")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="voxmetrics", description="Volumetric segmentation preprocessing and evaluation.")
    parser.add_argument("--jobs", type=int, default=None, help="worker threads (default: $VOXMETRICS_JOBS or 1)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("preprocess", help="percentile clip + min-max scaling")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--clip-percentile", type=float, default=DEFAULT_CLIP_PERCENTILE)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("resample", help="resample to a new voxel spacing")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--spacing", type=_triple, required=True, help="e.g. 1.0,1.0,1.0 (mm)")
    p.add_argument("--labels", action="store_true", help="nearest-neighbour label resampling")
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("augment", help="write N augmented image/label pairs")
    p.add_argument("--image", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--config", help="JSON AugmentSpec overrides")
    p.add_argument("--count", type=int, default=1)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("evaluate", help="per-case DSC / IoU / HD95 records")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--method", required=True)
    p.add_argument("--out", required=True, help="records file, .csv or .json")
    p.set_defaults(func=cmd_evaluate)

    for name, func, helptext in (
        ("compare", cmd_compare, "Kruskal-Wallis + Dunn comparison of methods"),
        ("report", cmd_report, "method summary table"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--records", nargs="+", required=True)
        if name == "compare":
            p.add_argument("--metric", choices=report.METRICS, required=True)
        else:
            p.add_argument("--with-stats", action="store_true", help="append comparisons for all three metrics")
        p.add_argument("--adjust", choices=ADJUSTMENTS, default="bonferroni")
        p.add_argument("--sample-unit", choices=report.SAMPLE_UNITS, default="case_mean")
        p.add_argument("--format", choices=("text", "csv", "json"), default="text")
        p.add_argument("--out")
        p.set_defaults(func=func)

    p = sub.add_parser("phantom", help="synthetic labelled volume pair")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--dims", type=_int_triple, default=(64, 64, 64))
    p.add_argument("--spacing", type=_triple, default=(1.0, 1.0, 1.0))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--noise-sigma", type=float, default=5.0)
    p.add_argument("--name", default="phantom")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("protocol", help="write the two-stage training manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_protocol)
    return parser


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.jobs is None:
            args.jobs = _default_jobs()
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        # VoxError is a ValueError; json / csv / numpy parse failures land here too
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def main():
    sys.exit(run())
