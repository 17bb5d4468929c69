"""Command-line front end.

Subcommands: simulate, recon, superres, eval, render, sweep. Exit codes:
0 success, 2 config error, 3 data error, 4 numerical failure. Errors print
one machine-parsable line to stderr: ``error: <kind>: <message>``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import arrayio, pipeline
from .errors import ConfigError, DataError, NumericalError
from .metrics import evaluate_reconstruction
from .nufft import CoilMaps
from .phantom import DynamicImage
from .runconfig import default_config_text, load_config
from .version import __version__

_EXIT_CODES = {ConfigError: 2, DataError: 3, NumericalError: 4}
_thread_limiter = None


def _apply_threads(threads: int | None, deterministic: bool) -> None:
    """Cap BLAS/OpenMP pools; determinism pins the reduction order by
    forcing single-threaded kernels."""
    global _thread_limiter
    limit = 1 if deterministic else threads
    if limit is None:
        return
    import threadpoolctl

    _thread_limiter = threadpoolctl.threadpool_limits(limits=int(limit))


def _add_common(parser: argparse.ArgumentParser, config_required: bool) -> None:
    parser.add_argument(
        "--config", type=Path, required=config_required, help="run configuration file"
    )
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--threads", type=int, default=None, help="thread cap for numerics")
    parser.add_argument(
        "--deterministic",
        action="store_true",
        help="force bitwise-reproducible reductions (single-threaded kernels)",
    )
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument(
        "--precision",
        choices=("f32", "f64"),
        default="f64",
        help="storage precision for written arrays (math always runs in f64)",
    )


def _experiment(args: argparse.Namespace) -> pipeline.ExperimentSpec:
    cfg = load_config(args.config)
    spec = pipeline.experiment_from_config(
        cfg,
        out_dir=str(args.out) if args.out else None,
        seed=args.seed,
        deterministic=True if args.deterministic else None,
        precision=args.precision,
    )
    _apply_threads(args.threads, spec.recon_config.deterministic)
    return spec


def _progress_printer(every: int = 50):
    def emit(row) -> None:
        if row.epoch == 1 or row.epoch % every == 0:
            print(
                f"epoch {row.epoch}: dc={row.dc:.6g} tv={row.tv:.6g} "
                f"lr_term={row.lr_term:.6g} total={row.total:.6g}",
                file=sys.stderr,
                flush=True,
            )

    return emit


def _cmd_simulate(args: argparse.Namespace) -> int:
    spec = _experiment(args)
    out = args.out or Path(spec.out_dir) / "dataset"
    pipeline.simulate_to_dir(spec, out)
    print(f"dataset written to {out}")
    return 0


def _cmd_recon(args: argparse.Namespace) -> int:
    spec = _experiment(args)
    recon, metrics, report = pipeline.run_reconstruction(
        spec, progress=_progress_printer()
    )
    line = f"recon written to {spec.out_dir} (final total loss {report.final().total:.6g}"
    if metrics is not None:
        line += f", mean PSNR {metrics.mean_psnr:.2f} dB"
    print(line + ")")
    return 0


def _cmd_superres(args: argparse.Namespace) -> int:
    _apply_threads(args.threads, args.deterministic)
    out = args.out or Path("superres_out")
    image = pipeline.run_superres(
        args.checkpoint, args.factor, out_dir=out, precision=args.precision
    )
    print(f"superres ({image.frames} frames) written to {out}")
    return 0


def _load_image_array(path: Path) -> np.ndarray:
    arr, _ = arrayio.read_array(path)
    if arr.ndim != 3:
        raise DataError(f"expected a 3D (n, n, frames) array in {path}")
    return arr.astype(np.complex128)


def _cmd_eval(args: argparse.Namespace) -> int:
    recon = _load_image_array(args.recon)
    truth = _load_image_array(args.truth)
    if args.coils is not None:
        maps, _ = arrayio.read_array(args.coils)
        coils = CoilMaps(maps=maps.astype(np.complex128))
    else:
        coils = CoilMaps(maps=np.ones((1,) + recon.shape[:2], dtype=np.complex128))
    report = evaluate_reconstruction(recon, truth, coils)
    out = args.out or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    arrayio.write_metrics_csv(out / "metrics.csv", report)
    s = report.summary()
    print(
        f"psnr_mean={s['psnr_mean']:.4f} ssim_mean={s['ssim_mean']:.6f} "
        f"nrmse_mean={s['nrmse_mean']:.6f}"
    )
    return 0


def _cmd_render(args: argparse.Namespace) -> int:
    arr = _load_image_array(args.array)
    out = args.out or Path("render_out")
    out.mkdir(parents=True, exist_ok=True)
    info = pipeline._write_renders(out, arr, args.column, "frame")
    arrayio.write_manifest(out / "render_manifest.json", info)
    print(f"{info['frames']} frames + y-t slice written to {out}")
    return 0


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad float list for {flag}: {text!r}") from exc


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec = _experiment(args)
    ls = _parse_floats(args.lambda_s, "--lambda-s")
    ll = _parse_floats(args.lambda_l, "--lambda-l")

    def progress(row: dict) -> None:
        print(
            f"cell lambda_s={row['lambda_s']:g} lambda_l={row['lambda_l']:g}: "
            f"{row['status']} psnr={row.get('psnr_mean', float('nan')):.3f}",
            file=sys.stderr,
            flush=True,
        )

    rows = pipeline.sweep_hyperparameters(spec, ls, ll, progress=progress)
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pipeline.write_sweep_csv(out / "sweep.csv", rows)
    best = rows[0]
    print(
        f"best cell: lambda_s={best['lambda_s']:g} lambda_l={best['lambda_l']:g} "
        f"psnr_mean={best['psnr_mean']:.3f} (sweep.csv in {out})"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inrmri",
        description="Dynamic MRI reconstruction with an implicit neural representation.",
        epilog="Config template:\n\n" + default_config_text(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a retrospectively undersampled dataset")
    _add_common(p, config_required=True)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("recon", help="train the INR and write reconstruction artifacts")
    _add_common(p, config_required=True)
    p.set_defaults(fn=_cmd_recon)

    p = sub.add_parser("superres", help="temporal super-resolution from a checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--factor", type=int, required=True, help="temporal upsampling factor R")
    _add_common(p, config_required=False)
    p.set_defaults(fn=_cmd_superres)

    p = sub.add_parser("eval", help="metrics CSV for a reconstruction vs ground truth")
    p.add_argument("--recon", type=Path, required=True)
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--coils", type=Path, default=None)
    _add_common(p, config_required=False)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("render", help="8-bit grayscale frame and y-t dumps")
    p.add_argument("--array", type=Path, required=True)
    p.add_argument("--column", type=int, default=-1, help="y-t column (-1: center)")
    _add_common(p, config_required=False)
    p.set_defaults(fn=_cmd_render)

    p = sub.add_parser("sweep", help="grid-search lambda_s/lambda_l, ranked by PSNR")
    p.add_argument("--lambda-s", required=True, help="comma-separated values")
    p.add_argument("--lambda-l", required=True, help="comma-separated values")
    _add_common(p, config_required=True)
    p.set_defaults(fn=_cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, DataError, NumericalError) as exc:
        kind = {ConfigError: "config", DataError: "data", NumericalError: "numerical"}[
            type(exc)
        ]
        print(f"error: {kind}: {exc}", file=sys.stderr)
        return _EXIT_CODES[type(exc)]


if __name__ == "__main__":
    sys.exit(main())
