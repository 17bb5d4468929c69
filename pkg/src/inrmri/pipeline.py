"""End-to-end experiment orchestration: simulate, reconstruct, super-resolve,
evaluate, sweep. Every run writes a manifest that, together with the
checkpoint, is sufficient to regenerate all other artifacts."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import arrayio
from .errors import DataError
from .inr import ModelConfig, make_coordinates, model_forward
from .metrics import MetricsReport, evaluate_reconstruction
from .nufft import make_plans, multicoil_adjoint
from .phantom import (
    DynamicImage,
    KSpaceDataset,
    PhantomSpec,
    default_phantom_spec,
    generate_dynamic_image,
    retrospective_undersample,
    simulate_coil_maps,
)
from .runconfig import RunConfig
from .trajectory import golden_angle_trajectory, ramp_density_weights
from .training import LossReport, ReconConfig, train
from .version import __version__


def acceleration_factor(n: int, spokes_per_frame: int) -> float:
    """AF = full Cartesian lines / acquired spokes per frame."""
    return n / spokes_per_frame


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one run."""

    phantom: PhantomSpec | None
    data_dir: str | None
    coils: int
    spokes_per_frame: int
    samples_per_spoke: int
    model_config: ModelConfig
    recon_config: ReconConfig
    kernel_width: int
    oversampling: float
    out_dir: str
    save_images: bool = True
    save_yt: bool = True
    yt_column: int = -1
    save_metrics: bool = True
    save_loss: bool = True
    save_checkpoint: bool = True
    precision: str = "f64"

    def acceleration_factor(self) -> float:
        n = self.grid_size()
        return n / self.spokes_per_frame

    def grid_size(self) -> int:
        if self.phantom is not None:
            return self.phantom.n
        raise DataError("grid size of an external dataset comes from its files")


def experiment_from_config(
    cfg: RunConfig,
    out_dir: str | None = None,
    seed: int | None = None,
    deterministic: bool | None = None,
    precision: str = "f64",
) -> ExperimentSpec:
    recon = cfg.recon_config()
    if seed is not None:
        recon = replace(recon, seed=seed)
    if deterministic is not None:
        recon = replace(recon, deterministic=deterministic)
    data_dir = cfg.get("phantom", "data_dir") or None
    phantom = None
    if data_dir is None:
        phantom = replace(
            default_phantom_spec(cfg.get("phantom", "n"), cfg.get("phantom", "frames")),
            noise_std=cfg.get("phantom", "noise_std"),
        )
    return ExperimentSpec(
        phantom=phantom,
        data_dir=data_dir,
        coils=cfg.get("phantom", "coils"),
        spokes_per_frame=cfg.get("trajectory", "spokes_per_frame"),
        samples_per_spoke=cfg.samples_per_spoke(),
        model_config=cfg.model_config(),
        recon_config=recon,
        kernel_width=cfg.get("recon", "kernel_width"),
        oversampling=cfg.get("recon", "oversampling"),
        out_dir=out_dir or cfg.get("output", "dir"),
        save_images=cfg.get("output", "save_images"),
        save_yt=cfg.get("output", "save_yt"),
        yt_column=cfg.get("output", "yt_column"),
        save_metrics=cfg.get("output", "save_metrics"),
        save_loss=cfg.get("output", "save_loss"),
        save_checkpoint=cfg.get("output", "save_checkpoint"),
        precision=precision,
    )


def prepare_data(spec: ExperimentSpec) -> tuple[KSpaceDataset, DynamicImage | None]:
    """Simulate the dataset, or load an externally supplied one."""
    if spec.data_dir is not None:
        return arrayio.load_dataset(spec.data_dir)
    phantom = spec.phantom
    truth = generate_dynamic_image(phantom)
    traj = golden_angle_trajectory(
        phantom.n, phantom.frames, spec.spokes_per_frame, spec.samples_per_spoke
    )
    coils = simulate_coil_maps(phantom.n, spec.coils, seed=spec.recon_config.seed)
    dataset = retrospective_undersample(
        truth,
        coils,
        traj,
        noise_std=phantom.noise_std,
        seed=spec.recon_config.seed,
        oversampling=spec.oversampling,
        kernel_width=spec.kernel_width,
    )
    return dataset, truth


def _storage_dtype(precision: str) -> str:
    return np.complex64 if precision == "f32" else np.complex128


def _write_renders(
    out_dir: Path, data: np.ndarray, yt_column: int, prefix: str
) -> dict:
    """Per-frame PGMs plus the y-t slice (a fixed column unrolled over time),
    windowed by the sequence-global magnitude range."""
    mag = np.abs(data)
    lo, hi = float(mag.min()), float(mag.max())
    if hi <= lo:
        hi = lo + 1.0
    frames = data.shape[2]
    col = yt_column if yt_column >= 0 else data.shape[1] // 2
    if not 0 <= col < data.shape[1]:
        raise DataError(f"y-t column {col} outside image width {data.shape[1]}")
    for t in range(frames):
        arrayio.write_pgm(
            out_dir / f"{prefix}_{t:03d}.pgm", arrayio.to_uint8(mag[:, :, t], lo, hi)
        )
    yt = mag[:, col, :]  # (n rows, frames)
    arrayio.write_pgm(out_dir / f"{prefix}_yt.pgm", arrayio.to_uint8(yt, lo, hi))
    return {"window_lo": lo, "window_hi": hi, "yt_column": col, "frames": frames}


def _spec_manifest(spec: ExperimentSpec, dataset: KSpaceDataset) -> dict:
    traj = dataset.trajectory
    af = acceleration_factor(traj.n, traj.spokes_per_frame)
    manifest: dict = {
        "version": __version__,
        "acceleration_factor": af,
        "acceleration_factor_display": f"{af:.1f}",
        "acceleration_factor_formula": "full Cartesian lines N / spokes per frame M",
        "grid_size": traj.n,
        "frames": traj.frames,
        "spokes_per_frame": traj.spokes_per_frame,
        "samples_per_spoke": traj.samples_per_spoke,
        "coils": dataset.coils.num_coils,
        "seed": spec.recon_config.seed,
        "deterministic": spec.recon_config.deterministic,
        "precision": spec.precision,
        "recon": {
            "lambda_s": spec.recon_config.lambda_s,
            "lambda_l": spec.recon_config.lambda_l,
            "eps_dc": spec.recon_config.eps_dc,
            "lr": spec.recon_config.lr,
            "epochs": spec.recon_config.epochs,
            "kernel_width": spec.kernel_width,
            "oversampling": spec.oversampling,
        },
        "encoder": {
            "levels": spec.model_config.encoder.levels,
            "log2_table_size": spec.model_config.encoder.log2_table_size,
            "features_per_level": spec.model_config.encoder.features_per_level,
            "base_resolution": spec.model_config.encoder.base_resolution,
            "growth_factor": spec.model_config.encoder.growth_factor,
            "hidden_layers": spec.model_config.hidden_layers,
            "hidden_units": spec.model_config.hidden_units,
        },
        "spec_sha256": _spec_hash(spec),
    }
    return manifest


def _spec_hash(spec: ExperimentSpec) -> str:
    import hashlib

    blob = json.dumps(
        {
            "phantom": None if spec.phantom is None else repr(spec.phantom),
            "data_dir": spec.data_dir,
            "coils": spec.coils,
            "spokes_per_frame": spec.spokes_per_frame,
            "samples_per_spoke": spec.samples_per_spoke,
            "model": repr(spec.model_config),
            "recon": repr(spec.recon_config),
            "kernel_width": spec.kernel_width,
            "oversampling": spec.oversampling,
        },
        sort_keys=True,
    ).encode()
    return hashlib.sha256(blob).hexdigest()


def simulate_to_dir(spec: ExperimentSpec, out_dir: str | Path) -> dict:
    """Write ground truth, coil maps, trajectory, k-space and manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset, truth = prepare_data(spec)
    arrayio.save_dataset(out, dataset, truth=truth, precision=spec.precision)
    manifest = _spec_manifest(spec, dataset)
    manifest["artifacts"] = sorted(p.name for p in out.iterdir() if p.is_file())
    manifest["input_files"] = {
        name: arrayio.sha256_of(out / name)
        for name in ("kspace.arr", "coils.arr", "traj.arr")
    }
    arrayio.write_manifest(out / "manifest.json", manifest)
    return manifest


def reconstruct_image(
    params, model_config: ModelConfig, n: int, frames: int
) -> DynamicImage:
    batch = make_coordinates(n, frames)
    values, _ = model_forward(batch, params, model_config)
    return DynamicImage(data=values.reshape(n, n, frames))


def run_reconstruction(
    spec: ExperimentSpec, progress=None
) -> tuple[DynamicImage, MetricsReport | None, LossReport]:
    """Train the representation on one dataset and write all requested
    artifacts (arrays, checkpoint, CSVs, grayscale dumps, manifest).

    The density-compensated adjoint baseline of the same data is written
    alongside for comparison."""
    dataset, truth = prepare_data(spec)
    traj = dataset.trajectory
    plans = make_plans(traj, spec.oversampling, spec.kernel_width)

    params, report = train(
        dataset, spec.recon_config, spec.model_config, plans=plans, progress=progress
    )
    recon = reconstruct_image(params, spec.model_config, traj.n, traj.frames)

    metrics = None
    if truth is not None:
        metrics = evaluate_reconstruction(recon.data, truth.data, dataset.coils)
    baseline, baseline_metrics = run_baseline(spec, dataset=dataset, truth=truth)

    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dtype = _storage_dtype(spec.precision)
    arrayio.write_array(out / "recon.arr", recon.data.astype(dtype), semantic="recon")
    arrayio.write_array(
        out / "baseline.arr", baseline.data.astype(dtype), semantic="adjoint-baseline"
    )
    manifest = _spec_manifest(spec, dataset)
    manifest["final_loss"] = report.final()._asdict()
    if baseline_metrics is not None and spec.save_metrics:
        arrayio.write_metrics_csv(out / "baseline_metrics.csv", baseline_metrics)
        manifest["baseline_metrics"] = baseline_metrics.summary()

    if spec.save_checkpoint:
        arrayio.save_checkpoint(
            out / "checkpoint.ckpt",
            params,
            spec.model_config,
            seed=spec.recon_config.seed,
            n=traj.n,
            frames=traj.frames,
        )
    if spec.save_loss:
        arrayio.write_loss_csv(out / "loss.csv", report.rows)
    if metrics is not None and spec.save_metrics:
        arrayio.write_metrics_csv(out / "metrics.csv", metrics)
        manifest["metrics"] = metrics.summary()
    if spec.save_images or spec.save_yt:
        manifest["render"] = _write_renders(out, recon.data, spec.yt_column, "frame")

    manifest["artifacts"] = sorted(p.name for p in out.iterdir() if p.is_file())
    arrayio.write_manifest(out / "manifest.json", manifest)
    return recon, metrics, report


def run_baseline(
    spec: ExperimentSpec, dataset: KSpaceDataset | None = None, truth: DynamicImage | None = None
) -> tuple[DynamicImage, MetricsReport | None]:
    """Density-compensated multicoil adjoint ("zero-filled") reconstruction."""
    if dataset is None:
        dataset, truth = prepare_data(spec)
    traj = dataset.trajectory
    plans = make_plans(traj, spec.oversampling, spec.kernel_width)
    weights = ramp_density_weights(traj)
    img = multicoil_adjoint(dataset.samples, dataset.coils, plans, weights=weights)
    baseline = DynamicImage(data=img)
    metrics = None
    if truth is not None:
        metrics = evaluate_reconstruction(baseline.data, truth.data, dataset.coils)
    return baseline, metrics


def run_superres(
    checkpoint_path: str | Path, factor: int, out_dir: str | Path | None = None,
    precision: str = "f64",
) -> DynamicImage:
    """Query a trained checkpoint on an R-times denser time axis.

    The output has T + (T-1)(R-1) frames; the original frame coordinates
    reproduce the training-grid outputs exactly.
    """
    factor = int(factor)
    if factor < 1:
        raise DataError(f"super-resolution factor must be >= 1, got {factor}")
    params, model_config, header = arrayio.load_checkpoint(checkpoint_path)
    n, frames = header["n"], header["frames"]
    batch = make_coordinates(n, frames, temporal_upsample=factor)
    values, _ = model_forward(batch, params, model_config)
    data = values.reshape(n, n, batch.num_times)
    image = DynamicImage(data=data)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        arrayio.write_array(
            out / "superres.arr",
            data.astype(_storage_dtype(precision)),
            semantic="superres",
        )
        manifest = {
            "version": __version__,
            "factor": factor,
            "source_checkpoint": str(checkpoint_path),
            "checkpoint_sha256": arrayio.sha256_of(checkpoint_path),
            "n": n,
            "frames_in": frames,
            "frames_out": batch.num_times,
            "t_frames": [float(t) for t in batch.t_frames],
        }
        arrayio.write_manifest(out / "manifest.json", manifest)
    return image


def sweep_hyperparameters(
    spec: ExperimentSpec,
    lambda_s_values: list[float],
    lambda_l_values: list[float],
    progress=None,
) -> list[dict]:
    """Grid search over (lambda_s, lambda_l): one full training run per cell
    with a fixed seed, sorted by mean PSNR (best first). Failed cells are
    recorded and the sweep continues."""
    if not lambda_s_values or not lambda_l_values:
        raise DataError("sweep grid must be nonempty")
    dataset, truth = prepare_data(spec)
    if truth is None:
        raise DataError("hyperparameter sweep needs ground truth for PSNR ranking")
    traj = dataset.trajectory
    plans = make_plans(traj, spec.oversampling, spec.kernel_width)

    rows: list[dict] = []
    for ls in lambda_s_values:
        for ll in lambda_l_values:
            row: dict = {"lambda_s": ls, "lambda_l": ll, "status": "ok", "error": ""}
            try:
                cfg = replace(spec.recon_config, lambda_s=ls, lambda_l=ll)
                params, report = train(dataset, cfg, spec.model_config, plans=plans)
                recon = reconstruct_image(
                    params, spec.model_config, traj.n, traj.frames
                )
                metrics = evaluate_reconstruction(recon.data, truth.data, dataset.coils)
                row.update(metrics.summary())
                row["final_dc"] = report.final().dc
            except Exception as exc:  # keep sweeping past failed cells
                row["status"] = "failed"
                row["error"] = str(exc)
                row.update(
                    {k: float("nan") for k in (
                        "psnr_mean", "psnr_std", "ssim_mean", "ssim_std",
                        "nrmse_mean", "nrmse_std", "final_dc",
                    )}
                )
            rows.append(row)
            if progress is not None:
                progress(row)

    def sort_key(r: dict):
        p = r.get("psnr_mean", float("nan"))
        return (r["status"] != "ok", -p if np.isfinite(p) else float("inf"))

    rows.sort(key=sort_key)
    return rows


def write_sweep_csv(path: str | Path, rows: list[dict]) -> None:
    cols = [
        "lambda_s", "lambda_l", "status", "psnr_mean", "psnr_std",
        "ssim_mean", "ssim_std", "nrmse_mean", "nrmse_std", "final_dc", "error",
    ]
    lines = [",".join(cols)]
    for r in rows:
        cells = []
        for c in cols:
            v = r.get(c, "")
            if isinstance(v, float):
                cells.append(repr(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")
