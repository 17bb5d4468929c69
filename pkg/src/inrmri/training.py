"""Composite objective, Adam optimizer, and the full-batch training loop.

One epoch is one logical transaction: forward over every spatiotemporal
coordinate, loss evaluation, backward, parameter update. All reductions run
in fixed order, so a fixed seed reproduces the loss history bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import DataError, NumericalError
from .inr import (
    CoordinateBatch,
    ModelConfig,
    ModelParams,
    init_params,
    make_coordinates,
    model_backward,
    model_forward,
)
from .losses import dc_loss, nuclear_loss, tv_loss
from .nufft import NufftPlan, make_plans, multicoil_adjoint, multicoil_forward
from .phantom import KSpaceDataset


@dataclass(frozen=True)
class ReconConfig:
    """Loss weights and optimizer hyperparameters.

    The regularization weights have no universal default; they are mandatory
    inputs, normally taken from the repo-pinned sweep results (see the
    ``sweep`` CLI command).
    """

    lambda_s: float
    lambda_l: float
    eps_dc: float = 1e-4
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    epochs: int = 500
    seed: int = 0
    deterministic: bool = True

    def __post_init__(self) -> None:
        if self.lambda_s < 0 or self.lambda_l < 0:
            raise DataError("regularization weights must be >= 0")
        if self.eps_dc <= 0:
            raise DataError("eps_dc must be > 0")
        if self.lr <= 0:
            raise DataError("learning rate must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise DataError("beta1 and beta2 must lie in [0, 1)")
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0


def init_adam(params: ModelParams) -> AdamState:
    arrays = params.arrays()
    return AdamState(
        m=[np.zeros_like(a) for a in arrays],
        v=[np.zeros_like(a) for a in arrays],
        step=0,
    )


def adam_step(
    params: ModelParams, grads: ModelParams, state: AdamState, config: ReconConfig
) -> tuple[ModelParams, AdamState]:
    """Standard bias-corrected Adam update, applied in place element-wise."""
    p_arrays = params.arrays()
    g_arrays = grads.arrays()
    if len(p_arrays) != len(g_arrays) or any(
        p.shape != g.shape for p, g in zip(p_arrays, g_arrays)
    ):
        raise DataError("gradient shapes do not match parameter shapes")
    state.step += 1
    t = state.step
    bc1 = 1.0 - config.beta1**t
    bc2 = 1.0 - config.beta2**t
    for p, g, m, v in zip(p_arrays, g_arrays, state.m, state.v):
        m *= config.beta1
        m += (1.0 - config.beta1) * g
        v *= config.beta2
        v += (1.0 - config.beta2) * (g * g)
        p -= config.lr * (m / bc1) / (np.sqrt(v / bc2) + config.eps_adam)
    return params, state


class LossRow(NamedTuple):
    epoch: int
    dc: float
    tv: float
    lr_term: float
    total: float


@dataclass
class LossReport:
    rows: list[LossRow] = field(default_factory=list)

    def append(self, row: LossRow) -> None:
        self.rows.append(row)

    def final(self) -> LossRow:
        return self.rows[-1]


def total_loss(
    params: ModelParams,
    dataset: KSpaceDataset,
    config: ReconConfig,
    model_config: ModelConfig,
    plans: list[NufftPlan] | None = None,
    batch: CoordinateBatch | None = None,
) -> tuple[float, ModelParams, LossRow]:
    """Full objective value and parameter gradients for one epoch.

    Evaluates the model on the training grid, pushes the image through the
    multicoil forward operator, and combines the data-consistency term with
    the weighted TV and nuclear-norm regularizers. The image-domain gradient
    is the adjoint-propagated DC gradient plus the regularizer subgradients,
    then backpropagated through the network.
    """
    traj = dataset.trajectory
    if plans is None:
        plans = make_plans(traj)
    if batch is None:
        batch = make_coordinates(traj.n, traj.frames)

    values, cache = model_forward(batch, params, model_config)
    d = values.reshape(traj.n, traj.n, batch.num_times)

    pred = multicoil_forward(d, dataset.coils, plans)
    dc_value, dc_grad_pred = dc_loss(pred, dataset.samples, config.eps_dc)
    tv_value, tv_grad = tv_loss(d)
    nuc_value, nuc_grad = nuclear_loss(d)

    value = dc_value + config.lambda_s * tv_value + config.lambda_l * nuc_value

    grad_d = multicoil_adjoint(dc_grad_pred, dataset.coils, plans)
    if config.lambda_s != 0.0:
        grad_d += config.lambda_s * tv_grad
    if config.lambda_l != 0.0:
        grad_d += config.lambda_l * nuc_grad

    grads = model_backward(cache, grad_d.reshape(-1), params, model_config)
    row = LossRow(epoch=0, dc=dc_value, tv=tv_value, lr_term=nuc_value, total=value)
    return value, grads, row


ProgressFn = Callable[[LossRow], None]


def train(
    dataset: KSpaceDataset,
    config: ReconConfig,
    model_config: ModelConfig,
    plans: list[NufftPlan] | None = None,
    progress: ProgressFn | None = None,
) -> tuple[ModelParams, LossReport]:
    """Fit the representation to one dataset: full-batch Adam for
    ``config.epochs`` epochs from a seeded initialization.

    Raises
    ------
    NumericalError
        If the loss stops being finite; the exception carries the epoch
        index and the report collected so far in its ``report`` attribute.
    """
    traj = dataset.trajectory
    if plans is None:
        plans = make_plans(traj)
    batch = make_coordinates(traj.n, traj.frames)

    params = init_params(model_config, config.seed)
    state = init_adam(params)
    report = LossReport()

    for epoch in range(1, config.epochs + 1):
        value, grads, row = total_loss(
            params, dataset, config, model_config, plans=plans, batch=batch
        )
        row = row._replace(epoch=epoch)
        if not np.isfinite(value):
            err = NumericalError(
                f"non-finite loss at epoch {epoch}"
                + (f" (last finite total {report.final().total!r})" if report.rows else "")
            )
            err.report = report
            err.epoch = epoch
            raise err
        report.append(row)
        if progress is not None:
            progress(row)
        adam_step(params, grads, state, config)

    return params, report
