"""Scan-specific dynamic MRI reconstruction with an implicit neural
representation: golden-angle radial simulation, Kaiser-Bessel gridding
NUFFT, hash-encoded coordinate network with analytic gradients, composite
TV/nuclear-norm objective, and evaluation tooling."""

from .errors import ConfigError, DataError, InrmriError, NumericalError
from .inr import (
    CoordinateBatch,
    HashEncoderConfig,
    ModelConfig,
    ModelParams,
    encode,
    hash_index,
    init_params,
    make_coordinates,
    model_backward,
    model_forward,
)
from .losses import casorati, dc_loss, nuclear_loss, tv_loss
from .metrics import (
    MetricsReport,
    RoiCurve,
    evaluate_reconstruction,
    normalize_sequence,
    nrmse_kspace,
    psnr,
    roi_curve,
    ssim,
)
from .numerics import SvdResult, fft2, seeded_rng, svd
from .nufft import (
    CoilMaps,
    NufftPlan,
    make_plan,
    make_plans,
    multicoil_adjoint,
    multicoil_forward,
    nufft_adjoint,
    nufft_forward,
)
from .phantom import (
    DynamicImage,
    Ellipse,
    KSpaceDataset,
    PhantomSpec,
    default_phantom_spec,
    generate_dynamic_image,
    render_phantom,
    retrospective_undersample,
    simulate_coil_maps,
)
from .pipeline import (
    ExperimentSpec,
    run_baseline,
    run_reconstruction,
    run_superres,
    sweep_hyperparameters,
)
from .trajectory import (
    DensityWeights,
    Trajectory,
    golden_angle_trajectory,
    ramp_density_weights,
)
from .training import (
    AdamState,
    LossReport,
    LossRow,
    ReconConfig,
    adam_step,
    init_adam,
    total_loss,
    train,
)
from .version import __version__

__all__ = [name for name in dir() if not name.startswith("_")]
