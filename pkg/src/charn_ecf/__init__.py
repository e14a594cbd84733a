"""Characteristic-function test for independence of innovations and past
values in nonparametric AR(1)-ARCH(1) models, with a smooth residual
bootstrap and a Monte Carlo harness."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .bootstrap import BootstrapConfig, FitConfig, TestReport, bootstrap_test, quantile
from .ecf import (
    StatisticInput,
    WeightSpec,
    compute_statistic,
    cosine_transform,
    statistic_closed_form,
    statistic_quadrature,
)
from .estimation import (
    FittedCharn,
    KernelSpec,
    ResidualSet,
    density_hat,
    fit,
    mean_hat,
    residuals,
    silverman_bandwidth,
    var_hat,
)
from .exceptions import (
    CharnError,
    DegenerateDataError,
    DegenerateTruncationError,
    DivergenceError,
    SeriesTooShortError,
)
from .montecarlo import ExperimentConfig, RejectionTable, consistency_probe, run_experiment
from .timeseries import (
    CharnModel,
    ConditionalSkewNormal,
    SmoothedResidual,
    StandardNormal,
    TimeSeries,
    draw_innovation,
    simulate,
    study_model,
)
