"""Generalized mutual information of Gaussian channels with transceiver
distortion, output quantization and super-Nyquist sampling."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import (
    ConvergenceError,
    DegenerateCellError,
    DegenerateDistortionError,
    DomainError,
    EvaluationError,
    GmiError,
    NumericalError,
    ResourceCapError,
    SingularMatrixError,
)
from .gmi_core import (
    ChannelConfig,
    DistortionModel,
    DistortionMoments,
    GmiResult,
    antipodal_gmi,
    complex_gmi_from_moments,
    gmi_from_delta,
    gmi_from_moments,
    moments_by_quadrature,
    transmit_side_gmi,
)
from .quantizer import (
    KFactor,
    QuantizerSpec,
    TDomainSpec,
    antipodal_quantizer_gmi,
    asymptotics,
    binary_capacity,
    binary_gmi,
    capacity_per_unit_cost,
    cpuc_zero_limit,
    gmi_at_snr,
    k_factor,
    k_of_t,
    optimal_reconstructions,
    optimize_t,
    optimize_uniform,
    quantizer_moments,
    t_uniform_k,
)
from .supernyq import (
    CorrelationSet,
    PulseSpec,
    SamplerConfig,
    antipodal_l2_binary,
    general_correlations,
    omega0_matrix,
    optimize_pulse_low_snr,
    sinc_asymptotics,
    sinc_pulse_gmi,
    supernyq_gmi,
    theta_matrix,
)
