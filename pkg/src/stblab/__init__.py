"""stblab: a simulation laboratory for space-time block codes with
receiver-side code selection (phase feedback, variant switching) and the
decoders, capacity estimators, and bound calculators to study them.
"""

from .analysis import (
    CapacityEstimate,
    PepBound,
    capacity_c0,
    capacity_code,
    golden_gain_2x1_mc,
    golden_gain_2x2_mc,
    golden_gain_analytic,
    pep_bound,
)
from .channel import ChannelRealization, PhaseSite, SnrSpec, add_awgn, apply_phase, sample_channel
from .codes import CODE_NAMES, CodeSpec, get_code
from .constellation import Constellation, make_constellation
from .decoders import (
    DecodeResult,
    circulant_fourier_decode,
    ml_decode,
    mu_ml_decode,
    mu_zf_decode,
    zf_decode,
)
from .errors import ConfigError, ContractViolation, IllConditionedError
from .feedback import (
    FeedbackDecision,
    select_circulant,
    select_generic,
    select_golden_variant,
    select_multiuser,
    select_qostbc_closed_form,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    PointResult,
    fit_diversity_slope,
    run_ber,
    run_capacity,
    snr_at_ber,
)

__version__ = "0.1.0"

__all__ = [
    "CODE_NAMES",
    "CapacityEstimate",
    "ChannelRealization",
    "CodeSpec",
    "ConfigError",
    "Constellation",
    "ContractViolation",
    "DecodeResult",
    "ExperimentConfig",
    "ExperimentResult",
    "FeedbackDecision",
    "IllConditionedError",
    "PepBound",
    "PhaseSite",
    "PointResult",
    "SnrSpec",
    "add_awgn",
    "apply_phase",
    "capacity_c0",
    "capacity_code",
    "circulant_fourier_decode",
    "fit_diversity_slope",
    "get_code",
    "golden_gain_2x1_mc",
    "golden_gain_2x2_mc",
    "golden_gain_analytic",
    "make_constellation",
    "ml_decode",
    "mu_ml_decode",
    "mu_zf_decode",
    "pep_bound",
    "run_ber",
    "run_capacity",
    "sample_channel",
    "select_circulant",
    "select_generic",
    "select_golden_variant",
    "select_multiuser",
    "select_qostbc_closed_form",
    "snr_at_ber",
    "zf_decode",
    "__version__",
]
