"""Link-level simulator for wideband multi-user THz massive-MIMO uplinks
with partially connected combining, true-time-delay beam-split
compensation and low-resolution ADCs."""

__version__ = "0.1.0"

from .config import (IDEAL, PULSE_RECT, PULSE_RRC, SystemConfig,  # noqa: F401
                     default_config, from_json, to_json, validate)
from .channel import (ChannelRealization, PathParams, array_response,  # noqa: F401
                      generate_channel, normalized_array_gain,
                      pulse_coefficient, subcarrier_frequency)
from .quantization import (QuantizationModel, build_quantization_model,  # noqa: F401
                           distortion_factor, lloyd_max_codebook, quantize)
from .stage1 import (Dictionary, HybridCombiner, HybridPrecoder,  # noqa: F401
                     build_dictionary, mmse_combiner_per_bin,
                     per_bin_optimal_precoder, somp_precoder,
                     spatially_sparse_combiner)
from .stage2 import apply_ttd, rotation_factor, ttd_delays  # noqa: F401
from .metrics import nag_sweep, sum_spectral_efficiency  # noqa: F401
from .link import (SCHEME_DIGITAL, SCHEME_STAGE1, SCHEME_TTD,  # noqa: F401
                   LinkDesign, design_link, evaluate_scheme)
from .oracle import model_received_bins, time_domain_oracle  # noqa: F401
from .harness import ExperimentPlan, run_plan, write_result  # noqa: F401
