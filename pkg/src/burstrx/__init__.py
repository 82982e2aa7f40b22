"""Turbo DPSK receivers and information-rate tools for bursty impulsive-noise channels."""

from .air import AirEstimate, AuxTrellis, build_aux_trellis, estimate_air, log_p_y, log_p_y_given_x
from .harness import (
    ConfigError,
    SimConfig,
    SweepResult,
    complexity_count,
    dump_noise,
    run_air_sweep,
    run_ber_sweep,
)
from .middleton import (
    MarkovMiddletonParams,
    NoiseRealization,
    average_powers,
    log_likelihood,
    sample_noise,
    state_variances,
    transition_matrix,
    truncated_priors,
)
from .receivers import (
    DESIGNS,
    SoftMessage,
    bits_to_symbols,
    conv_map_decode,
    de_demap,
    extrinsic_divide,
    in_detect,
    joint_dpsk_in_demap,
    symbols_to_bits,
    turbo_decode,
)
from .trellis import TrellisSpec, backward, forward, log_sum_exp, marginalize_by_label, posterior_joint
from .txchain import (
    ConvCodeSpec,
    PskMapSpec,
    SymbolFrame,
    apply_channel,
    conv_encode,
    default_conv_code,
    differential_encode,
    deinterleave,
    interleave,
    make_interleaver,
    psk_map,
    psk_spec,
)

__version__ = "0.1.0"
