"""Link-level simulator for full-duplex AF relay OFDM over first-order IIR channels."""

__version__ = "0.1.0"

from .channel import (
    ChannelConfig,
    ChannelRealization,
    IirCoefficients,
    compute_coeffs,
    draw_channels,
    is_stable,
)
from .exceptions import (
    DegenerateChannelError,
    FramingError,
    SingularSubcarrierError,
    StabilityError,
)
from .linkbudget import (
    GainSolution,
    LinkBudget,
    budget,
    optimize_gain,
    prefilter_snr,
    snr_gap,
)
from .numerics import dft, idft, make_rng
from .receiver import BerRecord

__all__ = [
    "__version__",
    "ChannelConfig",
    "ChannelRealization",
    "IirCoefficients",
    "compute_coeffs",
    "draw_channels",
    "is_stable",
    "DegenerateChannelError",
    "FramingError",
    "SingularSubcarrierError",
    "StabilityError",
    "GainSolution",
    "LinkBudget",
    "budget",
    "optimize_gain",
    "prefilter_snr",
    "snr_gap",
    "dft",
    "idft",
    "make_rng",
    "BerRecord",
]
