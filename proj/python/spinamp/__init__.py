"""Spin amplification by heteronuclear spin diffusion.

Thin re-export of the native ``_core`` extension.
"""

from ._core import (  # noqa: F401
    ConfigError,
    InvalidArgument,
    NumericalError,
    PoolState,
    ShapedPulse,
    SpinSystem,
    amplified_difference,
    bloch_response,
    calibrate_duration,
    classify_regime,
    constant_shape,
    cycle_survival,
    dipolar_coupling,
    exact_trajectory,
    excitation_profile,
    gain_closed_form,
    hermite_shape,
    mixing_protocol,
    response_spectrum,
    signal_ratio,
    step,
)

__version__ = "0.1.0"
