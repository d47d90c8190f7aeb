"""Replica-symmetric characterization of Bayesian linear regression.

Single-letter channel curves, potential-function minimizers, MMSE and AMP
phase-transition thresholds, and finite-size AMP experiments that validate
the asymptotic predictions.
"""

__version__ = "0.1.0"

from .prior import (                                        # noqa: F401
    DiscretePrior,
    entropy,
    prior_from_spec,
    prior_to_spec,
    sample,
    standardize_bernoulli,
    two_point,
    two_point_entropy,
)
from .channel import (                                      # noqa: F401
    ChannelCurve,
    QuadratureError,
    channel_curve,
    denoise,
    mmse,
    mmse_curve,
    mmse_eval,
    mmse_q_approx,
    mutual_info,
    mutual_info_curve,
    mutual_info_eval,
)
from .potential import (                                    # noqa: F401
    BracketError,
    PotentialLandscape,
    limit_minimizers,
    limit_potential,
    normalized_potential,
    smallest_stationary,
)
from .thresholds import (                                   # noqa: F401
    ThresholdReport,
    delta_amp,
    delta_mmse,
    l_constant,
    r_amp,
    sparse_thresholds,
    transition_check,
)
from .amp import (                                          # noqa: F401
    AmpTrace,
    ConvergenceError,
    DivergenceError,
    RegressionInstance,
    generate,
    mc_mmse,
    mc_mmse_two_point,
    run_amp,
    state_evolution,
)
