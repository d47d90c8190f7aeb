"""Phase-transition thresholds in the undersampling ratio.

Two critical values of delta = n/p govern recovery: the information threshold
2H/ln(1+snr) at which exact recovery becomes possible at all, and the larger
algorithmic threshold 2H(1+snr)/snr at which AMP starts to succeed.  Their
ratio (1+1/snr)ln(1+snr) exceeds one for every snr, which is the
computational-statistical gap this module quantifies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import channel, potential
from .prior import DiscretePrior, entropy, two_point, two_point_entropy

KIND_MMSE = "mmse"
KIND_AMP = "amp"


def _check_h_snr(h, snr):
    if not h > 0.0:
        raise ValueError(f"entropy must be positive, got {h!r}")
    if not snr > 0.0 or not math.isfinite(snr):
        raise ValueError(f"snr must be positive and finite, got {snr!r}")


def delta_mmse(h: float, snr: float) -> float:
    """Information threshold 2h/ln(1+snr) for a prior of entropy h (nats)."""
    _check_h_snr(h, snr)
    return 2.0 * h / math.log1p(snr)


def delta_amp(h: float, snr: float) -> float:
    """Algorithmic threshold 2h(1+snr)/snr."""
    _check_h_snr(h, snr)
    return 2.0 * h * (1.0 + snr) / snr


def r_amp(snr: float) -> float:
    """delta_amp / delta_mmse = (1 + 1/snr) ln(1+snr); strictly above 1."""
    return potential.amp_threshold_ratio(snr)


def l_constant(prior: DiscretePrior, *, tol: float | None = None) -> float:
    """Information deficit H - I(2H); bounds how far I(s) sits below min(s/2, H)."""
    h = entropy(prior)
    if tol is None:
        tol = min(channel.QUAD_TOL, max(1e-13, 1e-4 * h))
    i2h, _ = channel.mutual_info_eval(prior, 2.0 * h, tol=tol)
    return max(h - i2h, 0.0)


def sparse_thresholds(k: float, p: float, sigma2: float):
    """Small-epsilon simplifications of both thresholds for Bernoulli designs.

    ``k`` is the expected support size eps*p.  Returns the pair
    ``(2(k/p)ln(p/k)/ln(1+k/sigma2), 2(k+sigma2)ln(p/k)/p)``.
    """
    if not 0.0 < k < p:
        raise ValueError(f"need 0 < k < p, got k={k!r}, p={p!r}")
    if not sigma2 > 0.0:
        raise ValueError(f"noise variance must be positive, got {sigma2!r}")
    log_ratio = math.log(p / k)
    d_mmse = 2.0 * (k / p) * log_ratio / math.log1p(k / sigma2)
    d_amp = 2.0 * (k + sigma2) * log_ratio / p
    return d_mmse, d_amp


def transition_check(epsilon: float, snr: float, r: float, kind: str) -> float:
    """Channel MMSE at the relevant potential landmark for delta = r * threshold.

    ``kind`` selects which threshold scales delta: 'mmse' uses the information
    threshold and reports M at the extreme global minimizer (upper for r < 1,
    lower for r > 1); 'amp' uses the algorithmic threshold and reports M at the
    smallest stationary point.  Values near 1 mean no recovery, near 0 mean
    essentially exact recovery.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    if not r > 0.0 or r == 1.0:
        raise ValueError(f"r must lie in (0,1) or (1,inf), got {r!r}")
    if kind not in (KIND_MMSE, KIND_AMP):
        raise ValueError(f"kind must be 'mmse' or 'amp', got {kind!r}")
    h = two_point_entropy(epsilon)
    # Ratio of delta to the information threshold; the algorithmic scaling is
    # the same landscape with r multiplied by the threshold ratio.
    r_eff = r if kind == KIND_MMSE else r * r_amp(snr)

    if epsilon < channel.APPROX_EPSILON:
        if kind == KIND_AMP:
            t_hat = potential.normalized_smallest_stationary(epsilon, r_eff, snr)
        else:
            t_hat = potential.normalized_argmin(epsilon, r_eff, snr)
        return float(channel.mmse_q_approx(epsilon, 2.0 * h * t_hat))

    prior = two_point(epsilon)
    delta = r_eff * delta_mmse(h, snr)
    if kind == KIND_AMP:
        s_hat = potential.smallest_stationary(delta, snr, prior)
    else:
        land = potential.minimize(delta, snr, prior)
        s_hat = land.s_upper_star if r < 1.0 else land.s_lower_star
    value, _ = channel.mmse_eval(prior, s_hat)
    return float(value)


@dataclass
class ThresholdReport:
    """Threshold summary for one configuration."""

    h: float
    snr: float
    delta_mmse: float
    delta_amp: float
    r_amp: float
    l_constant: float
    sparse_simplifications: tuple | None = None

    def as_dict(self) -> dict:
        d = {
            "h": self.h,
            "snr": self.snr,
            "delta_mmse": self.delta_mmse,
            "delta_amp": self.delta_amp,
            "r_amp": self.r_amp,
            "l_constant": self.l_constant,
        }
        if self.sparse_simplifications is not None:
            d["delta_mmse_sparse"] = self.sparse_simplifications[0]
            d["delta_amp_sparse"] = self.sparse_simplifications[1]
        return d


def report(epsilon: float, snr: float | None = None, *, p: float | None = None,
           sigma2: float | None = None) -> ThresholdReport:
    """Build a :class:`ThresholdReport` for a two-point prior.

    Either pass ``snr`` directly, or pass ``p`` and ``sigma2`` and the snr of
    the standardized Bernoulli reduction (p*eps*(1-eps)/sigma2) is used; in
    the latter case the sparse simplifications are filled in as well.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    sparse = None
    if snr is None:
        if p is None or sigma2 is None:
            raise ValueError("pass either snr or both p and sigma2")
        snr = p * epsilon * (1.0 - epsilon) / sigma2
        sparse = sparse_thresholds(epsilon * p, p, sigma2)
    elif p is not None and sigma2 is not None:
        sparse = sparse_thresholds(epsilon * p, p, sigma2)
    h = two_point_entropy(epsilon)
    prior = two_point(epsilon)
    return ThresholdReport(
        h=h,
        snr=snr,
        delta_mmse=delta_mmse(h, snr),
        delta_amp=delta_amp(h, snr),
        r_amp=r_amp(snr),
        l_constant=l_constant(prior),
        sparse_simplifications=sparse,
    )
