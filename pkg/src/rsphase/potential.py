"""Replica-symmetric potential over the effective SNR and its minimizers.

The potential F(s) = I(s) + (delta/2) * (x - ln x - 1) with x = s/(delta*snr)
trades the channel information against an undersampling penalty.  Its global
minimizers determine the limiting estimation error and its smallest
stationary point the error reached by AMP, so this module locates both.  All
stationary points lie strictly between delta*snr/(1+snr) and delta*snr, which
bounds every search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import channel
from .prior import DiscretePrior, entropy, two_point, two_point_entropy

GRID_POINTS = 2000
SCAN_POINTS = 4000
BRACKET_PAD = 1e-3
EQUAL_MIN_TOL = 1e-8
REFINE_RTOL = 1e-10


class BracketError(RuntimeError):
    """No sign change found where one is mathematically guaranteed."""


def _logdiv(x):
    """x - ln(x) - 1: convex, nonnegative, zero exactly at x = 1."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise ValueError("argument of the log divergence must be positive")
    out = x_arr - np.log(x_arr) - 1.0
    return float(out) if np.ndim(x) == 0 else out


def stationary_bracket(delta: float, snr: float):
    """Open interval that contains every stationary point of the potential."""
    return delta * snr / (1.0 + snr), delta * snr


def _mi_tol(prior: DiscretePrior) -> float:
    # Information values live on the entropy scale, so the absolute quadrature
    # tolerance must shrink with it or the grid scan sees spurious basins for
    # extreme spike priors.  MMSE values stay O(1) and keep the default.
    h = entropy(prior)
    return min(channel.QUAD_TOL, max(1e-13, 1e-4 * h))


def _check_params(delta, snr):
    if not delta > 0.0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    if not snr > 0.0 or not math.isfinite(snr):
        raise ValueError(f"snr must be positive and finite, got {snr!r}")


def potential(delta: float, snr: float, prior: DiscretePrior, s: float,
              *, tol: float | None = None) -> float:
    """Potential value F(s); raises ValueError at s <= 0 (log singularity)."""
    _check_params(delta, snr)
    if not s > 0.0:
        raise ValueError(f"s must be positive, got {s!r}")
    if tol is None:
        tol = _mi_tol(prior)
    i_val, _ = channel.mutual_info_eval(prior, s, tol=tol)
    return i_val + 0.5 * delta * _logdiv(s / (delta * snr))


def potential_deriv(delta: float, snr: float, prior: DiscretePrior, s: float,
                    *, tol: float | None = None) -> float:
    """Exact derivative F'(s) = (M(s) + 1/snr - delta/s) / 2.

    Exactness follows from I'(s) = M(s)/2 on the scalar channel, so this
    avoids differencing quadrature output.
    """
    _check_params(delta, snr)
    if not s > 0.0:
        raise ValueError(f"s must be positive, got {s!r}")
    if tol is None:
        tol = channel.QUAD_TOL
    m_val, _ = channel.mmse_eval(prior, s, tol=tol)
    return 0.5 * (m_val + 1.0 / snr - delta / s)


@dataclass
class PotentialLandscape:
    """Minimizers and smallest stationary point for one (delta, snr, prior)."""

    delta: float
    snr: float
    prior: DiscretePrior
    f_star: float
    s_lower_star: float
    s_upper_star: float
    s_amp: float
    bracket: tuple
    multi_minima: bool


def smallest_stationary(delta: float, snr: float, prior: DiscretePrior,
                        *, scan_points: int = SCAN_POINTS,
                        tol: float | None = None) -> float:
    """Smallest s at which F'(s) = 0.

    Every stationary point solves s*(M(s) + 1/snr) = delta, so the residual is
    scanned upward from the lower end of the admissible interval and the first
    sign change is refined by bisection.  The scan order is what makes the
    result the *first* crossing; the residual is continuous but not monotone.
    """
    _check_params(delta, snr)
    if tol is None:
        tol = channel.QUAD_TOL
    lo, hi = stationary_bracket(delta, snr)
    grid = np.geomspace(lo, hi, scan_points)
    m_vals, _ = channel.mmse_eval_curve(prior, grid, tol=tol)
    resid = grid * (m_vals + 1.0 / snr) - delta
    if resid[0] >= 0.0:
        raise BracketError(
            "stationary-point residual is nonnegative at the lower interval "
            "endpoint; this cannot happen exactly and signals quadrature "
            "inaccuracy")
    above = np.flatnonzero(resid >= 0.0)
    if above.size == 0:
        raise BracketError(
            "no sign change of the stationary-point residual inside the "
            "admissible interval; signals quadrature inaccuracy")
    k = int(above[0])

    def residual(s):
        m_val, _ = channel.mmse_eval(prior, s, tol=tol)
        return s * (m_val + 1.0 / snr) - delta

    root = brentq(residual, grid[k - 1], grid[k], xtol=lo * 1e-14, rtol=1e-12)
    return float(root)


def minimize(delta: float, snr: float, prior: DiscretePrior,
             *, grid_points: int = GRID_POINTS,
             tol: float | None = None) -> PotentialLandscape:
    """Locate the global minimum of F and its extreme minimizers.

    Dense log-spaced scan over the (padded) admissible interval, then local
    refinement of every candidate basin to ~1e-10 relative accuracy in s.
    Minimizers whose value ties the minimum within ``EQUAL_MIN_TOL * (1+|F*|)``
    are reported jointly; exact ties are measure zero, so the tolerance is
    what exposes the coexistence regime near a first-order transition.
    """
    _check_params(delta, snr)
    if tol is None:
        tol = _mi_tol(prior)
    lo, hi = stationary_bracket(delta, snr)
    s_grid = np.geomspace(lo * (1.0 - BRACKET_PAD), hi * (1.0 + BRACKET_PAD), grid_points)
    i_vals, _ = channel.mutual_info_eval_curve(prior, s_grid, tol=tol)
    f_vals = i_vals + 0.5 * delta * _logdiv(s_grid / (delta * snr))

    candidates = []
    for i in range(1, len(s_grid) - 1):
        if f_vals[i] <= f_vals[i - 1] and f_vals[i] <= f_vals[i + 1]:
            candidates.append(i)
    if f_vals[0] < f_vals[1]:
        candidates.append(0)
    if f_vals[-1] < f_vals[-2]:
        candidates.append(len(s_grid) - 1)
    if not candidates:
        raise BracketError("no local minimum on the scan grid; grid too coarse")

    def objective(s):
        i_val, _ = channel.mutual_info_eval(prior, s, tol=tol)
        return i_val + 0.5 * delta * _logdiv(s / (delta * snr))

    refined = []
    for i in sorted(candidates):
        a = s_grid[max(i - 1, 0)]
        b = s_grid[min(i + 1, len(s_grid) - 1)]
        res = minimize_scalar(objective, bounds=(a, b), method="bounded",
                              options={"xatol": REFINE_RTOL * s_grid[i]})
        refined.append((float(res.x), float(res.fun)))

    refined.sort()
    merged = [refined[0]]
    for s_val, f_val in refined[1:]:
        if s_val - merged[-1][0] <= 1e-8 * s_val:
            if f_val < merged[-1][1]:
                merged[-1] = (s_val, f_val)
        else:
            merged.append((s_val, f_val))

    f_star = min(f for _, f in merged)
    level = f_star + EQUAL_MIN_TOL * (1.0 + abs(f_star))
    winners = [s for s, f in merged if f <= level]
    s_lower, s_upper = min(winners), max(winners)
    multi = (s_upper - s_lower) > 1e-6 * delta * snr
    s_amp = smallest_stationary(delta, snr, prior)
    return PotentialLandscape(delta, snr, prior, f_star, s_lower, s_upper,
                              s_amp, (lo, hi), multi)


def normalized_potential(epsilon: float, r: float, snr: float, t: float) -> float:
    """Potential rescaled by the prior entropy: F(2*H*t)/H.

    The undersampling ratio is set internally to r times the information
    threshold, i.e. delta = 2*r*H/ln(1+snr), so curves for different epsilon
    are directly comparable on the t axis.
    """
    if not t > 0.0:
        raise ValueError(f"t must be positive, got {t!r}")
    if not r > 0.0:
        raise ValueError(f"r must be positive, got {r!r}")
    _check_params(r, snr)
    h = two_point_entropy(epsilon)
    c = math.log1p(snr)
    if epsilon >= channel.APPROX_EPSILON:
        prior = two_point(epsilon)
        delta = 2.0 * r * h / c
        return potential(delta, snr, prior, 2.0 * h * t) / h
    i_norm = float(_i_norm_approx(epsilon, np.asarray([t]))[0])
    return i_norm + (r / c) * _logdiv(t * c / (r * snr))


def _i_norm_approx(epsilon: float, t_arr: np.ndarray, t_hi: float | None = None) -> np.ndarray:
    """I(2*H*t)/H for tiny epsilon, via the tail surrogate and I' = M/2.

    On the t axis the normalized information is the running integral of the
    normalized MMSE, which is evaluated by a dense cumulative trapezoid.
    """
    h = two_point_entropy(epsilon)
    if t_hi is None:
        t_hi = float(t_arr.max())
    base = np.linspace(0.0, max(t_hi, 1e-6), 8192)
    m = np.empty_like(base)
    m[0] = 1.0
    m[1:] = channel.mmse_q_approx(epsilon, 2.0 * h * base[1:])
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (m[1:] + m[:-1]) * np.diff(base))])
    return np.interp(t_arr, base, cum)


def normalized_curve(epsilon: float, r: float, snr: float, t_values) -> np.ndarray:
    """Normalized potential on a grid of t values (vectorized)."""
    t_arr = np.asarray(t_values, dtype=float)
    if np.any(t_arr <= 0.0):
        raise ValueError("t grid must be positive")
    h = two_point_entropy(epsilon)
    c = math.log1p(snr)
    pen = (r / c) * _logdiv(t_arr * c / (r * snr))
    if epsilon >= channel.APPROX_EPSILON:
        prior = two_point(epsilon)
        i_vals, _ = channel.mutual_info_eval_curve(prior, 2.0 * h * t_arr,
                                                   tol=_mi_tol(prior))
        return i_vals / h + pen
    return _i_norm_approx(epsilon, t_arr) + pen


def normalized_argmin(epsilon: float, r: float, snr: float,
                      *, grid_points: int = GRID_POINTS) -> float:
    """Location (in t) of the global minimum of the normalized potential."""
    h = two_point_entropy(epsilon)
    c = math.log1p(snr)
    if epsilon >= channel.APPROX_EPSILON:
        prior = two_point(epsilon)
        delta = 2.0 * r * h / c
        land = minimize(delta, snr, prior, grid_points=grid_points)
        # Report the basin that actually attains the minimum value.
        f_lo = potential(delta, snr, prior, land.s_lower_star)
        f_hi = potential(delta, snr, prior, land.s_upper_star)
        s_best = land.s_lower_star if f_lo <= f_hi else land.s_upper_star
        return s_best / (2.0 * h)
    t_lo = r * snr / ((1.0 + snr) * c) * (1.0 - BRACKET_PAD)
    t_hi = r * snr / c * (1.0 + BRACKET_PAD)
    t_grid = np.geomspace(t_lo, t_hi, grid_points)
    f_vals = normalized_curve(epsilon, r, snr, t_grid)
    i = int(np.argmin(f_vals))
    if 0 < i < len(t_grid) - 1:
        # Parabolic refinement through the three bracketing grid points.
        x0, x1, x2 = t_grid[i - 1:i + 2]
        y0, y1, y2 = f_vals[i - 1:i + 2]
        denom = (x0 - x1) * (y0 - y2) - (x0 - x2) * (y0 - y1)
        if denom != 0.0:
            num = (x0 * x0 - x1 * x1) * (y0 - y2) - (x0 * x0 - x2 * x2) * (y0 - y1)
            t_hat = 0.5 * num / denom
            if x0 <= t_hat <= x2:
                return float(t_hat)
    return float(t_grid[i])


def normalized_smallest_stationary(epsilon: float, r: float, snr: float,
                                   *, scan_points: int = SCAN_POINTS) -> float:
    """Smallest stationary point of the normalized potential, in t units.

    ``r`` is the ratio of the undersampling ratio to the information
    threshold, exactly as in :func:`normalized_potential`.
    """
    h = two_point_entropy(epsilon)
    c = math.log1p(snr)
    if epsilon >= channel.APPROX_EPSILON:
        prior = two_point(epsilon)
        delta = 2.0 * r * h / c
        return smallest_stationary(delta, snr, prior) / (2.0 * h)
    t_lo = r * snr / ((1.0 + snr) * c)
    t_hi = r * snr / c
    grid = np.geomspace(t_lo, t_hi, scan_points)
    m_vals = channel.mmse_q_approx(epsilon, 2.0 * h * grid)
    resid = grid * (m_vals + 1.0 / snr) - r / c
    if resid[0] >= 0.0:
        raise BracketError("stationary residual nonnegative at the lower endpoint")
    above = np.flatnonzero(resid >= 0.0)
    if above.size == 0:
        raise BracketError("no stationary point bracketed in the admissible interval")
    k = int(above[0])

    def residual(t):
        return t * (channel.mmse_q_approx(epsilon, 2.0 * h * t) + 1.0 / snr) - r / c

    return float(brentq(residual, grid[k - 1], grid[k], xtol=t_lo * 1e-14, rtol=1e-12))


def limit_potential(r: float, snr: float, t) -> float:
    """Small-epsilon limit of the normalized potential: min(1,t) + penalty."""
    if not r > 0.0:
        raise ValueError(f"r must be positive, got {r!r}")
    _check_params(r, snr)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0.0):
        raise ValueError("t must be positive")
    c = math.log1p(snr)
    out = np.minimum(1.0, t_arr) + (r / c) * _logdiv(t_arr * c / (r * snr))
    return float(out) if np.ndim(t) == 0 else out


def amp_threshold_ratio(snr: float) -> float:
    """Ratio of the algorithmic to the information threshold: (1+1/snr)ln(1+snr)."""
    if not snr > 0.0:
        raise ValueError(f"snr must be positive, got {snr!r}")
    return (1.0 + 1.0 / snr) * math.log1p(snr)


def limit_minimizers(r: float, snr: float):
    """Global minimizer and smallest stationary point of the limit potential.

    Returns ``(t_star, t_amp)``.  The global minimizer branch switches at
    r = 1 and the smallest stationary point at r = the threshold ratio; both
    boundary values are excluded (the limit curve is degenerate there).
    """
    if not r > 0.0:
        raise ValueError(f"r must be positive, got {r!r}")
    _check_params(r, snr)
    c = math.log1p(snr)
    r_alg = amp_threshold_ratio(snr)
    if r == 1.0:
        raise ValueError("r = 1 is the information boundary; no unique minimizer")
    if r == r_alg:
        raise ValueError("r equals the algorithmic threshold ratio; no unique "
                         "smallest stationary point")
    low_branch = r * snr / ((1.0 + snr) * c)
    high_branch = r * snr / c
    t_star = low_branch if r < 1.0 else high_branch
    t_amp = low_branch if r < r_alg else high_branch
    return t_star, t_amp
