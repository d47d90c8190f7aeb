"""Synthetic regression instances, MMSE-AMP, and its state-evolution tracker.

The estimator iterates a matched-filter step, the entrywise posterior-mean
denoiser of the coefficient prior, and a residual update with the Onsager
memory term that keeps the effective noise Gaussian.  State evolution is the
deterministic recursion for the effective SNR; its fixed point coincides with
the smallest stationary point of the potential, which is what the comparison
tests exploit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channel
from .prior import DiscretePrior

SE_T_MAX = 500
SE_TOL = 1e-10
AMP_T_MAX = 200
AMP_REL_CHANGE = 1e-6
AMP_PATIENCE = 3
DIVERGENCE_FACTOR = 10.0
DIVERGENCE_PATIENCE = 3


class ConvergenceError(RuntimeError):
    """Fixed-point iteration hit its iteration cap before the tolerance."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class DivergenceError(RuntimeError):
    """The estimate MSE blew up, typically from a badly mismatched prior."""


@dataclass
class RegressionInstance:
    """One synthetic draw of y = X beta + w with standard normal design."""

    x: np.ndarray
    beta: np.ndarray
    noise: np.ndarray
    y: np.ndarray
    sigma2: float
    seed: int
    prior: DiscretePrior

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def delta(self) -> float:
        return self.n / self.p

    @property
    def snr(self) -> float:
        return math.inf if self.sigma2 == 0.0 else self.p / self.sigma2


def generate(prior: DiscretePrior, n: int, p: int, sigma2: float,
             seed: int) -> RegressionInstance:
    """Draw an instance with X_ij ~ N(0,1), beta_j ~ prior, w_i ~ N(0, sigma2)."""
    if n < 1 or p < 1:
        raise ValueError(f"n and p must be >= 1, got n={n!r}, p={p!r}")
    if sigma2 < 0.0:
        raise ValueError(f"noise variance must be nonnegative, got {sigma2!r}")
    rng = np.random.default_rng(seed)
    try:
        x = rng.standard_normal((n, p))
    except MemoryError as exc:
        raise MemoryError(f"cannot allocate a {n}x{p} design matrix") from exc
    beta = rng.choice(prior.atom_array, size=p, p=prior.weight_array)
    noise = math.sqrt(sigma2) * rng.standard_normal(n) if sigma2 > 0.0 else np.zeros(n)
    y = x @ beta + noise
    return RegressionInstance(x=x, beta=beta, noise=noise, y=y,
                              sigma2=float(sigma2), seed=seed, prior=prior)


def _se_step(prior, delta, snr, s, mmse_fn, tol):
    if mmse_fn is not None:
        m = mmse_fn(s)
    else:
        m, _ = channel.mmse_eval(prior, s, tol=tol)
    return delta / (1.0 / snr + m)


def se_sequence(prior: DiscretePrior, delta: float, snr: float, t_max: int,
                *, mmse_fn=None, tol: float = channel.QUAD_TOL) -> np.ndarray:
    """Effective-SNR iterates s_0..s_{t_max} of state evolution (no stopping).

    Cold start s_0 = delta*snr/(1+snr), i.e. initial MSE equal to the unit
    prior variance; then s_{t+1} = delta / (1/snr + M(s_t)).
    """
    if not delta > 0.0 or not snr > 0.0:
        raise ValueError("delta and snr must be positive")
    s = np.empty(t_max + 1)
    s[0] = delta * snr / (1.0 + snr)
    for t in range(t_max):
        s[t + 1] = _se_step(prior, delta, snr, s[t], mmse_fn, tol)
    return s


def state_evolution(prior: DiscretePrior, delta: float, snr: float,
                    t_max: int = SE_T_MAX, tol: float = SE_TOL, *,
                    mmse_fn=None, quad_tol: float = channel.QUAD_TOL):
    """Iterate state evolution to its fixed point.

    Returns ``(s_limit, iterates)`` where ``iterates[0]`` is the cold start.
    Raises :class:`ConvergenceError` (carrying the last iterate) if the
    relative step stays above ``tol`` for ``t_max`` iterations.  ``mmse_fn``
    overrides the channel MMSE, which the tests use to exercise degenerate
    recursions.
    """
    if t_max < 1:
        raise ValueError(f"t_max must be >= 1, got {t_max!r}")
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    if not delta > 0.0 or not snr > 0.0:
        raise ValueError("delta and snr must be positive")
    iterates = [delta * snr / (1.0 + snr)]
    for _ in range(t_max):
        s_next = _se_step(prior, delta, snr, iterates[-1], mmse_fn, quad_tol)
        step = abs(s_next - iterates[-1])
        iterates.append(s_next)
        if step <= tol * iterates[-2]:
            return float(s_next), np.asarray(iterates)
    raise ConvergenceError(
        f"state evolution did not converge within {t_max} iterations "
        f"(last iterate {iterates[-1]!r})", last_iterate=float(iterates[-1]))


@dataclass
class AmpTrace:
    """Per-iteration record of one AMP run.

    ``mse[t]`` is the empirical estimate MSE at iteration t (t = 0 is the zero
    initialization), ``residual_var[t]`` the residual power used as the
    denoiser noise level, and ``se_snr``/``se_mse`` the state-evolution
    effective SNR and predicted MSE aligned to the same index.
    """

    mse: np.ndarray
    residual_var: np.ndarray
    se_snr: np.ndarray
    se_mse: np.ndarray
    iterations: int
    converged: bool
    prior_mismatch: bool
    onsager: bool
    seed: int

    def __post_init__(self):
        lengths = {len(self.mse), len(self.residual_var), len(self.se_snr),
                   len(self.se_mse)}
        if lengths != {self.iterations + 1}:
            raise ValueError("trace arrays must all have length iterations + 1")


def _priors_match(a: DiscretePrior, b: DiscretePrior) -> bool:
    if a.natoms != b.natoms:
        return False
    return (np.allclose(a.atom_array, b.atom_array, rtol=1e-12, atol=0.0)
            and np.allclose(a.weight_array, b.weight_array, rtol=1e-12, atol=0.0))


def run_amp(instance: RegressionInstance, prior: DiscretePrior,
            t_max: int = AMP_T_MAX, *, onsager: bool = True) -> AmpTrace:
    """Run MMSE-AMP on an instance and record empirical and predicted MSE.

    The design matrix is rescaled internally by 1/sqrt(n) so column norms are
    O(1); the (delta, snr) parameterization is invariant under this.  The
    effective noise level is estimated from the residual power each iteration
    so the algorithm remains a genuine estimator; state evolution is computed
    alongside purely as the reference prediction.  The iteration is
    deterministic given the instance, whose seed is echoed into the trace.

    Estimation with a prior different from the one that generated the instance
    is allowed and flagged in the trace.  Raises :class:`DivergenceError` when
    the MSE exceeds 10x its initial value for 3 consecutive iterations.
    """
    if t_max < 1:
        raise ValueError(f"t_max must be >= 1, got {t_max!r}")
    n, p = instance.x.shape
    delta = instance.delta
    a_mat = instance.x / math.sqrt(n)
    y = instance.y / math.sqrt(n)
    beta = instance.beta

    x_hat = np.zeros(p)
    z = y.copy()                       # zero estimate, so no memory term yet
    mse = [float(np.mean((beta - x_hat) ** 2))]
    residual_var = [float(np.mean(z ** 2))]

    converged = False
    stall = 0
    blowup = 0
    t_done = 0
    for t in range(t_max):
        tau2 = float(np.mean(z ** 2))
        r_vec = x_hat + a_mat.T @ z
        x_new, v_new = channel.denoise(prior, r_vec, tau2)
        if onsager:
            # Mean denoiser derivative: d/dr posterior mean = posterior var / tau2.
            correction = (1.0 / delta) * float(np.mean(v_new)) / tau2
            z = y - a_mat @ x_new + correction * z
        else:
            z = y - a_mat @ x_new
        x_hat = x_new
        t_done = t + 1
        mse.append(float(np.mean((beta - x_hat) ** 2)))
        residual_var.append(float(np.mean(z ** 2)))

        if mse[-1] > DIVERGENCE_FACTOR * mse[0]:
            blowup += 1
            if blowup >= DIVERGENCE_PATIENCE:
                raise DivergenceError(
                    f"estimate MSE {mse[-1]:.3g} exceeded {DIVERGENCE_FACTOR}x its "
                    f"initial value for {DIVERGENCE_PATIENCE} consecutive iterations")
        else:
            blowup = 0

        if abs(mse[-1] - mse[-2]) < AMP_REL_CHANGE * max(mse[-2], 1e-300):
            stall += 1
            if stall >= AMP_PATIENCE:
                converged = True
                break
        else:
            stall = 0

    snr = instance.snr
    if math.isfinite(snr):
        se_snr = se_sequence(prior, delta, snr, t_done)
        se_mse = np.empty(t_done + 1)
        se_mse[0] = 1.0
        for t in range(t_done):
            m, _ = channel.mmse_eval(prior, se_snr[t])
            se_mse[t + 1] = m
    else:
        se_snr = np.full(t_done + 1, np.nan)
        se_mse = np.full(t_done + 1, np.nan)

    return AmpTrace(
        mse=np.asarray(mse),
        residual_var=np.asarray(residual_var),
        se_snr=se_snr,
        se_mse=se_mse,
        iterations=t_done,
        converged=converged,
        prior_mismatch=not _priors_match(prior, instance.prior),
        onsager=onsager,
        seed=instance.seed,
    )


def mc_mmse(prior: DiscretePrior, s: float, samples: int, seed: int):
    """Monte Carlo estimate of M(s) by simulating the posterior-mean error.

    Returns ``(estimate, standard_error)``.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples!r}")
    if s < 0.0:
        raise ValueError(f"s must be nonnegative, got {s!r}")
    rng = np.random.default_rng(seed)
    beta0 = rng.choice(prior.atom_array, size=samples, p=prior.weight_array)
    noise = rng.standard_normal(samples)
    if s == 0.0:
        err = beta0 ** 2        # posterior mean is the prior mean, which is 0
    else:
        y = math.sqrt(s) * beta0 + noise
        mean, _ = channel.denoise(prior, y / math.sqrt(s), 1.0 / s)
        err = (beta0 - mean) ** 2
    estimate = float(np.mean(err))
    stderr = float(np.std(err, ddof=1) / math.sqrt(samples)) if samples > 1 else math.inf
    return estimate, stderr


def mc_mmse_two_point(epsilon: float, s: float, samples: int, seed: int):
    """Monte Carlo of the closed-form two-point MMSE expectation.

    Averages 1 / (1 - eps + eps * exp(s/(2 eps (1-eps)) + sqrt(s/(eps(1-eps))) N))
    over standard normal draws.  Returns ``(estimate, standard_error)``.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples!r}")
    if s < 0.0:
        raise ValueError(f"s must be nonnegative, got {s!r}")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(samples)
    scale = epsilon * (1.0 - epsilon)
    exponent = math.log(epsilon) + s / (2.0 * scale) + math.sqrt(s / scale) * noise
    with np.errstate(over="ignore"):
        vals = 1.0 / ((1.0 - epsilon) + np.exp(exponent))
    estimate = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / math.sqrt(samples)) if samples > 1 else math.inf
    return estimate, stderr
