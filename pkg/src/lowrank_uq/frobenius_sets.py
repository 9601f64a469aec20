"""Frobenius-norm confidence sets from unbiased risk estimation.

Four statistics, all with conditional mean ||theta - center||_F^2:

* RSS statistic (residual sum of squares minus the noise level),
* a U-statistic over pairs of measurements (isotropic designs),
* a re-averaged full-basis statistic for Pauli designs with n >= d^2,
* a paired-residual statistic that needs no knowledge of the noise level.

Each statistic has a matching confidence ball.  Radii that depend on the
unknown distance ||v - center||_F are resolved by taking the largest root of
the induced quadratic in sqrt(x), which yields the smallest ball containing
every matrix satisfying the defining inequality.  Negative statistics are
clamped to zero inside square roots.

Two constant regimes exist: "theory" uses the explicit non-asymptotic
quantile constants, "simulation" the Monte-Carlo calibrated constants
(defaults C_RSS = 1, C_USTAT = 2.5, C' = 6, calibrated at the 95% level).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .matrices import check_hermitian
from .measurement import MeasurementBatch
from .reports import ConfidenceReport
from .sensing import apply_sampling, pauli_coefficients

__all__ = [
    "QuantileConstants",
    "log_tail_constant",
    "chi_square_deviation_quantile",
    "bernoulli_deviation_quantile",
    "pauli_coverage_rate",
    "pauli_deviation_constant",
    "quantile_constants",
    "rss_statistic",
    "rss_radius_sq",
    "rss_confidence_set",
    "rss_calibrated_radius",
    "ustat_statistic",
    "ustat_radius_sq",
    "ustat_confidence_set",
    "ustat_calibrated_radius",
    "reavg_statistic",
    "reavg_radius_sq",
    "reavg_confidence_set",
    "paired_rss_statistic",
    "DEFAULT_SIMULATION_CONSTANTS",
]

# Calibrated to a 95% coverage level on the isotropic benchmark fixtures.
DEFAULT_SIMULATION_CONSTANTS = {
    "rss_c": 1.0,
    "rss_c_prime": 6.0,
    "ustat_c": 2.5,
    "ustat_c_prime": 6.0,
}


def log_tail_constant(alpha: float) -> float:
    """log(3 / alpha), the exponential-tail quantile constant."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    return math.log(3.0 / alpha)


def chi_square_deviation_quantile(alpha: float, sigma: float, n: int) -> float:
    """Upper-alpha quantile of (1/sqrt(n)) sum_i (eps_i^2 - sigma^2).

    For eps_i i.i.d. N(0, sigma^2) the sum of squares is sigma^2 times a
    chi-square with n degrees of freedom, so the quantile is
    sigma^2 (Q_{chi2,n}(1 - alpha) - n) / sqrt(n).
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    if n < 1:
        raise ValueError("n must be >= 1")
    if sigma == 0:
        return 0.0
    return sigma**2 * (stats.chi2.ppf(1.0 - alpha, df=n) - n) / math.sqrt(n)


def bernoulli_deviation_quantile(alpha: float) -> float:
    """Chebyshev-type quantile sqrt(1/alpha) for the bounded Bernoulli errors
    (valid once the preparation count satisfies T >= 4 d^2)."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    return math.sqrt(1.0 / alpha)


def pauli_coverage_rate(coherence: float) -> float:
    """Exponential coverage rate C(K) = 1 / ((16 + 8/3) K^2)."""
    if coherence <= 0:
        raise ValueError("coherence constant must be positive")
    return 1.0 / ((16.0 + 8.0 / 3.0) * coherence**2)


def pauli_deviation_constant(alpha: float, coherence: float = 1.0) -> float:
    """Deviation constant z with 2 exp(-C(K) z) = alpha / 3."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    return math.log(6.0 / alpha) / pauli_coverage_rate(coherence)


@dataclass(frozen=True)
class QuantileConstants:
    """The quantile constants entering the RSS ball at level alpha."""

    alpha: float
    z_alpha: float
    xi: float
    z: float
    calibrated: str  # "theory" | "simulation"


def quantile_constants(alpha: float, sigma: float, n: int, design_kind: str,
                       coherence: float = 1.0,
                       regime: str = "theory") -> QuantileConstants:
    z = 0.0 if design_kind == "gaussian" else pauli_deviation_constant(alpha, coherence)
    return QuantileConstants(
        alpha=alpha,
        z_alpha=log_tail_constant(alpha),
        xi=chi_square_deviation_quantile(alpha, sigma, n),
        z=z,
        calibrated=regime,
    )


# --- RSS ----------------------------------------------------------------------

def rss_statistic(batch: MeasurementBatch, center, sigma: float) -> float:
    """(1/n) ||y - X(center)||^2 - sigma^2; may be negative."""
    center = check_hermitian(center)
    resid = batch.y - apply_sampling(batch.plan, center)
    return float(np.mean(resid**2)) - sigma**2


def _largest_root_sqrt_quadratic(a: float, b: float) -> float:
    """Largest nonnegative root of x = b + a sqrt(x) (0 if none exists)."""
    disc = a * a + 4.0 * b
    if disc < 0:
        return 0.0
    root = 0.5 * (a + math.sqrt(disc))
    return max(root * root, 0.0)


def rss_radius_sq(stat: float, n: int, d: int, sigma: float, alpha: float,
                  mode: str = "shape_constrained", z: float = 0.0,
                  error_model: str = "gaussian") -> float:
    """Squared radius of the RSS-type ball for a given statistic value.

    The defining inequality is

        ||v - center||^2 <= 2 (stat + z d/n + (zbar + xi) / sqrt(n)),

    with zbar^2 = z_{alpha/3} sigma^2 max(3 ||v - center||^2, 4 z d / n).
    ``shape_constrained`` bounds ||v - center|| by 2 (valid on the state
    space), giving an explicit radius; ``implicit_solve`` returns the largest
    x solving the induced two-regime quadratic.  With
    ``error_model="bernoulli"`` the chi-square and log quantiles are replaced
    by the Chebyshev constants sqrt(3/alpha) (requires T >= 4 d^2) and
    ``sigma`` should be the variance bound sqrt(d/T).
    """
    if z < 0:
        raise ValueError("z must be nonnegative")
    if error_model == "gaussian":
        xi = chi_square_deviation_quantile(alpha / 3.0, sigma, n)
        zlog = log_tail_constant(alpha / 3.0)
    elif error_model == "bernoulli":
        xi = bernoulli_deviation_quantile(alpha / 3.0)
        zlog = bernoulli_deviation_quantile(alpha / 3.0)
    else:
        raise ValueError(f"unknown error model {error_model!r}")

    zd_term = z * d / n
    if mode == "shape_constrained":
        zbar = sigma * math.sqrt(zlog * max(12.0, 4.0 * zd_term))
        return max(0.0, 2.0 * (stat + zd_term + (zbar + xi) / math.sqrt(n)))
    if mode != "implicit_solve":
        raise ValueError(f"unknown mode {mode!r}")
    b = 2.0 * (stat + zd_term + xi / math.sqrt(n))
    a = 2.0 * sigma * math.sqrt(zlog) / math.sqrt(n)
    candidates = [0.0]
    # branch where the max is attained at 3x
    x_quad = _largest_root_sqrt_quadratic(a * math.sqrt(3.0), b)
    if 3.0 * x_quad >= 4.0 * zd_term * (1 - 1e-12):
        candidates.append(x_quad)
    # branch where the max is attained at 4 z d / n
    x_const = b + a * math.sqrt(4.0 * zd_term)
    if 3.0 * x_const <= 4.0 * zd_term * (1 + 1e-12):
        candidates.append(x_const)
    return max(candidates)


def rss_confidence_set(batch: MeasurementBatch, center, sigma: float, alpha: float,
                       mode: str = "shape_constrained", z: float = 0.0,
                       error_model: str = "gaussian",
                       statistic_sigma: float | None = None) -> ConfidenceReport:
    """Frobenius ball around ``center`` from the RSS statistic.

    ``z`` is 0 for isotropic designs and the Pauli deviation constant
    otherwise.  ``statistic_sigma`` overrides the centering of the statistic
    (pass 0 to skip centering when the variance is unknown but bounded).
    See :func:`rss_radius_sq` for the radius itself.
    """
    n, d = batch.n, batch.dim
    stat_sigma = sigma if statistic_sigma is None else statistic_sigma
    stat = rss_statistic(batch, center, stat_sigma)
    radius_sq = rss_radius_sq(stat, n, d, sigma, alpha, mode=mode, z=z,
                              error_model=error_model)
    return ConfidenceReport(
        center=check_hermitian(center), radius_sq=radius_sq, norm_kind="frobenius",
        level_alpha=alpha, method="RSS", statistic_value=stat, n=n, d=d,
    )


def rss_calibrated_radius(stat: float, n: int,
                          c: float = DEFAULT_SIMULATION_CONSTANTS["rss_c"],
                          c_prime: float = DEFAULT_SIMULATION_CONSTANTS["rss_c_prime"]) -> float:
    """Calibrated-constants radius sqrt(stat + c/sqrt(n) + c' sqrt(stat)/sqrt(n)),
    the statistic clamped at zero."""
    s = max(stat, 0.0)
    return math.sqrt(s + c / math.sqrt(n) + c_prime * math.sqrt(s) / math.sqrt(n))


def ustat_calibrated_radius(stat: float, n: int, d: int,
                            c: float = DEFAULT_SIMULATION_CONSTANTS["ustat_c"],
                            c_prime: float = DEFAULT_SIMULATION_CONSTANTS["ustat_c_prime"]) -> float:
    """Calibrated-constants radius sqrt(stat + c d/n + c' sqrt(stat)/sqrt(n))."""
    s = max(stat, 0.0)
    return math.sqrt(s + c * d / n + c_prime * math.sqrt(s) / math.sqrt(n))


# --- U-statistic ----------------------------------------------------------------

def ustat_statistic(batch: MeasurementBatch, center) -> float:
    """Pair statistic (2 / n(n-1)) sum_{i<j} Re<a_i, a_j>_F, a_i = Y_i X^i - center.

    Computed through the identity 2 sum_{i<j} <a_i, a_j> = ||sum_i a_i||^2 -
    sum_i ||a_i||^2, which is exactly the naive double sum at O(n d^2) cost.
    For real designs this coincides with the entrywise double sum; for
    complex Hermitian matrices the Frobenius inner product (with conjugation)
    is the reading that keeps the statistic unbiased for the squared distance.
    """
    n = batch.n
    if n < 2:
        raise ValueError("the pair statistic needs n >= 2")
    center = check_hermitian(center)
    plan = batch.plan
    y = batch.y
    d = plan.dim
    if plan.ensemble.kind == "gaussian":
        flat = plan.matrices.reshape(n, -1)
        if np.iscomplexobj(flat):
            draw_sq = np.einsum("ij,ij->i", flat, flat.conj()).real
            cross = (flat.conj() @ center.ravel()).real
        else:
            draw_sq = np.einsum("ij,ij->i", flat, flat)
            # Re<X, c>_F = X . Re(c) entrywise for real X
            cross = flat @ np.ascontiguousarray(center.real.ravel())
        total = (y @ flat).reshape(d, d) - n * center
        total_sq = float(np.sum(np.abs(total) ** 2))
        per_draw = y**2 * draw_sq - 2.0 * y * cross + float(np.sum(np.abs(center) ** 2))
    else:
        # work in the orthonormal-basis coefficient space (Parseval)
        nq = plan.ensemble.num_qubits
        c0 = pauli_coefficients(center, nq).real
        w = np.bincount(plan.indices, weights=y, minlength=d * d)
        total_coeff = d * w - n * c0
        total_sq = float(np.sum(total_coeff**2))
        per_draw = (
            d * d * y**2
            - 2.0 * d * y * c0[plan.indices]
            + float(np.sum(c0**2))
        )
    return (total_sq - float(np.sum(per_draw))) / (n * (n - 1))


def ustat_radius_sq(stat: float, n: int, d: int, c1: float, c2: float) -> float:
    """Squared radius of the pair-statistic ball: largest x solving
    x = max(stat, 0) + c1 sqrt(x)/sqrt(n) + c2 d/n."""
    base = max(stat, 0.0) + c2 * d / n
    return _largest_root_sqrt_quadratic(c1 / math.sqrt(n), base)


def ustat_confidence_set(batch: MeasurementBatch, center, alpha: float,
                         constants=None, mode: str = "theory") -> ConfidenceReport:
    """Frobenius ball from the pair statistic (isotropic designs only).

    ``theory`` mode solves x = max(stat, 0) + c1 sqrt(x)/sqrt(n) + c2 d/n for
    its largest root; ``simulation`` mode uses the calibrated radius with
    constants c = 2.5, c' = 6.
    """
    if batch.plan.ensemble.kind != "gaussian":
        raise ValueError("the U-statistic ball is only supported for isotropic designs")
    stat = ustat_statistic(batch, center)
    n, d = batch.n, batch.dim
    constants = dict(constants or {})
    if mode == "theory":
        radius_sq = ustat_radius_sq(stat, n, d,
                                    float(constants.get("c1", 1.0)),
                                    float(constants.get("c2", 1.0)))
    elif mode == "simulation":
        radius_sq = ustat_calibrated_radius(
            stat, n, d,
            c=float(constants.get("c", DEFAULT_SIMULATION_CONSTANTS["ustat_c"])),
            c_prime=float(constants.get("c_prime", DEFAULT_SIMULATION_CONSTANTS["ustat_c_prime"])),
        ) ** 2
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return ConfidenceReport(
        center=check_hermitian(center), radius_sq=radius_sq, norm_kind="frobenius",
        level_alpha=alpha, method="UStat", statistic_value=stat, n=n, d=d,
    )


# --- re-averaged full-basis statistic -------------------------------------------

def _grouped_coefficient_sums(batch: MeasurementBatch):
    plan = batch.plan
    if plan.ensemble.kind != "pauli":
        raise ValueError("re-averaging applies to Pauli designs only")
    d2 = plan.dim**2
    if plan.n % d2:
        raise ValueError(f"n = {plan.n} is not a multiple of d^2 = {d2}")
    m = plan.n // d2
    counts = np.bincount(plan.indices, minlength=d2)
    if not np.all(counts == m):
        raise ValueError("every basis index must be measured equally often")
    sums = np.bincount(plan.indices, weights=batch.y, minlength=d2)
    return sums, m


def reavg_statistic(batch: MeasurementBatch, center, sigma: float) -> float:
    """Full-basis statistic (1/n) ||ztilde||^2 - sigma^2 d^2 / n.

    The batch must measure each basis coefficient exactly m = n / d^2 times;
    the averaged coefficient measurements are centered at the basis expansion
    of ``center``.
    """
    center = check_hermitian(center)
    sums, m = _grouped_coefficient_sums(batch)
    plan = batch.plan
    n, d = batch.n, batch.dim
    z = sums / math.sqrt(m)
    coeffs = pauli_coefficients(center, plan.ensemble.num_qubits).real
    ztilde = z - math.sqrt(n) * coeffs
    return float(np.sum(ztilde**2)) / n - sigma**2 * d * d / n


def reavg_radius_sq(stat: float, n: int, d: int, sigma: float, alpha: float) -> float:
    """Squared radius of the re-averaged ball: largest x solving
    x = stat + z_{alpha/2} sigma sqrt(x)/sqrt(n) + xi_{alpha/2} d/n, with the
    chi-square quantile taken at d^2 degrees of freedom."""
    z_norm = float(stats.norm.ppf(1.0 - alpha / 2.0))
    xi = chi_square_deviation_quantile(alpha / 2.0, sigma, d * d)
    a = z_norm * sigma / math.sqrt(n)
    b = stat + xi * d / n
    return _largest_root_sqrt_quadratic(a, b)


def reavg_confidence_set(batch: MeasurementBatch, center, sigma: float, alpha: float,
                         statistic_sigma: float | None = None) -> ConfidenceReport:
    """Frobenius ball from the re-averaged statistic.

    ``statistic_sigma`` overrides the centering of the statistic, as in
    :func:`rss_confidence_set`.
    """
    stat_sigma = sigma if statistic_sigma is None else statistic_sigma
    stat = reavg_statistic(batch, center, stat_sigma)
    n, d = batch.n, batch.dim
    radius_sq = reavg_radius_sq(stat, n, d, sigma, alpha)
    return ConfidenceReport(
        center=check_hermitian(center), radius_sq=radius_sq, norm_kind="frobenius",
        level_alpha=alpha, method="ReAvg", statistic_value=stat, n=n, d=d,
    )


# --- paired residuals (variance-free) -------------------------------------------

def paired_rss_statistic(batch: MeasurementBatch, center) -> float:
    """(2/n) sum_{i <= n/2} resid_i resid_{i+n/2} over a duplicated design.

    Unbiased for the squared distance without knowledge of the noise level;
    requires draws i and i + n/2 to share the same design matrix.
    """
    plan = batch.plan
    n = plan.n
    if n % 2:
        raise ValueError("the paired statistic needs an even number of draws")
    half = n // 2
    if plan.ensemble.kind == "pauli":
        paired = np.array_equal(plan.indices[:half], plan.indices[half:])
    else:
        paired = np.array_equal(plan.matrices[:half], plan.matrices[half:])
    if not paired:
        raise ValueError("draw i and draw i + n/2 must share the same design")
    center = check_hermitian(center)
    resid = batch.y - apply_sampling(batch.plan, center)
    return 2.0 * float(np.dot(resid[:half], resid[half:])) / n
