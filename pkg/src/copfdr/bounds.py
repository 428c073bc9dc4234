"""FDR bounds for the step-up test under Archimedean dependence.

Quantities
----------
Throughout, ``q_i = i q / m`` are the step-up critical values,
``x_u = psi_inv(u)``, and ``Z`` is the mixing variable of the model.

* ``z_star_k``: crossover of the level-``k`` integrand,
  ``log(1 + 1/k) / (x_{q_k} - x_{q_{k+1}})``.
* ``z_star``: global crossover ``log(m) / (x_{q/m} - x_q)``; for mixing
  mass concentrated on either side of it the FDR is forced to the
  classical value ``m0 q / m``.
* ``gamma_min``: the factor in the lower bound
  ``FDR >= (m0 q / m) * gamma_min``, equal to
  ``1 - E[(e^{-Z x_{q/m}} m/q - e^{-Z x_q}/q) 1{Z <= z_star}]``;
  closed form for Clayton, Monte Carlo otherwise, exactly 1 under
  independence.
* ``gamma_floor``: analytic floor ``gamma_min >= gamma_floor`` built
  from ``F_Z(z_star)`` and the minimiser ``z_star_floor``; reported for
  reference, never used to clamp.
* ``b``: the Dirac-uniform sharper-bound correction.  With ``m1 = m -
  m0`` false nulls pinned at zero,

  ``b = (q/m) m0 sum_{k=m1+1}^{m-1} E[(T_{k+1}/q_{k+1} - T_k/q_k)
  (G_k(Z) - G_k(z*_k)) 1{Z >= z*_k}]``,

  where ``T_i = e^{-Z x_{q_i}}`` and ``G_k`` is the Bolshev probability
  of the remaining true-null order statistics clearing the thresholds of
  :func:`~copfdr.order_stats.dirac_uniform_thresholds`.  The true-null
  symmetry collapses the per-hypothesis sum to the factor ``m0``.
  ``sharper_upper = m0 q/m - b`` and ``b >= 0`` always.

Numerical strategy
------------------
The mixing variable is sampled and compared in log space only, so the
engine is exact-in-ordering for any dependence strength (Clayton
``eta = 1e3`` underflows every linear-space ``Z``).  The two signed
integrand factors are evaluated through ``expm1`` of the same log-space
quantity that defines their indicator, which makes their non-negativity
hold exactly in floating point instead of merely up to rounding.  One
``Z`` sample is shared across every ``k`` and every reported quantity
(common random numbers), matching the single-pass cost model.

``bound_sd_per_draw`` is the sample standard deviation across mixing
draws of the single-draw statistic
``m0 q/m - (q/m) m0 * (sum over k of the integrand at that draw)`` —
the per-realisation analogue of a per-replication FDP.  Averaging it
over the ``mc_draws`` sample gives the bound's standard error.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ._rng import RngStream
from .copula import (
    CopulaModel,
    Family,
    _mixing_cdf_from_log,
    _reg_lower_gamma_log,
    log_psi_inv,
    sample_log_mixing,
)
from .order_stats import bolshev_rows, pascal_table

__all__ = [
    "BoundReport",
    "z_star_k",
    "z_star",
    "z_star_floor",
    "gamma_min_mc",
    "gamma_min_clayton",
    "gamma_floor",
    "lower_bound",
    "sharper_upper_bound",
    "calibrate_q",
]


@dataclass(frozen=True)
class BoundReport:
    """All bound quantities for one ``(model, m, m0, q)`` configuration.

    Invariants (validated on construction): ``lower <= sharper_upper <=
    classical_upper``; ``b >= 0`` with ``sharper_upper = classical_upper
    - b``; ``gamma_floor <= gamma_min <= 1`` with ``lower =
    classical_upper * gamma_min``.
    """

    classical_upper: float
    sharper_upper: float
    b: float
    lower: float
    gamma_min: float
    gamma_floor: float
    z_star: float
    fz_at_zstar: float
    bound_sd_per_draw: float
    mc_draws: int

    def __post_init__(self) -> None:
        for name in (
            "classical_upper",
            "sharper_upper",
            "b",
            "lower",
            "gamma_min",
            "gamma_floor",
            "z_star",
            "fz_at_zstar",
            "bound_sd_per_draw",
        ):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.b < 0.0:
            raise ValueError(f"b must be non-negative, got {self.b!r}")
        if abs(self.sharper_upper - (self.classical_upper - self.b)) > 1e-12:
            raise ValueError("sharper_upper must equal classical_upper - b")
        if abs(self.lower - self.classical_upper * self.gamma_min) > 1e-12:
            raise ValueError("lower must equal classical_upper * gamma_min")
        if self.lower > self.sharper_upper + 1e-9:
            raise ValueError("lower must not exceed sharper_upper")
        if self.gamma_min > 1.0 + 1e-12:
            raise ValueError("gamma_min must not exceed 1")
        if self.gamma_floor > self.gamma_min + 1e-9:
            raise ValueError("gamma_floor must not exceed gamma_min")
        if not 0.0 <= self.fz_at_zstar <= 1.0:
            raise ValueError("fz_at_zstar must lie in [0, 1]")
        if self.bound_sd_per_draw < 0.0:
            raise ValueError("bound_sd_per_draw must be non-negative")
        if int(self.mc_draws) < 1:
            raise ValueError("mc_draws must be >= 1")


# ---------------------------------------------------------------------------
# crossover points
# ---------------------------------------------------------------------------


def _logsubexp(a: Union[float, np.ndarray], b: Union[float, np.ndarray]):
    """``log(exp(a) - exp(b))`` for ``a > b``, stable for any magnitudes."""
    with np.errstate(divide="ignore"):
        return a + np.log1p(-np.exp(np.asarray(b) - a))


def _validate_mq(m: int, q: float) -> None:
    if int(m) < 2:
        raise ValueError("m must be >= 2")
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")


def _log_z_star_k(model: CopulaModel, m: int, q: float, k: int) -> float:
    if model.is_independent:
        return 0.0
    lp_k = log_psi_inv(model, k * q / m)
    lp_k1 = log_psi_inv(model, (k + 1) * q / m)
    return math.log(math.log1p(1.0 / k)) - float(_logsubexp(lp_k, lp_k1))


def z_star_k(model: CopulaModel, m: int, q: float, k: int) -> float:
    """Level-``k`` crossover ``log(1+1/k) / (psi_inv(q_k) - psi_inv(q_{k+1}))``.

    Exactly 1 under independence (including Gumbel ``eta = 1``).  Valid
    for ``1 <= k <= m - 1``.  At extreme dependence the linear value can
    underflow to 0; the engine works with its logarithm internally.
    """
    _validate_mq(m, q)
    k = int(k)
    if not 1 <= k <= m - 1:
        raise ValueError(f"k must satisfy 1 <= k <= {m - 1}, got {k}")
    if model.is_independent:
        return 1.0
    with np.errstate(under="ignore"):
        return float(np.exp(_log_z_star_k(model, m, q, k)))


def _log_z_star(model: CopulaModel, m: int, q: float) -> float:
    if model.is_independent:
        return 0.0
    lp_first = log_psi_inv(model, q / m)
    lp_last = log_psi_inv(model, q)
    return math.log(math.log(m)) - float(_logsubexp(lp_first, lp_last))


def z_star(model: CopulaModel, m: int, q: float) -> float:
    """Global crossover ``log(m) / (psi_inv(q/m) - psi_inv(q))``.

    Exactly 1 under independence; underflows to 0 at extreme dependence
    (use the log-space engine quantities in that regime).
    """
    _validate_mq(m, q)
    if model.is_independent:
        return 1.0
    with np.errstate(under="ignore"):
        return float(np.exp(_log_z_star(model, m, q)))


def _log_z_star_floor(model: CopulaModel, m: int, q: float) -> float:
    lp_first = float(log_psi_inv(model, q / m))
    lp_last = float(log_psi_inv(model, q))
    numerator = math.log(m) + lp_first - lp_last
    return math.log(numerator) - float(_logsubexp(lp_first, lp_last))


def z_star_floor(model: CopulaModel, m: int, q: float) -> float:
    """Minimiser ``(ln m + ln psi_inv(q/m) - ln psi_inv(q)) / (psi_inv(q/m)
    - psi_inv(q))`` used by the analytic floor; always ``>= z_star``."""
    _validate_mq(m, q)
    with np.errstate(under="ignore"):
        return float(np.exp(_log_z_star_floor(model, m, q)))


# ---------------------------------------------------------------------------
# gamma_min and its floor
# ---------------------------------------------------------------------------


def _gamma_terms(model: CopulaModel, m: int, q: float, log_z: np.ndarray) -> np.ndarray:
    """Per-draw integrand of ``1 - gamma_min``, exactly non-negative.

    ``(e^{-Z x_{q/m}} m/q - e^{-Z x_q}/q) 1{Z <= z_star}`` rewritten as
    ``(T_m/q) expm1(ln m - Z (x_{q/m} - x_q))`` with the indicator taken
    on the sign of the inner argument, so indicator and integrand can
    never disagree in floating point.
    """
    lp_first = float(log_psi_inv(model, q / m))
    lp_last = float(log_psi_inv(model, q))
    lsub = float(_logsubexp(lp_first, lp_last))
    with np.errstate(over="ignore", under="ignore"):
        inner = math.log(m) - np.exp(log_z + lsub)
        t_last = np.exp(-np.exp(log_z + lp_last))
        terms = np.where(inner >= 0.0, (t_last / q) * np.expm1(inner), 0.0)
    return terms


def gamma_min_mc(
    model: CopulaModel,
    m: int,
    q: float,
    mc_draws: int,
    rng_stream: RngStream,
) -> float:
    """Monte Carlo ``gamma_min`` from ``mc_draws`` mixing draws.

    Exactly 1 under independence (the integrand vanishes identically at
    the degenerate mixing value).  The per-draw integrand is heavy-tailed
    — a rare indicator times a factor of order ``m/q`` — so the standard
    error decays slowly; the Clayton closed form is preferred when
    available.
    """
    _validate_mq(m, q)
    if model.is_independent:
        return 1.0
    log_z = sample_log_mixing(model, int(mc_draws), rng_stream)
    return 1.0 - float(_gamma_terms(model, m, q, log_z).mean())


def gamma_min_clayton(eta: float, m: int, q: float) -> float:
    """Closed-form Clayton ``gamma_min``: ``1 - I1 + I2`` with
    ``I1 = F_{Gamma(1/eta,1)}(m^eta ln m / (m^eta - 1))`` and
    ``I2 = F_{Gamma(1/eta,1)}(ln m / (m^eta - 1))``.

    The level ``q`` cancels from both arguments; it is accepted (and
    validated) for signature symmetry only.  Evaluated through log-space
    arguments so extreme ``eta`` stays exact: the limits are 1 as
    ``eta -> 0`` and ``F(ln m)/... -> 1/m``-type decay as
    ``eta -> inf``.
    """
    eta = float(eta)
    if eta <= 0.0 or not math.isfinite(eta):
        raise ValueError("Clayton requires eta > 0")
    _validate_mq(m, q)
    alpha = 1.0 / eta
    t = eta * math.log(m)
    # log(m**eta - 1), exact for both tiny and huge t
    log_pow_m1 = t + math.log1p(-math.exp(-t)) if t > 1e-15 else math.log(math.expm1(t))
    log_log_m = math.log(math.log(m))
    i1 = float(_reg_lower_gamma_log(alpha, t + log_log_m - log_pow_m1))
    i2 = float(_reg_lower_gamma_log(alpha, log_log_m - log_pow_m1))
    return 1.0 - i1 + i2


def _gamma_floor_given_fz(model: CopulaModel, m: int, q: float, fz: float) -> float:
    lp_first = float(log_psi_inv(model, q / m))
    lp_last = float(log_psi_inv(model, q))
    log_zf = _log_z_star_floor(model, m, q)
    with np.errstate(over="ignore", under="ignore"):
        survivor = float(np.exp(-np.exp(log_zf + lp_last)))
        width = float(-np.expm1(lp_last - lp_first))  # 1 - psi_inv(q)/psi_inv(q/m)
    arg_below = (m - 1) / q * fz
    arg_above = survivor / q * width * (1.0 - fz)
    return 1.0 - min(arg_below, arg_above)


def gamma_floor(
    model: CopulaModel,
    m: int,
    q: float,
    mc_draws: int,
    rng_stream: Optional[RngStream] = None,
) -> float:
    """Analytic floor ``gamma_floor <= gamma_min``; may be negative.

    ``1 - min((m-1)/q * F_Z(z*), e^{-z_floor psi_inv(q)}/q * (1 -
    psi_inv(q)/psi_inv(q/m)) * (1 - F_Z(z*)))``.  ``F_Z(z*)`` is exact
    for Clayton, empirical (``mc_draws`` samples) for Gumbel, and taken
    as the left limit 0 at the independence atom ``z* = 1`` — under that
    convention the first argument vanishes and the floor equals 1.
    """
    _validate_mq(m, q)
    if model.is_independent:
        return 1.0
    log_zs = _log_z_star(model, m, q)
    if model.family is Family.CLAYTON:
        fz = _mixing_cdf_from_log(model, log_zs)
    else:
        if rng_stream is None:
            raise ValueError("Gumbel gamma_floor requires an rng_stream")
        log_draws = sample_log_mixing(model, int(mc_draws), rng_stream)
        fz = _mixing_cdf_from_log(model, log_zs, log_draws)
    return _gamma_floor_given_fz(model, m, q, fz)


def lower_bound(
    model: CopulaModel,
    m: int,
    m0: int,
    q: float,
    mc_draws: int,
    rng_stream: Optional[RngStream] = None,
) -> float:
    """Lower FDR bound ``(m0 q / m) * gamma_min``.

    Uses the closed form for Clayton, the degenerate value 1 for
    independence, and Monte Carlo (``mc_draws`` draws) for Gumbel.
    """
    _validate_mq(m, q)
    if not 0 <= int(m0) <= int(m):
        raise ValueError("m0 must satisfy 0 <= m0 <= m")
    if model.is_independent:
        gamma = 1.0
    elif model.family is Family.CLAYTON:
        gamma = gamma_min_clayton(model.eta, m, q)
    else:
        if rng_stream is None:
            raise ValueError("Gumbel lower_bound requires an rng_stream")
        gamma = gamma_min_mc(model, m, q, mc_draws, rng_stream)
    return m0 * q / m * gamma


# ---------------------------------------------------------------------------
# sharper upper bound (Dirac-uniform configuration)
# ---------------------------------------------------------------------------


def _bound_terms(
    model: CopulaModel,
    m: int,
    m0: int,
    q: float,
    log_z: np.ndarray,
) -> np.ndarray:
    """Per-draw ``sum_k`` of the sharper-bound integrand (non-negative).

    For each retained level ``k`` the signed factor is evaluated as
    ``(T_{k+1}/q_{k+1}) * (1 - e^{-delta})`` with ``delta = Z (x_{q_k} -
    x_{q_{k+1}}) - log(1 + 1/k)``, whose sign defines the ``Z >= z*_k``
    indicator — non-negativity is exact in floating point.
    """
    m1 = m - m0
    n = log_z.size
    out = np.zeros(n)
    if m0 <= 1:
        return out
    levels = np.arange(1, m + 1) * (q / m)
    lp = np.asarray(log_psi_inv(model, levels))
    with np.errstate(over="ignore", under="ignore"):
        thresholds = np.exp(-np.exp(log_z[:, None] + lp[None, :]))
    table = pascal_table(m0 - 1)
    width = m0 - 1
    for k in range(m1 + 1, m):
        lsub = float(_logsubexp(lp[k - 1], lp[k]))
        log_gap = math.log1p(1.0 / k)
        with np.errstate(over="ignore", under="ignore"):
            delta = np.exp(log_z + lsub) - log_gap
            diff = thresholds[:, k] / levels[k] * (-np.expm1(-delta))
        mask = delta >= 0.0
        if not mask.any():
            continue
        rows = np.zeros((int(mask.sum()), width))
        rows[:, k - m1 - 1 :] = thresholds[mask, k:]
        g_at_z = bolshev_rows(rows, table)
        log_zk = math.log(log_gap) - lsub
        with np.errstate(over="ignore", under="ignore"):
            star_tail = np.exp(-np.exp(log_zk + lp[k:]))
        star_row = np.zeros(width)
        star_row[k - m1 - 1 :] = star_tail
        g_at_star = float(bolshev_rows(star_row[None, :], table)[0])
        out[mask] += diff[mask] * (g_at_z - g_at_star)
    return out


def sharper_upper_bound(
    model: CopulaModel,
    m: int,
    m0: int,
    q: float,
    mc_draws: int,
    rng_stream: RngStream,
) -> BoundReport:
    """Full bound report under the Dirac-uniform configuration.

    Draws one mixing sample of size ``mc_draws`` and reuses it for the
    correction ``b``, ``gamma_min`` (when Monte Carlo), ``F_Z(z*)``, and
    the floor — common random numbers across every reported quantity.
    Independence short-circuits to the exact report (``b = 0``, all
    bounds equal to ``m0 q / m``).

    An empty level range (``m0 <= 1``) yields ``b = 0``; that is a valid
    report, not an error.
    """
    _validate_mq(m, q)
    m, m0 = int(m), int(m0)
    if not 0 <= m0 <= m:
        raise ValueError("m0 must satisfy 0 <= m0 <= m")
    mc_draws = int(mc_draws)
    if mc_draws < 1:
        raise ValueError("mc_draws must be >= 1")
    classical = m0 * q / m
    if model.is_independent:
        return BoundReport(
            classical_upper=classical,
            sharper_upper=classical,
            b=0.0,
            lower=classical,
            gamma_min=1.0,
            gamma_floor=1.0,
            z_star=1.0,
            fz_at_zstar=1.0,
            bound_sd_per_draw=0.0,
            mc_draws=mc_draws,
        )

    log_z = sample_log_mixing(model, mc_draws, rng_stream)
    terms = _bound_terms(model, m, m0, q, log_z)
    scale = q / m * m0
    b = scale * float(terms.mean())
    per_draw = classical - scale * terms
    sd = float(per_draw.std(ddof=1)) if mc_draws > 1 else 0.0

    log_zs = _log_z_star(model, m, q)
    if model.family is Family.CLAYTON:
        gamma = gamma_min_clayton(model.eta, m, q)
        fz = _mixing_cdf_from_log(model, log_zs)
    else:
        gamma = 1.0 - float(_gamma_terms(model, m, q, log_z).mean())
        fz = _mixing_cdf_from_log(model, log_zs, log_z)
    floor = _gamma_floor_given_fz(model, m, q, fz)

    with np.errstate(under="ignore"):
        zs_linear = float(np.exp(log_zs))
    return BoundReport(
        classical_upper=classical,
        sharper_upper=classical - b,
        b=b,
        lower=classical * gamma,
        gamma_min=gamma,
        gamma_floor=floor,
        z_star=zs_linear,
        fz_at_zstar=fz,
        bound_sd_per_draw=sd,
        mc_draws=mc_draws,
    )


def calibrate_q(
    model: CopulaModel,
    m: int,
    m0_assumed: int,
    q_target: float,
    mc_draws: int,
    rng_stream: RngStream,
    tol: float = 1e-4,
) -> float:
    """Largest ``q'`` in ``[q_target, 1)`` whose sharper upper bound stays
    within the target, found by bisection to absolute tolerance ``tol``.

    The constraint is ``sharper_upper(model, m, m0_assumed, q') <=
    (m0_assumed / m) * q_target``; since ``b >= 0`` it always holds at
    ``q' = q_target``, so the adjusted level satisfies ``q' >= q_target``
    (with equality for independence, returned immediately).  One mixing
    sample is drawn up front and shared by every bisection evaluation —
    the mixing law does not depend on ``q``, so this is plain common
    random numbers and makes the bracketed function smooth in ``q'``.

    If the constraint somehow failed already at ``q_target`` (impossible
    for these families, kept as a defensive branch), the target is
    returned unchanged with a ``RuntimeWarning``.
    """
    _validate_mq(m, q_target)
    m, m0_assumed = int(m), int(m0_assumed)
    if not 0 <= m0_assumed <= m:
        raise ValueError("m0_assumed must satisfy 0 <= m0_assumed <= m")
    if not 0.0 < tol < 1.0:
        raise ValueError("tol must lie in (0, 1)")
    if model.is_independent:
        return q_target

    log_z = sample_log_mixing(model, int(mc_draws), rng_stream)
    cap = m0_assumed / m * q_target
    limit = 1.0 - 1e-9

    def upper_at(q_prime: float) -> float:
        terms = _bound_terms(model, m, m0_assumed, q_prime, log_z)
        scale = q_prime / m * m0_assumed
        return scale - scale * float(terms.mean())

    if upper_at(q_target) > cap:
        warnings.warn(
            "sharper upper bound exceeds the target already at q_target; "
            "returning q_target unchanged",
            RuntimeWarning,
        )
        return q_target

    lo = q_target
    hi = None
    step = q_target
    while hi is None:
        candidate = min(lo + step, limit)
        if upper_at(candidate) <= cap:
            lo = candidate
            if candidate >= limit:
                return lo
            step *= 2.0
        else:
            hi = candidate
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if upper_at(mid) <= cap:
            lo = mid
        else:
            hi = mid
    return lo
