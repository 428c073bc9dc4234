"""Archimedean copula families and their frailty representation.

This module implements the three families used throughout the package —
independence, Clayton, and Gumbel — through their generator ``psi``, its
inverse, and the positive mixing variable ``Z`` whose Laplace transform
equals the generator.  Dependent p-value vectors are produced by the
Marshall–Olkin frailty algorithm: draw one ``Z`` per vector and set
``P_i = psi(-ln(Y_i) / Z)`` with ``Y_i`` iid uniform, which makes each
coordinate marginally uniform while coupling them all through ``Z``.

Generators
----------
========== =============================== =========================
family     ``psi(t)``                      ``psi_inv(u)``
========== =============================== =========================
independence ``exp(-t)``                   ``-ln(u)``
clayton    ``(1 + eta*t)**(-1/eta)``       ``(u**(-eta) - 1)/eta``
gumbel     ``exp(-t**(1/eta))``            ``(-ln(u))**eta``
========== =============================== =========================

Mixing variables
----------------
* Clayton: ``Z = eta * G`` with ``G ~ Gamma(1/eta, 1)``.  For ``eta > 1``
  the shape ``1/eta`` is below one; sampling uses the exact boost
  identity ``G = G' * U**eta`` with ``G' ~ Gamma(1/eta + 1, 1)`` and
  ``U`` uniform, which is well defined in log space even when ``G``
  itself would underflow.
* Gumbel: ``Z = (a(U)/W)**(eta-1)`` with ``U`` uniform on ``(0, pi)``
  and ``W`` unit exponential, where ``a`` is Kanter's auxiliary function
  for the positive stable law of index ``1/eta``.  A widely reprinted
  variant of ``a`` carries ``sin((1-eta)v/eta)``, which is negative for
  ``eta > 1`` and cannot belong to a positive variate; we use the
  standard form ``a(v) = sin(((eta-1)/eta) v) * sin(v/eta)**(1/(eta-1))
  / sin(v)**(eta/(eta-1))`` and validate it against the Laplace
  transform of the generator.
* Independence: ``Z = 1`` identically; Gumbel with ``eta = 1`` evaluates
  identically to independence (generator, inverse, and mixing law).

Numerical conventions
---------------------
Large dependence parameters push ``psi_inv`` far outside double range,
so every internally critical quantity is carried in log space
(:func:`log_psi_inv`, :func:`sample_log_mixing`).  The public linear
functions are exact at ordinary parameter values and raise rather than
silently return degenerate values when asked to materialise draws that
underflow (see :func:`sample_mixing`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import special

from ._rng import RngStream

__all__ = [
    "Family",
    "CopulaModel",
    "MixingDraws",
    "PValueSample",
    "psi",
    "psi_inv",
    "log_psi_inv",
    "kanter_log_a",
    "sample_log_mixing",
    "sample_mixing",
    "mixing_cdf",
    "sample_pvalues",
    "sample_pvalue_matrix",
]

ArrayLike = Union[float, np.ndarray]

# Clayton psi_inv switches to its asymptotic log form above this exponent;
# expm1 is exact below it and the tail term exp(-t) is < 1e-304 above it.
_CLAYTON_LOG_SWITCH = 700.0


class Family(str, enum.Enum):
    """Archimedean copula family tag."""

    INDEPENDENCE = "independence"
    CLAYTON = "clayton"
    GUMBEL = "gumbel"


def _as_family(family: Union[str, Family]) -> Family:
    if isinstance(family, Family):
        return family
    try:
        return Family(str(family).lower())
    except ValueError:
        raise ValueError(
            f"unknown family {family!r}; expected one of "
            f"{[f.value for f in Family]}"
        ) from None


@dataclass(frozen=True)
class CopulaModel:
    """An Archimedean copula family together with its dependence parameter.

    Parameters
    ----------
    family : Family or str
        One of ``independence``, ``clayton``, ``gumbel``.
    eta : float, optional
        Dependence parameter; ignored for independence.  Clayton requires
        ``eta > 0``, Gumbel requires ``eta >= 1``.

    Notes
    -----
    Gumbel with ``eta = 1`` is the independence copula; all evaluations
    (generator, inverse, mixing law) short-circuit to the independence
    forms in that case, reported by :attr:`is_independent`.
    """

    family: Family
    eta: Optional[float] = None

    def __post_init__(self) -> None:
        fam = _as_family(self.family)
        object.__setattr__(self, "family", fam)
        if fam is Family.INDEPENDENCE:
            object.__setattr__(self, "eta", None)
            return
        if self.eta is None:
            raise ValueError(f"family {fam.value!r} requires a dependence parameter eta")
        eta = float(self.eta)
        if not math.isfinite(eta):
            raise ValueError("eta must be finite")
        if fam is Family.CLAYTON and eta <= 0.0:
            raise ValueError("Clayton requires eta > 0")
        if fam is Family.GUMBEL and eta < 1.0:
            raise ValueError("Gumbel requires eta >= 1")
        object.__setattr__(self, "eta", eta)

    @property
    def is_independent(self) -> bool:
        """True when the model evaluates identically to independence."""
        return self.family is Family.INDEPENDENCE or (
            self.family is Family.GUMBEL and self.eta == 1.0
        )


@dataclass(frozen=True)
class MixingDraws:
    """Realisations of the mixing (frailty) variable ``Z``.

    Attributes
    ----------
    values : numpy.ndarray
        Strictly positive, finite draws; all exactly 1 for independence.
    seed_info : tuple
        ``(seed, stream_path)`` of the stream that produced the draws.
    """

    values: np.ndarray
    seed_info: tuple

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1:
            raise ValueError("values must be a one-dimensional array")
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0.0):
            raise ValueError(
                "mixing draws must be strictly positive and finite; "
                "extreme dependence parameters underflow double precision — "
                "use sample_log_mixing for log-space draws"
            )


@dataclass(frozen=True)
class PValueSample:
    """One dependent p-value vector with its true-null labelling.

    Attributes
    ----------
    values : numpy.ndarray
        ``m`` p-values in ``[0, 1]``.
    null_mask : numpy.ndarray
        Boolean array, ``True`` marks a true null.  The first ``m0``
        coordinates are the true nulls by convention.
    m0 : int
        Number of true nulls, equal to ``null_mask.sum()``.
    """

    values: np.ndarray
    null_mask: np.ndarray
    m0: int = field(default=-1)

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        mask = np.asarray(self.null_mask, dtype=bool)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "null_mask", mask)
        if vals.ndim != 1 or mask.shape != vals.shape:
            raise ValueError("values and null_mask must be 1-d arrays of equal length")
        m0 = int(mask.sum())
        if self.m0 == -1:
            object.__setattr__(self, "m0", m0)
        elif int(self.m0) != m0:
            raise ValueError(f"m0={self.m0} does not match popcount(null_mask)={m0}")
        if np.any(vals < 0.0) or np.any(vals > 1.0) or not np.all(np.isfinite(vals)):
            raise ValueError("p-values must lie in [0, 1]")


# ---------------------------------------------------------------------------
# generator and inverse
# ---------------------------------------------------------------------------


def _validate_t(t: ArrayLike) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0):
        raise ValueError("psi requires t >= 0 (NaN rejected)")
    return arr


def _validate_u(u: ArrayLike) -> np.ndarray:
    arr = np.asarray(u, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr <= 0.0) or np.any(arr > 1.0):
        raise ValueError("psi_inv requires 0 < u <= 1")
    return arr


def _scalar_like(result: np.ndarray, template: ArrayLike) -> ArrayLike:
    if np.isscalar(template) or (isinstance(template, np.ndarray) and template.ndim == 0):
        return float(result)
    return result


def psi(model: CopulaModel, t: ArrayLike) -> ArrayLike:
    """Evaluate the copula generator ``psi(t)``.

    ``psi`` maps ``[0, inf)`` onto ``(0, 1]`` with ``psi(0) = 1`` and is
    non-increasing.  Accepts scalars or arrays; ``t = inf`` yields 0.
    """
    arr = _validate_t(t)
    if model.is_independent:
        out = np.exp(-arr)
    elif model.family is Family.CLAYTON:
        with np.errstate(over="ignore"):
            out = np.exp(-np.log1p(model.eta * arr) / model.eta)
    else:  # Gumbel
        out = np.exp(-np.power(arr, 1.0 / model.eta))
    return _scalar_like(out, t)


def psi_inv(model: CopulaModel, u: ArrayLike) -> ArrayLike:
    """Evaluate the generator inverse ``psi_inv(u)`` for ``0 < u <= 1``.

    Satisfies ``psi(psi_inv(u)) = u`` and ``psi_inv(1) = 0``.  For large
    Clayton ``eta`` the result can overflow double precision and is then
    returned as ``inf``; use :func:`log_psi_inv` in that regime.
    """
    arr = _validate_u(u)
    if model.is_independent:
        out = -np.log(arr)
    elif model.family is Family.CLAYTON:
        with np.errstate(over="ignore"):
            out = np.expm1(-model.eta * np.log(arr)) / model.eta
    else:  # Gumbel
        out = np.power(-np.log(arr), model.eta)
    return _scalar_like(out, u)


def log_psi_inv(model: CopulaModel, u: ArrayLike) -> ArrayLike:
    """Evaluate ``log(psi_inv(u))`` without overflow.

    Finite for every ``0 < u < 1`` at any admissible ``eta``; ``u = 1``
    gives ``-inf``.  This is the form consumed by the bound engine, which
    keeps all mixing-variable comparisons in log space.
    """
    arr = _validate_u(u)
    neg_log_u = -np.log(arr)  # >= 0
    with np.errstate(divide="ignore", over="ignore"):
        if model.is_independent:
            out = np.log(neg_log_u)
        elif model.family is Family.CLAYTON:
            t = model.eta * neg_log_u
            exact = np.log(np.expm1(t))
            # above the switch, log(e^t - 1) = t to below double epsilon
            out = np.where(t <= _CLAYTON_LOG_SWITCH, exact, t) - math.log(model.eta)
        else:  # Gumbel
            out = model.eta * np.log(neg_log_u)
    return _scalar_like(out, u)


# ---------------------------------------------------------------------------
# mixing-variable sampling
# ---------------------------------------------------------------------------


def kanter_log_a(v: np.ndarray, eta: float) -> np.ndarray:
    """Log of Kanter's auxiliary function for stability index ``1/eta``.

    ``a(v) = sin(((eta-1)/eta) v) * sin(v/eta)**(1/(eta-1)) /
    sin(v)**(eta/(eta-1))`` for ``v`` in ``(0, pi)``; requires
    ``eta > 1``.
    """
    if eta <= 1.0:
        raise ValueError("Kanter's representation requires eta > 1")
    v = np.asarray(v, dtype=float)
    frac = (eta - 1.0) / eta
    return (
        np.log(np.sin(frac * v))
        + np.log(np.sin(v / eta)) / (eta - 1.0)
        - np.log(np.sin(v)) * (eta / (eta - 1.0))
    )


def sample_log_mixing(model: CopulaModel, n: int, rng_stream: RngStream) -> np.ndarray:
    """Draw ``n`` values of ``log(Z)`` from the model's mixing law.

    Exact for every admissible ``eta``: the Clayton draw uses the
    gamma-boost identity so that shapes below one never underflow, and
    the Gumbel draw evaluates Kanter's representation directly in log
    space.  Independence returns zeros (``Z = 1``).
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if model.is_independent:
        return np.zeros(n)
    gen = rng_stream.generator()
    eta = model.eta
    with np.errstate(divide="ignore"):
        if model.family is Family.CLAYTON:
            alpha = 1.0 / eta
            if alpha >= 1.0:
                return math.log(eta) + np.log(gen.gamma(alpha, 1.0, n))
            # Gamma(alpha) = Gamma(alpha + 1) * U**(1/alpha), exact in law
            boosted = gen.gamma(alpha + 1.0, 1.0, n)
            return math.log(eta) + np.log(boosted) + eta * np.log(gen.random(n))
        # Gumbel: Z = (a(U)/W)**(eta-1)
        v = gen.uniform(0.0, np.pi, n)
        w = gen.standard_exponential(n)
        return (eta - 1.0) * (kanter_log_a(v, eta) - np.log(w))


def sample_mixing(model: CopulaModel, n: int, rng_stream: RngStream) -> MixingDraws:
    """Draw ``n`` mixing-variable realisations with ``E[e^{-tZ}] = psi(t)``.

    Raises if any draw under- or overflows double precision (possible for
    Clayton ``eta`` beyond a few hundred); callers in that regime should
    use :func:`sample_log_mixing` instead.
    """
    log_z = sample_log_mixing(model, n, rng_stream)
    with np.errstate(over="ignore", under="ignore"):
        values = np.exp(log_z)
    return MixingDraws(values=values, seed_info=(rng_stream.seed, rng_stream.path))


def _reg_lower_gamma_log(a: float, log_x: ArrayLike) -> ArrayLike:
    """Regularised lower incomplete gamma ``P(a, x)`` with ``x = exp(log_x)``.

    Switches to the leading series term ``x**a / Gamma(a+1)`` when ``x``
    is tiny, which keeps the result meaningful even when ``x`` itself
    underflows double precision.
    """
    log_x = np.asarray(log_x, dtype=float)
    with np.errstate(under="ignore", over="ignore"):
        series = np.exp(a * log_x - special.gammaln(a + 1.0))
        exact = special.gammainc(a, np.exp(log_x))
    return np.where(log_x < math.log(1e-8), series, exact)


def _mixing_cdf_from_log(
    model: CopulaModel,
    log_z: float,
    log_draws: Optional[np.ndarray] = None,
) -> float:
    """``F_Z(z)`` evaluated at ``z = exp(log_z)``.

    Independence is the unit step at 1; Clayton is the exact regularised
    gamma CDF; Gumbel is the empirical CDF of ``log_draws`` (required).
    """
    if model.is_independent:
        return 1.0 if log_z >= 0.0 else 0.0
    if model.family is Family.CLAYTON:
        alpha = 1.0 / model.eta
        return float(_reg_lower_gamma_log(alpha, log_z - math.log(model.eta)))
    if log_draws is None:
        raise ValueError("Gumbel mixing CDF needs Monte Carlo draws")
    return float(np.mean(log_draws <= log_z))


def mixing_cdf(
    model: CopulaModel,
    z: float,
    mc_draws: int = 10**6,
    rng_stream: Optional[RngStream] = None,
) -> float:
    """Mixing-variable CDF ``F_Z(z)`` for ``z > 0``.

    Independence: unit step at ``z = 1``.  Clayton: exact,
    ``F_{Gamma(1/eta, 1)}(z / eta)``.  Gumbel: empirical CDF from
    ``mc_draws`` Monte Carlo samples of the stable mixing law (the
    default draw count matches the package-wide figure convention);
    ``rng_stream`` is required in that case and ignored otherwise.
    """
    z = float(z)
    if not z > 0.0 or not math.isfinite(z):
        raise ValueError("mixing_cdf requires finite z > 0")
    if model.is_independent or model.family is Family.CLAYTON:
        return _mixing_cdf_from_log(model, math.log(z))
    if rng_stream is None:
        raise ValueError("Gumbel mixing_cdf requires an rng_stream")
    log_draws = sample_log_mixing(model, int(mc_draws), rng_stream)
    return _mixing_cdf_from_log(model, math.log(z), log_draws)


# ---------------------------------------------------------------------------
# dependent p-value sampling (Marshall–Olkin)
# ---------------------------------------------------------------------------


def sample_pvalue_matrix(
    model: CopulaModel,
    n: int,
    m: int,
    m0: int,
    dirac_uniform: bool,
    rng_stream: RngStream,
) -> np.ndarray:
    """Draw ``n`` dependent p-value vectors as an ``(n, m)`` array.

    Each row shares one mixing draw ``Z``; true nulls (the first ``m0``
    columns) carry ``psi(-ln(Y)/Z)`` and are marginally uniform.  With
    ``dirac_uniform`` the remaining columns are exactly zero, the
    least-favourable configuration used throughout the FDR experiments.
    Without it the false-null columns are uniform as well (all ``m``
    coordinates then follow the plain copula).

    The row stream is split as ``child(0)`` for ``Z`` and ``child(1)``
    for the uniforms, so permuting coordinates is equivalent to permuting
    the uniform inputs.
    """
    n, m, m0 = int(n), int(m), int(m0)
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    if not 0 <= m0 <= m:
        raise ValueError("m0 must satisfy 0 <= m0 <= m")
    log_z = sample_log_mixing(model, n, rng_stream.child(0))
    y = rng_stream.child(1).generator().random((n, m))
    # guard against the (probability ~2**-53) exact-zero uniform
    np.clip(y, np.finfo(float).tiny, None, out=y)
    with np.errstate(over="ignore", under="ignore", divide="ignore"):
        # t = -ln(Y)/Z evaluated as exp(log(-log y) - log z)
        t = np.exp(np.log(-np.log(y)) - log_z[:, None])
        p = psi(model, t)
    if dirac_uniform and m0 < m:
        p[:, m0:] = 0.0
    return p


def sample_pvalues(
    model: CopulaModel,
    m: int,
    m0: int,
    dirac_uniform: bool,
    rng_stream: RngStream,
) -> PValueSample:
    """Draw one dependent p-value vector of length ``m``.

    The first ``m0`` coordinates are the true nulls (``null_mask`` true);
    under ``dirac_uniform`` the false-null coordinates are exactly zero.
    Vectorised callers should use :func:`sample_pvalue_matrix`, which
    this wraps with ``n = 1``.
    """
    values = sample_pvalue_matrix(model, 1, m, m0, dirac_uniform, rng_stream)[0]
    mask = np.zeros(int(m), dtype=bool)
    mask[: int(m0)] = True
    return PValueSample(values=values, null_mask=mask, m0=int(m0))
