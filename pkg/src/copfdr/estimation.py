"""Copula-parameter estimation from pairwise Kendall's tau.

The dependence parameter is fit by the realized-copula moment method:
compute the sample Kendall's tau for every column pair, then choose
``eta_hat`` minimising the weighted sum of squared moment gaps
``tau_hat_ij - tau(eta)``.  With diagonal pair weights the minimiser has
a closed form — ``tau(eta_hat)`` equals the weighted mean of the
pairwise taus — so the fit reduces to inverting the family's tau curve:

* Clayton: ``tau(eta) = eta / (2 + eta)``, inverse ``2 tau / (1 - tau)``
* Gumbel:  ``tau(eta) = (eta - 1) / eta``, inverse ``1 / (1 - tau)``

Both families model nonnegative association only; a nonpositive mean
tau cannot be inverted (Clayton needs ``eta > 0``) and is rejected,
except Gumbel at exactly zero, which legitimately maps to ``eta = 1``
(independence).  A mean tau at the upper boundary is clamped to
``TAU_MAX`` before inversion and flagged.

Kendall's tau uses the tau-a convention: concordant minus discordant
over ``C(n, 2)``, ties contributing zero.  Copula data is continuous,
so ties have probability zero and the convention only matters for
degenerate inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .copula import CopulaModel, Family

__all__ = [
    "TAU_MAX",
    "KendallEstimate",
    "FitResult",
    "kendall_tau_sample",
    "tau_of_eta",
    "eta_of_tau",
    "realized_copula_fit",
]

#: Largest tau accepted for inversion; means above it are clamped here.
TAU_MAX = 1.0 - 1e-9


@dataclass(frozen=True)
class KendallEstimate:
    """Pairwise sample Kendall's tau matrix from ``n`` observations.

    ``tau_matrix`` is symmetric with entries in ``[-1, 1]``; the
    diagonal is set to 1 by convention and never consumed by the fit.
    """

    tau_matrix: np.ndarray
    n: int

    def __post_init__(self) -> None:
        tau = np.asarray(self.tau_matrix, dtype=float)
        if tau.ndim != 2 or tau.shape[0] != tau.shape[1]:
            raise ValueError("tau_matrix must be square")
        if not np.all(np.isfinite(tau)):
            raise ValueError("tau_matrix must be finite")
        if not np.allclose(tau, tau.T, atol=1e-12):
            raise ValueError("tau_matrix must be symmetric")
        if np.any(np.abs(tau) > 1.0 + 1e-12):
            raise ValueError("tau_matrix entries must lie in [-1, 1]")
        if int(self.n) < 2:
            raise ValueError("n must be >= 2")
        tau = tau.copy()
        tau.flags.writeable = False
        object.__setattr__(self, "tau_matrix", tau)
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class FitResult:
    """Realized-copula fit: parameter, family, and diagnostics.

    ``mean_tau`` is the raw (unclamped) weighted mean of the pairwise
    taus; ``clamped`` records whether it had to be pulled to ``TAU_MAX``
    before inversion.  ``objective`` is the weighted sum of squared
    moment gaps evaluated at ``eta_hat``.
    """

    eta_hat: float
    family: Family
    objective: float
    mean_tau: float
    clamped: bool

    def __post_init__(self) -> None:
        family = Family(self.family)
        object.__setattr__(self, "family", family)
        if not math.isfinite(self.eta_hat):
            raise ValueError("eta_hat must be finite")
        if family is Family.CLAYTON and self.eta_hat <= 0.0:
            raise ValueError("Clayton eta_hat must be > 0")
        if family is Family.GUMBEL and self.eta_hat < 1.0:
            raise ValueError("Gumbel eta_hat must be >= 1")
        if not (math.isfinite(self.objective) and self.objective >= 0.0):
            raise ValueError("objective must be finite and non-negative")


def kendall_tau_sample(data: np.ndarray) -> KendallEstimate:
    """Pairwise tau-a matrix of an ``n x m`` data matrix.

    ``tau_ij = sum_{a<b} sign(x_ia - x_ib) sign(x_ja - x_jb) / C(n, 2)``
    — concordant minus discordant pairs over all pairs, ties counting as
    neither.  Invariant under strictly increasing transforms of any
    column.  Enumerates all pairs (O(n^2 m), fine at desk scale) one
    anchor row at a time so memory stays O(n m).

    A constant column makes tau undefined and raises an error naming it.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("data must be a 2-d array (n observations x m columns)")
    n, m = data.shape
    if n < 2:
        raise ValueError("need at least 2 observations")
    if m < 2:
        raise ValueError("need at least 2 columns")
    if not np.all(np.isfinite(data)):
        raise ValueError("data must be finite (no NaN or infinity)")
    spans = data.max(axis=0) - data.min(axis=0)
    constant = np.flatnonzero(spans == 0.0)
    if constant.size:
        raise ValueError(
            f"column {int(constant[0])} is constant; Kendall's tau is undefined"
        )
    accum = np.zeros((m, m))
    for a in range(n - 1):
        signs = np.sign(data[a + 1 :] - data[a])
        accum += signs.T @ signs
    tau = accum / (n * (n - 1) / 2.0)
    np.fill_diagonal(tau, 1.0)
    return KendallEstimate(tau_matrix=tau, n=n)


def tau_of_eta(family: Union[Family, str], eta: Optional[float] = None) -> float:
    """Population Kendall's tau of the family at ``eta``.

    Clayton ``eta/(2+eta)`` (accepting the ``eta = 0`` independence
    boundary so the tau range is the closed-from-below ``[0, 1)``),
    Gumbel ``(eta-1)/eta``, independence 0.  Monotone increasing in
    ``eta`` for both parametric families.
    """
    family = Family(family)
    if family is Family.INDEPENDENCE:
        return 0.0
    if eta is None or not math.isfinite(eta):
        raise ValueError(f"{family.value} requires a finite eta")
    eta = float(eta)
    if family is Family.CLAYTON:
        if eta < 0.0:
            raise ValueError("Clayton requires eta >= 0")
        return eta / (2.0 + eta)
    if eta < 1.0:
        raise ValueError("Gumbel requires eta >= 1")
    return (eta - 1.0) / eta


def eta_of_tau(family: Union[Family, str], tau: float) -> float:
    """Inverse of :func:`tau_of_eta` on ``tau in [0, 1)``.

    Clayton ``2 tau / (1 - tau)``, Gumbel ``1 / (1 - tau)``.  Negative
    tau is outside both models (nonnegative association only) and
    rejected; round-trips ``tau_of_eta`` to 1e-12.
    """
    family = Family(family)
    tau = float(tau)
    if not 0.0 <= tau < 1.0:
        raise ValueError(
            f"tau must lie in [0, 1), got {tau!r}; negative association unsupported"
        )
    if family is Family.INDEPENDENCE:
        if tau != 0.0:
            raise ValueError("independence has tau = 0 only")
        return 1.0
    if family is Family.CLAYTON:
        return 2.0 * tau / (1.0 - tau)
    return 1.0 / (1.0 - tau)


def realized_copula_fit(
    tau: KendallEstimate,
    family: Union[Family, str],
    weights: Optional[np.ndarray] = None,
) -> FitResult:
    """Moment fit of ``eta`` to a pairwise tau matrix.

    Minimises ``sum_{i<j} w_ij (tau_ij - tau(eta))^2``; with diagonal
    pair weights the minimiser is ``tau(eta_hat) = weighted mean of
    tau_ij``, inverted in closed form.  ``weights`` is an optional
    ``m x m`` matrix of nonnegative pair weights read on the upper
    triangle (default: all ones).

    A weighted mean at or above ``TAU_MAX`` is clamped (flag set).  A
    nonpositive mean is rejected for Clayton and a negative one for
    Gumbel — negative association is unsupported by these families;
    Gumbel accepts a mean of exactly zero (``eta_hat = 1``).
    """
    family = Family(family)
    if family is Family.INDEPENDENCE:
        raise ValueError(
            "realized_copula_fit requires a parametric family (clayton or gumbel)"
        )
    matrix = tau.tau_matrix
    m = matrix.shape[0]
    if m < 2:
        raise ValueError("need at least 2 columns to fit")
    iu, ju = np.triu_indices(m, k=1)
    pair_taus = matrix[iu, ju]
    if weights is None:
        pair_weights = np.ones(pair_taus.size)
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (m, m):
            raise ValueError(f"weights must have shape ({m}, {m}), got {weights.shape}")
        if not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite")
        if np.any(weights < 0.0):
            raise ValueError("weights must be non-negative")
        pair_weights = weights[iu, ju]
        if pair_weights.sum() == 0.0:
            raise ValueError("weights must not all be zero on the upper triangle")
    mean_tau = float(pair_weights @ pair_taus / pair_weights.sum())
    if family is Family.CLAYTON and mean_tau <= 0.0:
        raise ValueError(
            f"mean tau {mean_tau:.6g} is not positive: negative association "
            "unsupported (Clayton requires tau > 0)"
        )
    if family is Family.GUMBEL and mean_tau < 0.0:
        raise ValueError(
            f"mean tau {mean_tau:.6g} is negative: negative association unsupported"
        )
    clamped = mean_tau > TAU_MAX
    fitted_tau = TAU_MAX if clamped else mean_tau
    eta_hat = eta_of_tau(family, fitted_tau)
    gaps = pair_taus - tau_of_eta(family, eta_hat)
    objective = float(pair_weights @ (gaps * gaps))
    return FitResult(
        eta_hat=eta_hat,
        family=family,
        objective=objective,
        mean_tau=mean_tau,
        clamped=clamped,
    )
