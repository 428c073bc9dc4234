"""The Benjamini–Hochberg linear step-up test and its FDR simulation.

The linear step-up (LSU) test at level ``q`` sorts the p-values,
compares the ``i``-th smallest against the critical value ``i q / m``
(with ``<=``), takes ``k`` as the largest index passing, and rejects the
hypotheses carrying the ``k`` smallest p-values.  The false discovery
proportion of an outcome is ``V / max(R, 1)``; its expectation over
replications is the FDR.

:func:`simulate_fdr` estimates the FDR under a copula model in the
Dirac-uniform configuration (false-null p-values identically zero, the
conjectured least favourable case): each replication shares one mixing
draw across coordinates, as produced by
:func:`~copfdr.copula.sample_pvalue_matrix`.  Replications are organised
in fixed-size batches with one derived sub-stream per batch, so results
are deterministic given the seed and independent of scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import RngStream
from .config import SimulationConfig
from .copula import CopulaModel, PValueSample, sample_pvalue_matrix

__all__ = ["TestOutcome", "FdrEstimate", "lsu_reject", "fdp", "simulate_fdr"]

# Replications per derived sub-stream in simulate_fdr; a fixed batch size
# keeps the stream layout (and hence every estimate) independent of the
# requested replication count's factorisation.
_BATCH = 16384


@dataclass(frozen=True)
class TestOutcome:
    """Rejection set of one step-up run.

    Attributes
    ----------
    k : int
        Number of rejections (0 when no index passes).
    rejected : numpy.ndarray
        Sorted 0-based indices of the rejected hypotheses, length ``k``.
    V : int
        Rejected true nulls, per the null mask seen by :func:`lsu_reject`.
    R : int
        Total rejections; equals ``k``.
    """

    # not a test class, despite the Test* name (keeps pytest collection quiet)
    __test__ = False

    k: int
    rejected: np.ndarray
    V: int
    R: int

    def __post_init__(self) -> None:
        rej = np.asarray(self.rejected, dtype=int)
        object.__setattr__(self, "rejected", rej)
        if self.R != self.k or rej.size != self.k:
            raise ValueError("outcome requires R = k = len(rejected)")
        if not 0 <= self.V <= self.R:
            raise ValueError("outcome requires 0 <= V <= R")


@dataclass(frozen=True)
class FdrEstimate:
    """Monte Carlo FDR estimate with its spread across replications.

    ``std_error`` is ``sd_fdp / sqrt(replications)``; ``sd_fdp`` is the
    plain sample standard deviation (divisor ``replications - 1``).
    """

    mean_fdp: float
    sd_fdp: float
    std_error: float
    replications: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.mean_fdp <= 1.0:
            raise ValueError("mean_fdp must lie in [0, 1]")
        if self.sd_fdp < 0.0:
            raise ValueError("sd_fdp must be non-negative")
        expected = self.sd_fdp / math.sqrt(self.replications)
        if not math.isclose(self.std_error, expected, rel_tol=1e-9, abs_tol=1e-300):
            raise ValueError("std_error must equal sd_fdp / sqrt(replications)")


def lsu_reject(p: PValueSample, q: float) -> TestOutcome:
    """Run the linear step-up test at level ``q`` on one p-value sample.

    ``k`` is the largest ``i`` with ``p_(i) <= i q / m`` (0 if none); the
    hypotheses with the ``k`` smallest p-values are rejected, ties broken
    by ascending original index (stable sort), so Dirac zeros occupy the
    leading ranks deterministically.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    values = p.values
    m = values.size
    if m == 0:
        raise ValueError("empty p-value vector")
    order = np.argsort(values, kind="stable")
    sorted_p = values[order]
    crit = np.arange(1, m + 1) * (q / m)
    passing = np.nonzero(sorted_p <= crit)[0]
    k = int(passing[-1]) + 1 if passing.size else 0
    rejected = np.sort(order[:k])
    v = int(np.count_nonzero(p.null_mask[rejected]))
    return TestOutcome(k=k, rejected=rejected, V=v, R=k)


def fdp(outcome: TestOutcome, null_mask) -> float:
    """False discovery proportion ``V / max(R, 1)`` of an outcome.

    ``V`` is recounted against the given ``null_mask`` so an outcome can
    be scored under any labelling, not only the one it was computed with.
    """
    mask = np.asarray(null_mask, dtype=bool)
    if outcome.rejected.size and outcome.rejected.max() >= mask.size:
        raise ValueError("null_mask shorter than the rejected indices")
    v = int(np.count_nonzero(mask[outcome.rejected]))
    return v / max(outcome.R, 1)


def _fdp_batch(model: CopulaModel, cfg: SimulationConfig, n: int, stream: RngStream) -> np.ndarray:
    """FDP of ``n`` replications, vectorised across the batch.

    In the Dirac-uniform configuration the ``m1`` zeros always occupy the
    leading ranks and always pass their critical values, so ``k >= m1``
    whenever ``m1 >= 1`` and exactly ``V = k - m1`` true nulls are among
    the rejections — no per-replication index bookkeeping is needed.
    """
    m, m0, q = cfg.m, cfg.m0, cfg.q
    m1 = m - m0
    pvals = sample_pvalue_matrix(model, n, m, m0, True, stream)
    pvals.sort(axis=1)
    crit = np.arange(1, m + 1) * (q / m)
    passing = pvals <= crit[None, :]
    any_pass = passing.any(axis=1)
    k = np.where(any_pass, m - np.argmax(passing[:, ::-1], axis=1), 0)
    v = np.maximum(k - m1, 0)
    return v / np.maximum(k, 1)


def simulate_fdr(model: CopulaModel, cfg: SimulationConfig) -> FdrEstimate:
    """Estimate the LSU FDR under ``model`` in the Dirac-uniform configuration.

    Runs ``cfg.replications`` independent replications of
    ``sample_pvalues -> lsu_reject -> fdp`` (vectorised in fixed batches,
    each on its own derived sub-stream) and returns the mean, sample
    standard deviation, and standard error of the FDP.  Deterministic
    given ``cfg.seed``.
    """
    root = RngStream(cfg.seed)
    chunks = []
    done = 0
    batch_index = 0
    while done < cfg.replications:
        n = min(_BATCH, cfg.replications - done)
        chunks.append(_fdp_batch(model, cfg, n, root.child(3, batch_index)))
        done += n
        batch_index += 1
    fdps = np.concatenate(chunks)
    mean = float(fdps.mean())
    sd = float(fdps.std(ddof=1))
    return FdrEstimate(
        mean_fdp=mean,
        sd_fdp=sd,
        std_error=sd / math.sqrt(cfg.replications),
        replications=cfg.replications,
    )
