"""FDR of the Benjamini–Hochberg step-up test under Archimedean dependence.

Exact and Monte Carlo bounds on the false discovery rate of the linear
step-up procedure when the p-values are exchangeable with an Archimedean
copula (independence, Clayton, Gumbel), plus the matching simulation,
order-statistics, estimation, and calibration tooling:

* :mod:`copfdr.copula` — families, generator/inverse, mixing-variable
  (frailty) sampling, dependent p-value vectors.
* :mod:`copfdr.order_stats` — Bolshev recursion for uniform
  order-statistics box probabilities and Dirac-uniform thresholds.
* :mod:`copfdr.lsu` — the step-up test, FDP accounting, vectorised FDR
  simulation.
* :mod:`copfdr.bounds` — classical, sharper, and lower FDR bounds,
  crossover points, and level calibration.
* :mod:`copfdr.estimation` — pairwise Kendall's tau and the realized
  copula moment fit of the dependence parameter.
* :mod:`copfdr.cli` — ``copfdr`` command-line tool.
"""

from ._rng import RngStream
from .bounds import (
    BoundReport,
    calibrate_q,
    gamma_floor,
    gamma_min_clayton,
    gamma_min_mc,
    lower_bound,
    sharper_upper_bound,
    z_star,
    z_star_floor,
    z_star_k,
)
from .config import SimulationConfig
from .copula import (
    CopulaModel,
    Family,
    MixingDraws,
    PValueSample,
    log_psi_inv,
    mixing_cdf,
    psi,
    psi_inv,
    sample_mixing,
    sample_pvalue_matrix,
    sample_pvalues,
)
from .estimation import (
    TAU_MAX,
    FitResult,
    KendallEstimate,
    eta_of_tau,
    kendall_tau_sample,
    realized_copula_fit,
    tau_of_eta,
)
from .lsu import FdrEstimate, TestOutcome, fdp, lsu_reject, simulate_fdr
from .order_stats import MAX_N, bolshev, dirac_uniform_thresholds, pascal_table

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "RngStream",
    "Family",
    "CopulaModel",
    "MixingDraws",
    "PValueSample",
    "psi",
    "psi_inv",
    "log_psi_inv",
    "sample_mixing",
    "mixing_cdf",
    "sample_pvalues",
    "sample_pvalue_matrix",
    "MAX_N",
    "pascal_table",
    "bolshev",
    "dirac_uniform_thresholds",
    "SimulationConfig",
    "TestOutcome",
    "FdrEstimate",
    "lsu_reject",
    "fdp",
    "simulate_fdr",
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
    "KendallEstimate",
    "FitResult",
    "TAU_MAX",
    "kendall_tau_sample",
    "tau_of_eta",
    "eta_of_tau",
    "realized_copula_fit",
]
