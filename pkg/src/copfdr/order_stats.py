"""Joint lower-bound probabilities of uniform order statistics.

:func:`bolshev` evaluates ``P(a_1 <= U_(1), ..., a_n <= U_(n))`` for the
order statistics of ``n`` iid uniforms using Bolshev's recursion

``P(a_1, ..., a_n) = 1 - sum_{j=1}^{n} C(n, j) a_j**j P(a_{j+1}, ..., a_n)``,

computed bottom-up over suffixes in ``O(n**2)`` time and ``O(n)`` space
with a precomputed Pascal table and Kahan-compensated inner sums (the
subtracted series is the one place cancellation can bite).
:func:`bolshev_rows` is the row-vectorised form used inside the Monte
Carlo loops of the bound engine, where the recursion is evaluated for
tens of thousands of threshold vectors at once.

:func:`dirac_uniform_thresholds` assembles the threshold vector that
enters the sharper FDR bound under a Dirac-uniform configuration: with
``m1 = m - m0`` false nulls pinned at zero, the surviving ``m0 - 1``
true-null thresholds for rejection level ``k`` are
``a_j = 0`` for ``j < k - m1`` and ``a_j = exp(-z * psi_inv(q_{j+m1+1}))``
otherwise, with ``q_i = i q / m``.
"""

from __future__ import annotations

import math

import numpy as np

from .copula import CopulaModel, log_psi_inv

__all__ = ["MAX_N", "bolshev", "bolshev_rows", "dirac_uniform_thresholds", "pascal_table"]

# Hard cap on the recursion size; beyond this the quadratic cost and the
# compensated-sum error model are unvalidated, so refuse loudly.
MAX_N = 200

_PASCAL_CACHE: dict[int, np.ndarray] = {}


def pascal_table(n: int) -> np.ndarray:
    """Binomial coefficients ``C(i, j)`` for ``i, j <= n`` as a dense table.

    Built once per size and cached; all entries are exact in double
    precision for ``n <= 200`` well inside the 2**53 integer window used
    by the recursion's leading terms.
    """
    n = int(n)
    if n > MAX_N:
        raise ValueError(f"bolshev recursion supports n <= {MAX_N}, got {n}")
    cached = _PASCAL_CACHE.get(n)
    if cached is not None:
        return cached
    table = np.zeros((n + 1, n + 1))
    table[:, 0] = 1.0
    for i in range(1, n + 1):
        table[i, 1 : i + 1] = table[i - 1, : i] + table[i - 1, 1 : i + 1]
    table.setflags(write=False)
    _PASCAL_CACHE[n] = table
    return table


def bolshev_rows(a: np.ndarray, table: np.ndarray | None = None) -> np.ndarray:
    """Bolshev's recursion applied to every row of ``a``.

    Parameters
    ----------
    a : numpy.ndarray, shape (rows, n)
        Threshold vectors; each row must be non-decreasing in ``[0, 1]``.
        Rows are assumed pre-validated (this is the hot inner kernel).
    table : numpy.ndarray, optional
        Pascal table covering at least ``n``; built on demand otherwise.

    Returns
    -------
    numpy.ndarray, shape (rows,)
        ``P(a_1 <= U_(1), ..., a_n <= U_(n))`` per row.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("bolshev_rows expects a 2-d array")
    rows, n = a.shape
    if n > MAX_N:
        raise ValueError(f"bolshev recursion supports n <= {MAX_N}, got {n}")
    if table is None or table.shape[0] <= n:
        table = pascal_table(n)
    # suffix[s] holds P(a_{s+1}, ..., a_n); filled from the empty suffix down.
    # powers[:, c] is maintained as a[:, c] ** (c - s + 1): each time the
    # suffix start moves left every live exponent grows by one, so a running
    # product replaces the much costlier per-term pow.
    suffix = np.ones((rows, n + 1))
    powers = np.empty_like(a)
    with np.errstate(under="ignore"):
        for s in range(n - 1, -1, -1):
            length = n - s
            powers[:, s + 1 :] *= a[:, s + 1 :]
            powers[:, s] = a[:, s]
            acc = np.zeros(rows)
            comp = np.zeros(rows)
            for j in range(1, length + 1):
                term = table[length, j] * powers[:, s + j - 1] * suffix[:, s + j]
                y = term - comp
                t = acc + y
                comp = (t - acc) - y
                acc = t
            suffix[:, s] = 1.0 - acc
    return suffix[:, 0]


def bolshev(a) -> float:
    """``P(a_1 <= U_(1), ..., a_n <= U_(n))`` for iid uniform order statistics.

    Parameters
    ----------
    a : array_like, shape (n,)
        Non-decreasing thresholds in ``[0, 1]``; ``n = 0`` returns 1.

    Raises
    ------
    ValueError
        If the thresholds are unsorted, outside ``[0, 1]``, or ``n``
        exceeds :data:`MAX_N`.
    ArithmeticError
        If the recursion leaves ``[0, 1]`` beyond 1e-10 slack — a bug
        tripwire rather than a clamp.
    """
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 1:
        raise ValueError("threshold vector must be one-dimensional")
    n = arr.size
    if n == 0:
        return 1.0
    if n > MAX_N:
        raise ValueError(f"bolshev recursion supports n <= {MAX_N}, got {n}")
    if np.any(np.isnan(arr)) or arr[0] < 0.0 or arr[-1] > 1.0:
        raise ValueError("thresholds must lie in [0, 1]")
    if np.any(np.diff(arr) < 0.0):
        raise ValueError("thresholds must be non-decreasing")
    out = float(bolshev_rows(arr[None, :])[0])
    if not -1e-10 <= out <= 1.0 + 1e-10:
        raise ArithmeticError(f"recursion left [0, 1]: {out!r}")
    return out


def dirac_uniform_thresholds(
    model: CopulaModel,
    m: int,
    m0: int,
    q: float,
    k: int,
    z: float,
) -> np.ndarray:
    """Threshold vector of the sharper bound's ``G_k`` at mixing value ``z``.

    Under a Dirac-uniform configuration with ``m1 = m - m0`` false nulls,
    the bound conditions on rejection level ``k`` and asks for the joint
    law of the ``m0 - 1`` remaining true-null order statistics above the
    thresholds ``a_j = 0`` for ``j < k - m1`` and
    ``a_j = exp(-z * psi_inv(q_{j+m1+1}))`` for ``j >= k - m1``, where
    ``q_i = i q / m``.

    Valid for ``m1 + 1 <= k <= m - 1``; the result is non-decreasing
    because ``psi_inv`` decreases and the ``q_i`` increase.
    """
    m, m0, k = int(m), int(m0), int(k)
    if not 0 <= m0 <= m:
        raise ValueError("m0 must satisfy 0 <= m0 <= m")
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    z = float(z)
    if not z > 0.0 or not math.isfinite(z):
        raise ValueError("z must be finite and positive")
    m1 = m - m0
    if not m1 + 1 <= k <= m - 1:
        raise ValueError(f"k must satisfy {m1 + 1} <= k <= {m - 1}, got {k}")
    n = m0 - 1
    out = np.zeros(n)
    # 1-based j >= k - m1 maps to q-index j + m1 + 1 in k+1, ..., m
    levels = np.arange(k + 1, m + 1) * (q / m)
    with np.errstate(over="ignore", under="ignore"):
        tail = np.exp(-np.exp(math.log(z) + log_psi_inv(model, levels)))
    out[k - m1 - 1 :] = tail
    return out
