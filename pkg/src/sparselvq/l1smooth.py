"""Differentiable surrogates for the absolute value, the vector l1 norm and
the max-column-sum matrix norm, together with the exact norms they
approximate.

The surrogate of |x| is (1/a) * log(2 + exp(-a*x) + exp(a*x)) for a
sharpness parameter a > 0. It overestimates |x| by at most 2*log(2)/a and
has the closed-form derivative tanh(a*x/2). The matrix norm surrogate
replaces the exact max over column sums by a left-to-right fold of a
smooth two-argument max; the fold order matters because the smooth max is
not associative, so it is fixed here and mirrored by the analytic
gradient.

All functions are pure and operate on plain floats or numpy arrays.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

DEFAULT_ALPHA = 5.0

# Relative slack for the sandwich comparison; exact equality cases
# (e.g. 1x1 matrices) would otherwise hinge on float rounding.
_SANDWICH_RTOL = 1e-12


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha <= 0.0:
        raise ValueError(f"sharpness alpha must be positive and finite, got {alpha}")
    return alpha


def abs_smooth(x, alpha: float = DEFAULT_ALPHA):
    """Smooth approximation of ``|x|``, elementwise on arrays.

    Evaluated as ``|x| + (2/alpha) * log1p(exp(-alpha*|x|))``, which is
    algebraically identical to ``(1/alpha) * log(2 + exp(-alpha*x) +
    exp(alpha*x))`` but never overflows. The result lies in
    ``[|x|, |x| + 2*log(2)/alpha]`` and is an even function of x.
    """
    alpha = _check_alpha(alpha)
    ax = np.abs(x)
    return ax + (2.0 / alpha) * np.log1p(np.exp(-alpha * ax))


def abs_smooth_grad(x, alpha: float = DEFAULT_ALPHA):
    """Derivative of :func:`abs_smooth`: ``tanh(alpha*x/2)``."""
    alpha = _check_alpha(alpha)
    return np.tanh(0.5 * alpha * np.asarray(x, dtype=float))


def l1_smooth(v, alpha: float = DEFAULT_ALPHA) -> float:
    """Smooth l1 norm of a vector: sum of abs_smooth over the components."""
    return float(np.sum(abs_smooth(np.asarray(v, dtype=float), alpha)))


def l1_exact(v) -> float:
    """Exact l1 norm of a vector."""
    return float(np.sum(np.abs(v)))


def smooth_max(x, y, alpha: float = DEFAULT_ALPHA):
    """Smooth maximum via ``(x + y + abs_smooth(x - y)) / 2``.

    Symmetric in its arguments; the value lies in
    ``[max(x, y), max(x, y) + log(2)/alpha]``.
    """
    return 0.5 * (x + y + abs_smooth(x - y, alpha))


def matrix_l1_exact(mat) -> float:
    """Max absolute column sum (the operator norm induced by the vector l1 norm)."""
    m = np.asarray(mat, dtype=float)
    return float(np.max(np.sum(np.abs(m), axis=0)))


def _smoothed_column_sums(om: np.ndarray, alpha: float) -> np.ndarray:
    return np.sum(abs_smooth(om, alpha), axis=0)


def matrix_l1_smooth(omega, alpha: float = DEFAULT_ALPHA) -> float:
    """Smooth surrogate of the max-column-sum norm of a matrix.

    Column sums use abs_smooth entries; the max over columns is a
    left-to-right fold of :func:`smooth_max` (column 0 first). The error
    against the exact norm vanishes as alpha grows.
    """
    alpha = _check_alpha(alpha)
    om = np.asarray(omega, dtype=float)
    if om.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {om.shape}")
    sums = _smoothed_column_sums(om, alpha)
    acc = float(sums[0])
    for s in sums[1:]:
        acc = 0.5 * (acc + s + float(abs_smooth(acc - s, alpha)))
    return acc


def matrix_l1_smooth_grad(omega, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Gradient of :func:`matrix_l1_smooth` with respect to every entry.

    Exact chain rule through the fold: the forward pass records the
    running fold value before each merge, the backward pass propagates
    one factor (1 +- tanh)/2 per merge down to the smoothed column sums,
    and each column sensitivity multiplies tanh(alpha*entry/2).
    """
    alpha = _check_alpha(alpha)
    om = np.asarray(omega, dtype=float)
    if om.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {om.shape}")
    m, n = om.shape
    sums = _smoothed_column_sums(om, alpha)

    prefix = np.empty(n)  # fold value after consuming columns 0..j
    acc = float(sums[0])
    prefix[0] = acc
    for j in range(1, n):
        s = sums[j]
        acc = 0.5 * (acc + s + float(abs_smooth(acc - s, alpha)))
        prefix[j] = acc

    dsums = np.empty(n)
    if n == 1:
        dsums[0] = 1.0
    else:
        t = np.tanh(0.5 * alpha * (prefix[:-1] - sums[1:]))  # one value per merge
        up = 0.5 * (1.0 + t)    # d(merge)/d(previous fold value)
        down = 0.5 * (1.0 - t)  # d(merge)/d(incoming column sum)
        suffix = np.cumprod(up[::-1])[::-1]
        dsums[0] = suffix[0]
        dsums[1:-1] = down[:-1] * suffix[1:]
        dsums[-1] = down[-1]
    return dsums[np.newaxis, :] * np.tanh(0.5 * alpha * om)


def matrix_l1_smooth_grad_closed_form(omega, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Closed-form gradient estimate ``tanh(alpha*x/2)/2 - T/2`` per entry.

    Secondary evaluator kept for comparison against the fold gradient;
    :func:`matrix_l1_smooth_grad` is the one verified against finite
    differences and used in training. This form is numerically fragile
    when alpha times the partial column sums gets large.
    """
    alpha = _check_alpha(alpha)
    om = np.asarray(omega, dtype=float)
    m, n = om.shape
    smoothed = abs_smooth(om, alpha)
    sums = smoothed.sum(axis=0)

    # max over the *other* columns, per column
    order = np.argsort(sums)
    top, second = order[-1], (order[-2] if n > 1 else order[-1])
    max_other = np.where(np.arange(n) == top, sums[second], sums[top])
    if n == 1:
        max_other = np.zeros(1)

    partial = sums[np.newaxis, :] - smoothed  # column sum without the own entry
    bar = partial - max_other[np.newaxis, :]

    with np.errstate(over="ignore", invalid="ignore"):
        e_sum = np.exp(-alpha * (om + bar))
        sq = (1.0 + np.exp(alpha * om)) ** 2
        numer = (
            e_sum
            * (np.exp(2.0 * alpha * om) - 1.0)
            * (np.exp(2.0 * alpha * bar) - np.exp(2.0 * alpha * om) / sq**2)
        )
        denom = (
            2.0
            + np.exp(-alpha * (om - bar))
            + np.exp(alpha * (om + bar))
            + np.exp(alpha * (om - bar)) / sq
        )
        t_term = numer / denom
    return 0.5 * np.tanh(0.5 * alpha * om) - 0.5 * t_term


def matrix_grad_discrepancy(omega, alpha: float = DEFAULT_ALPHA) -> float:
    """Max absolute difference between the fold gradient and the closed form."""
    primary = matrix_l1_smooth_grad(omega, alpha)
    secondary = matrix_l1_smooth_grad_closed_form(omega, alpha)
    return float(np.max(np.abs(primary - secondary)))


class SandwichBounds(NamedTuple):
    lower: float
    middle: float
    upper: float
    holds: bool


def sandwich_check(omega) -> SandwichBounds:
    """Exact-norm sandwich for an m x n matrix O with L = O^T O.

    Returns (|O|_1^2 / m, |L|_1, n * |O|_1^2) and whether
    lower <= middle <= upper holds (with a 1e-12 relative slack for
    float rounding at equality).
    """
    om = np.asarray(omega, dtype=float)
    if om.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {om.shape}")
    m, n = om.shape
    norm_om = matrix_l1_exact(om)
    middle = matrix_l1_exact(om.T @ om)
    lower = norm_om**2 / m
    upper = n * norm_om**2
    slack = _SANDWICH_RTOL * max(abs(lower), abs(middle), abs(upper))
    holds = (lower <= middle + slack) and (middle <= upper + slack)
    return SandwichBounds(lower, middle, upper, holds)
