"""Central finite-difference oracle used to verify analytic gradients.

Kept deliberately independent of the library code paths it checks: the
functions below only call the scalar objective handed to them.
"""

import numpy as np


def central_diff(fn, x, h=1e-6):
    """Gradient of scalar fn at the 1-D point x by central differences."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fn(xp) - fn(xm)) / (2.0 * h)
    return g


def central_diff_matrix(fn, mat, h=1e-6):
    """Entrywise central differences for a scalar function of a matrix."""
    mat = np.asarray(mat, dtype=float)
    flat = central_diff(lambda v: fn(v.reshape(mat.shape)), mat.ravel(), h)
    return flat.reshape(mat.shape)


def assert_grad_close(analytic, numeric, rtol=1e-5, atol=1e-8, label=""):
    """Assert gradients agree; atol covers the FD noise floor near zero."""
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    err = np.abs(analytic - numeric)
    tol = atol + rtol * np.abs(numeric)
    if not np.all(err <= tol):
        worst = np.unravel_index(np.argmax(err - tol), err.shape)
        raise AssertionError(
            f"{label} gradient mismatch at {worst}: analytic "
            f"{analytic[worst]!r} vs finite-difference {numeric[worst]!r} "
            f"(abs err {err[worst]:.3e})"
        )
