"""Reaction-rate extraction from <sigma_x(t)> trajectories.

The trajectory decays from -1 toward 0; after the transient window t <= tau
it is fit to -exp(-Gamma t) by linear least squares on log(-sigma_x), which is
reproducible and free of initialization sensitivity.  The rmse of the fit (in
log space) is the quality signal; strongly non-exponential kinetics show up
there rather than being modelled.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError

__all__ = ["fit_rate", "DEFAULT_TAU"]

# transient / polaron-formation timescale in cutoff units
DEFAULT_TAU = 1.0


def fit_rate(times, sigma_x, tau: float = DEFAULT_TAU) -> tuple[float, float]:
    """Fit -exp(-Gamma t) on t > tau; returns (Gamma, rmse in log space)."""
    t = np.asarray(times, dtype=float)
    sx = np.asarray(sigma_x, dtype=float)
    if t.shape != sx.shape:
        raise InvalidInputError("times and sigma_x must have matching shapes")
    window = t > tau
    if int(np.count_nonzero(window)) < 10:
        raise InvalidInputError(f"need at least 10 samples beyond tau={tau}")
    tw = t[window]
    sw = sx[window]
    if np.any(sw >= 0):
        raise InvalidInputError(
            "sigma_x must stay negative in the fit window (log undefined); try a larger tau"
        )
    y = np.log(-sw)
    slope, intercept = np.polyfit(tw, y, 1)
    resid = y - (slope * tw + intercept)
    rmse = math.sqrt(float(np.mean(resid**2)))
    return -float(slope), rmse
