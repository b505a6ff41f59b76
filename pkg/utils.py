import numpy as np


def log_cosh(x):
    """log(cosh(x)) without overflow for large |x|."""
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - np.log(2.0)


def sech_power(x, r: float):
    return np.exp(-r * log_cosh(x))
