"""Independent reference values for the test suite.

Nothing here imports the package.  Free packets are rebuilt from their
momentum amplitude by direct quadrature over k, so the closed form used by
the package is checked against a different derivation.
"""

from __future__ import annotations

import math

import numpy as np

# Gaussian of width d = 1 at t = 0
MODULUS_AT_CENTER = (2.0 * math.pi) ** -0.25  # 0.6316187777...
DENSITY_AT_CENTER = 1.0 / math.sqrt(2.0 * math.pi)  # 0.3989422804...
ONE_SIGMA_MASS = math.erf(1.0 / math.sqrt(2.0))  # 0.6826894921...

# detector-edge hand integrations
PIECEWISE_TIMES = (0.5, 1.5, 3.0)
PIECEWISE_P = (0.5, 1.0, 1.0)  # j = +1, -1, +1 on [0,1], [1,2], [2,3]
SINLIKE_F = (0.0, 0.5, 0.2, -0.3)
SINLIKE_RUNMAX = (0.0, 0.5, 0.5, 0.5)
SINLIKE_RUNMAX_NEG = (0.0, 0.0, 0.0, 0.3)
SINLIKE_P = (0.0, 0.5, 0.5, 0.8)
LINEAR_TRAPEZOID = (0.0, 0.125, 0.5)  # integral of t on {0, 0.5, 1}
UNIFORM_MEAN, UNIFORM_VAR = 0.5, 1.0 / 12.0


def _k_nodes(k0: float, d: float, n: int = 4001, span: float = 12.0):
    k = np.linspace(k0 - span / d, k0 + span / d, n)
    w = np.full(n, k[1] - k[0])
    w[0] = w[-1] = 0.5 * w[0]
    return k, w


def momentum_amplitude(k, k0: float, x0: float, d: float):
    return (2.0 * d * d / math.pi) ** 0.25 * np.exp(-(d * (k - k0)) ** 2 - 1j * k * x0)


def free_packet(t: float, x, k0: float, x0: float, d: float = 1.0, chunk: int = 2000):
    """Phi(t, x) = (2 pi)^-1/2 int phi(k) exp(i k x - i k^2 t / 2) dk, by trapezoid in k."""
    return _k_integral(t, x, k0, x0, d, 0, chunk)


def free_packet_dx(t: float, x, k0: float, x0: float, d: float = 1.0, chunk: int = 2000):
    return _k_integral(t, x, k0, x0, d, 1, chunk)


def _k_integral(t, x, k0, x0, d, order, chunk):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k, w = _k_nodes(k0, d)
    amp = momentum_amplitude(k, k0, x0, d) * np.exp(-0.5j * k * k * t) * w * (1j * k) ** order
    out = np.empty(x.size, dtype=complex)
    for s in range(0, x.size, chunk):
        xs = x[s:s + chunk]
        out[s:s + chunk] = np.exp(1j * np.outer(xs, k)) @ amp
    return out / math.sqrt(2.0 * math.pi)


def free_current(t: float, x, k0: float, x0: float, d: float = 1.0):
    psi = free_packet(t, x, k0, x0, d)
    return np.imag(np.conj(psi) * free_packet_dx(t, x, k0, x0, d))


def width_factor(t, d: float = 1.0):
    """sigma(t) / sigma(0) for a free Gaussian."""
    return np.sqrt(1.0 + (np.asarray(t, dtype=float) / (2.0 * d * d)) ** 2)


def free_density(t, x, k0: float, x0: float, d: float = 1.0):
    """Normal density centred on x0 + k0 t with standard deviation d * width_factor(t)."""
    s = d * width_factor(t)
    z = (np.asarray(x, dtype=float) - x0 - k0 * t) / s
    return np.exp(-0.5 * z * z) / (s * math.sqrt(2.0 * math.pi))


def free_velocity(t, x, k0: float, x0: float, d: float = 1.0):
    """Bohmian velocity of a free Gaussian: k0 plus a linear stretching term."""
    tau = t / (2.0 * d * d)
    return k0 + (np.asarray(x, dtype=float) - x0 - k0 * t) * tau / (2.0 * d * d * (1.0 + tau * tau))


def free_characteristic(t, xi: float, k0: float, x0: float, d: float = 1.0):
    """Bohmian path of a free Gaussian started at xi: the scaled distance to the centre is fixed."""
    return x0 + k0 * np.asarray(t, dtype=float) + (xi - x0) * width_factor(t, d)


def trapezoid_cumulative(t, y):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def free_mass_right_of(t: float, a: float, k0: float, x0: float, d: float = 1.0) -> float:
    """Probability that a free Gaussian lies right of ``a`` at time ``t``."""
    s = d * float(width_factor(t, d))
    return 0.5 * math.erfc((a - x0 - k0 * t) / (s * math.sqrt(2.0)))
