"""Closed-form surfaces for the builtin charts.

catenoid: r = (cosh x cos y, cosh x sin y, x), (L, M, N) = (-sech^2 x, 0, sech^2 x)
helicoid: r = (y cos x, y sin x, x),           (L, M, N) = (0, 1/(1+y^2), 0)

The fluid velocities follow from the Chaplygin inversion: on the catenoid
``u = sqrt(2) sech^2 x, v = 0``; on the helicoid ``u = -v = 1/(1+y^2)``.
"""
import numpy as np

SQRT2 = np.sqrt(2.0)


def catenoid_surface(x, y):
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    return np.stack([np.cosh(x) * np.cos(y), np.cosh(x) * np.sin(y), x], axis=-1)


def catenoid_lmn(x, y):
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    s2 = 1.0 / np.cosh(x) ** 2
    return -s2, np.zeros_like(x), s2


def catenoid_velocity(x, y):
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    return SQRT2 / np.cosh(x) ** 2, np.zeros_like(x)


def helicoid_surface(x, y):
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    return np.stack([y * np.cos(x), y * np.sin(x), x], axis=-1)


def helicoid_lmn(x, y):
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    return np.zeros_like(x), 1.0 / (1.0 + y * y), np.zeros_like(x)


def helicoid_velocity(x, y):
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    w = 1.0 / (1.0 + y * y)
    return w, -w


SURFACES = {"catenoid": catenoid_surface, "helicoid": helicoid_surface}
LMN = {"catenoid": catenoid_lmn, "helicoid": helicoid_lmn}
VELOCITY = {"catenoid": catenoid_velocity, "helicoid": helicoid_velocity}
