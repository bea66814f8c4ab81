"""Model problems used by the experiment drivers and the test suite."""

from __future__ import annotations

import numpy as np

from .assembly import ProblemSpec


def smooth_u(x, y):
    return np.sin(np.pi * x) * np.sin(2 * np.pi * y)


def smooth_grad(x, y):
    return (np.pi * np.cos(np.pi * x) * np.sin(2 * np.pi * y),
            2 * np.pi * np.sin(np.pi * x) * np.cos(2 * np.pi * y))


def smooth_f(x, y):
    return 5 * np.pi**2 * smooth_u(x, y)


def zero(x, y):
    return np.zeros_like(np.asarray(x, dtype=float))


def one(x, y):
    return np.ones_like(np.asarray(x, dtype=float))


def smooth_poisson(bc_mode: str = "nitsche_nonsym", gamma: float = 0.0) -> ProblemSpec:
    """-lap u = 5 pi^2 sin(pi x) sin(2 pi y), u = 0 on the boundary."""
    return ProblemSpec(f=smooth_f, g=zero, bc_mode=bc_mode, gamma=gamma)


def outflow_layer(eps: float, bc_mode: str = "nitsche_nonsym",
                  stabilization: str = "none", gamma_sd: float = 0.2,
                  gamma_cip: float = 0.005) -> ProblemSpec:
    """Convection-dominated layer problem: f = 1, beta = (0.5, 1), sigma = 0."""
    return ProblemSpec(eps=eps, beta=(0.5, 1.0), sigma=0.0, f=one, g=zero,
                       bc_mode=bc_mode, stabilization=stabilization,
                       gamma_sd=gamma_sd, gamma_cip=gamma_cip)
