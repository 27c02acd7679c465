"""Finite differences, tangent-space helpers and random simplex sampling."""
from typing import Callable

import numpy as np

ScalarFn = Callable[[np.ndarray], float]


def central_gradient(f: ScalarFn, x0: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    x0 = np.asarray(x0, dtype=float)
    dim = x0.shape[0]
    grad = np.empty(dim)
    for i in range(dim):
        step = np.zeros(dim)
        step[i] = h
        grad[i] = (f(x0 + step) - f(x0 - step)) / (2.0 * h)
    return grad


def central_hessian(f: ScalarFn, x0: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Second order central-difference Hessian of a scalar function."""
    x0 = np.asarray(x0, dtype=float)
    dim = x0.shape[0]
    f0 = f(x0)
    hess = np.zeros((dim, dim))
    eye = h * np.eye(dim)
    for i in range(dim):
        hess[i, i] = (f(x0 + eye[i]) - 2.0 * f0 + f(x0 - eye[i])) / (h * h)
        for j in range(i + 1, dim):
            pij = f(x0 + eye[i] + eye[j])
            pij -= f(x0 + eye[i] - eye[j])
            pij -= f(x0 - eye[i] + eye[j])
            pij += f(x0 - eye[i] - eye[j])
            hess[i, j] = hess[j, i] = pij / (4.0 * h * h)
    return hess


def tangent_basis(n: int) -> np.ndarray:
    """Orthonormal basis (n x (n-1)) of the hyperplane {v : sum(v) = 0}."""
    if n < 2:
        raise ValueError("tangent space needs n >= 2")
    # columns e_i - e_n span the hyperplane; QR orthonormalizes them
    raw = np.vstack([np.eye(n - 1), -np.ones((1, n - 1))])
    q, _ = np.linalg.qr(raw)
    return q


def random_simplex_points(rng: np.random.Generator, n: int, size: int,
                          concentration: float = 1.0, floor: float = 0.0) -> np.ndarray:
    """Dirichlet draws, optionally pushed away from the boundary by mixing with the barycenter."""
    points = rng.dirichlet(np.full(n, concentration), size=size)
    if floor > 0.0:
        # mixing keeps every weight >= floor
        mix = floor * n
        points = (1.0 - mix) * points + mix / n
    return points


def random_tangent_vectors(rng: np.random.Generator, n: int, size: int) -> np.ndarray:
    """Unit-norm random tangent vectors, one per row."""
    raw = rng.standard_normal((size, n))
    raw -= raw.mean(axis=1, keepdims=True)
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def random_market_path(rng: np.random.Generator, n: int, steps: int,
                       volatility: float = 0.05) -> np.ndarray:
    """Market weights driven by a geometric random walk of capitalizations."""
    log_caps = np.cumsum(volatility * rng.standard_normal((steps + 1, n)), axis=0)
    log_caps -= log_caps.max(axis=1, keepdims=True)
    caps = np.exp(log_caps)
    return caps / caps.sum(axis=1, keepdims=True)
