"""Surface tension: curvature, the matrix K(g) and its time-derivative operator.

Matrix fields are stored as arrays of shape ``(d, d) + field.shape`` and
vector fields as lists of ``d`` arrays.  Nonlinear expressions are evaluated
pointwise on the 3/2-padded grid and truncated back.
"""

import math

import numpy as np

from .errors import NumericDomainError


def _as_vec(g):
    return [np.asarray(c, dtype=float) for c in (g if isinstance(g, (list, tuple)) else [g])]


def _finite(f, what):
    if not np.all(np.isfinite(f)):
        raise NumericDomainError(f"{what} is not finite")
    return f


def curvature(zeta, grid, gamma=1.0):
    """``kappa_gamma(zeta) = -div_gamma(grad_gamma zeta / sqrt(1 + |grad_gamma zeta|^2))``."""
    grads = grid.grad(zeta, gamma)

    def flux(*g):
        s = np.sqrt(1.0 + sum(c * c for c in g))
        return [c / s for c in g]

    q = grid.dealiased(flux, *grads)
    return _finite(-grid.div(q, gamma), "curvature")


def scaled_curvature_rhs(zeta, params, grid):
    """``-(1/Bo) kappa_gamma(a zeta) / a`` with ``a = eps sqrt(mu)``.

    Evaluated as ``(1/Bo) div_gamma(grad_gamma zeta (1 + a^2 |grad_gamma zeta|^2)^(-1/2))``,
    which equals the quotient exactly and tends to ``(1/Bo) Lap_gamma zeta``
    as ``a -> 0`` without any division by ``a``.
    """
    ib = params.inv_bond
    if ib == 0.0:
        return np.zeros(grid.shape)
    a2 = params.capillary_scale**2
    grads = grid.grad(zeta, params.gamma)

    def flux(*g):
        s = 1.0 / np.sqrt(1.0 + a2 * sum(c * c for c in g))
        return [c * s for c in g]

    q = grid.dealiased(flux, *grads)
    return _finite(ib * grid.div(q, params.gamma), "surface tension term")


def k_matrix(g):
    """``K(g) = ((1+|g|^2) I - g g^T) / (1+|g|^2)^(3/2)``."""
    g = _as_vec(g)
    d = len(g)
    s = 1.0 + sum(c * c for c in g)
    p = s**-1.5
    K = np.empty((d, d) + g[0].shape)
    for i in range(d):
        for j in range(d):
            K[i, j] = ((s if i == j else 0.0) - g[i] * g[j]) * p
    return K


def dk_matrix(g, v):
    """Directional derivative of :func:`k_matrix` at ``g`` along ``v``."""
    g = _as_vec(g)
    v = _as_vec(v)
    d = len(g)
    s = 1.0 + sum(c * c for c in g)
    gv = sum(a * b for a, b in zip(g, v))
    p3 = s**-1.5
    p5 = s**-2.5
    out = np.empty((d, d) + g[0].shape)
    for i in range(d):
        for j in range(d):
            eye = 1.0 if i == j else 0.0
            out[i, j] = (2 * gv * eye - v[i] * g[j] - g[i] * v[j]) * p3 \
                - 3 * gv * (s * eye - g[i] * g[j]) * p5
    return out


def matvec(M, v):
    v = _as_vec(v)
    return [sum(M[i, j] * v[j] for j in range(len(v))) for i in range(len(v))]


def k_apply(g, v):
    """``K(g) v`` without forming the matrix field."""
    g = _as_vec(g)
    v = _as_vec(v)
    s = 1.0 + sum(c * c for c in g)
    gv = sum(a * b for a, b in zip(g, v))
    p = s**-1.5
    return [(s * vi - gi * gv) * p for gi, vi in zip(g, v)]


def k_quadratic(zeta, u, params, grid):
    """``(K(a grad zeta) grad u, grad u)_2`` with ``a = eps sqrt(mu)``."""
    a = params.capillary_scale
    gz = grid.grad(zeta, params.gamma)
    gu = grid.grad(u, params.gamma)

    def dens(*fields):
        d = len(fields) // 2
        g = [a * c for c in fields[:d]]
        v = list(fields[d:])
        Kv = k_apply(g, v)
        return sum(x * y for x, y in zip(Kv, v))

    return grid.inner(grid.dealiased(dens, *gz, *gu), np.ones(grid.shape))


def k_sub_operator(zeta, dtzeta, F, params, grid):
    """Time-derivative operator of the tension term.

    ``-a div_gamma[dK_g(grad dtzeta) grad F + dK_g(grad F) grad dtzeta]``
    with ``g = a grad_gamma zeta`` and ``a = eps sqrt(mu)``, i.e. the part of
    ``d/dt (K(a grad zeta))`` acting on ``F`` and its mirror image.
    """
    gam = params.gamma
    a = params.capillary_scale
    if a == 0.0:
        return np.zeros(grid.shape)
    gz = grid.grad(zeta, gam)
    gt = grid.grad(dtzeta, gam)
    gf = grid.grad(F, gam)
    d = len(gz)

    def flux(*fields):
        g = [a * c for c in fields[:d]]
        u = list(fields[d:2 * d])
        f = list(fields[2 * d:])
        A = matvec(dk_matrix(g, u), f)
        B = matvec(dk_matrix(g, f), u)
        return [x + y for x, y in zip(A, B)]

    q = grid.dealiased(flux, *gz, *gt, *gf)
    return _finite(-a * grid.div(q, gam), "tension sub-principal term")


def area_functional(zeta, grid, gamma=1.0):
    """``int sqrt(1 + |grad_gamma zeta|^2)``."""
    grads = grid.grad(zeta, gamma)
    dens = grid.dealiased(lambda *g: np.sqrt(1.0 + sum(c * c for c in g)), *grads)
    return grid.inner(dens, np.ones(grid.shape))


def tension_energy_density(g):
    """``|g|^2 / (1 + sqrt(1 + |g|^2))`` = ``sqrt(1+|g|^2) - 1`` without cancellation."""
    g = _as_vec(g)
    m = sum(c * c for c in g)
    return m / (1.0 + np.sqrt(1.0 + m))


def k_bounds(zeta, params, grid):
    """Spectral bounds ``[(1+M^2)^(-3/2), 1]`` of ``K(a grad zeta)``, ``M = max |a grad zeta|``."""
    a = params.capillary_scale
    g = grid.grad(zeta, params.gamma)
    M = a * math.sqrt(float(np.max(sum(c * c for c in g))))
    return (1.0 + M * M) ** -1.5, 1.0
