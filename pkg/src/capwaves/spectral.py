"""Periodic grids, Fourier multipliers, dealiasing and discrete Sobolev norms.

Fields are plain ``numpy`` arrays of shape ``grid.shape``.  For ``d = 2`` the
first axis is ``x`` and the second ``y``; the transverse derivative carries
the factor ``gamma`` (``grad_gamma = (dx, gamma*dy)``).
"""

import math
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import InvalidInputError, NumericDomainError


class Grid:
    """Uniform periodic grid on ``[0, L1) [x [0, L2)]``."""

    def __init__(self, n, L=2 * math.pi):
        n = (n,) if np.isscalar(n) else tuple(int(v) for v in n)
        L = (L,) * len(n) if np.isscalar(L) else tuple(float(v) for v in L)
        if len(n) not in (1, 2) or len(L) != len(n):
            raise InvalidInputError("grid must be 1D or 2D with one length per axis")
        for ni in n:
            if ni < 8 or ni % 2:
                raise InvalidInputError(f"points per direction must be even and >= 8, got {ni}")
        for Li in L:
            if not (math.isfinite(Li) and Li > 0):
                raise InvalidInputError(f"domain length must be > 0, got {Li}")
        self.n = tuple(int(v) for v in n)
        self.L = L

    def __repr__(self):
        return f"Grid(n={self.n}, L={self.L})"

    def __eq__(self, other):
        return isinstance(other, Grid) and self.n == other.n and self.L == other.L

    def __hash__(self):
        return hash((self.n, self.L))

    def __getstate__(self):
        return {"n": self.n, "L": self.L}

    def __setstate__(self, state):
        self.n = state["n"]
        self.L = state["L"]

    @property
    def d(self):
        return len(self.n)

    @property
    def shape(self):
        return self.n

    @property
    def size(self):
        return int(np.prod(self.n))

    @property
    def area(self):
        return float(np.prod(self.L))

    @property
    def cell(self):
        return self.area / self.size

    @cached_property
    def coords(self):
        axes = [np.arange(ni) * (Li / ni) for ni, Li in zip(self.n, self.L)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    @property
    def x(self):
        return self.coords[0]

    @property
    def y(self):
        return self.coords[1]

    @cached_property
    def wavenumbers(self):
        """Wavenumbers broadcastable to the real-FFT coefficient shape."""
        ks = []
        for ax, (ni, Li) in enumerate(zip(self.n, self.L)):
            if ax == self.d - 1:
                k = sfft.rfftfreq(ni, d=Li / ni) * 2 * math.pi
            else:
                k = sfft.fftfreq(ni, d=Li / ni) * 2 * math.pi
            shape = [1] * self.d
            shape[ax] = k.size
            ks.append(k.reshape(shape))
        return tuple(ks)

    @cached_property
    def deriv_wavenumbers(self):
        """Same as :attr:`wavenumbers` with the Nyquist entry zeroed.

        Odd derivatives then stay real and skew-symmetric on the grid.
        """
        out = []
        for ax, k in enumerate(self.wavenumbers):
            k = k.copy()
            idx = [0] * self.d
            idx[ax] = self.n[ax] // 2
            k[tuple(idx)] = 0.0
            out.append(k)
        return tuple(out)

    @cached_property
    def mode_weights(self):
        """Multiplicity of each real-FFT coefficient in Parseval's identity."""
        nl = self.n[-1]
        w = np.full(nl // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        shape = [1] * self.d
        shape[-1] = w.size
        return np.broadcast_to(w.reshape(shape), self.spectral_shape)

    @property
    def spectral_shape(self):
        return self.n[:-1] + (self.n[-1] // 2 + 1,)

    def kgamma(self, gamma=1.0):
        """``|xi^gamma| = sqrt(xi1^2 + gamma^2 xi2^2)`` on the coefficient grid."""
        k = self.wavenumbers
        if self.d == 1:
            return np.abs(k[0])
        return np.sqrt(k[0] ** 2 + (gamma * k[1]) ** 2)

    def kabs(self):
        return self.kgamma(1.0)

    # transforms ---------------------------------------------------------
    def fft(self, f):
        axes = tuple(range(-self.d, 0))
        return sfft.rfftn(f, axes=axes)

    def ifft(self, F):
        axes = tuple(range(-self.d, 0))
        return sfft.irfftn(F, s=self.n, axes=axes)

    # calculus -----------------------------------------------------------
    def deriv(self, f, axis=0, order=1):
        k = self.deriv_wavenumbers[axis] if order % 2 else self.wavenumbers[axis]
        return self.ifft((1j * k) ** order * self.fft(f))

    def grad(self, f, gamma=1.0):
        """Twisted gradient as a list of components."""
        F = self.fft(f)
        kd = self.deriv_wavenumbers
        out = [self.ifft(1j * kd[0] * F)]
        if self.d == 2:
            out.append(gamma * self.ifft(1j * kd[1] * F))
        return out

    def div(self, v, gamma=1.0):
        kd = self.deriv_wavenumbers
        F = 1j * kd[0] * self.fft(v[0])
        if self.d == 2:
            F = F + gamma * 1j * kd[1] * self.fft(v[1])
        return self.ifft(F)

    def laplacian(self, f, gamma=1.0):
        """``div_gamma grad_gamma f`` built from first derivatives."""
        kd = self.deriv_wavenumbers
        sym = -kd[0] ** 2
        if self.d == 2:
            sym = sym - (gamma * kd[1]) ** 2
        return self.ifft(sym * self.fft(f))

    def mean(self, f):
        return float(np.mean(f))

    def inner(self, f, g):
        """Discrete L2 inner product (trapezoidal rule)."""
        return float(np.sum(f * g) * self.cell)

    def l2(self, f):
        return math.sqrt(max(self.inner(f, f), 0.0))

    def linf(self, f):
        return float(np.max(np.abs(f)))

    # dealiasing ---------------------------------------------------------
    @cached_property
    def fine(self):
        """3/2-padded grid used for dealiased nonlinear products."""
        n = tuple(2 * (-(-3 * ni // 4)) for ni in self.n)
        return Grid(n, self.L)

    def _copy_modes(self, F, src_shape, dst_n):
        dst_shape = dst_n[:-1] + (dst_n[-1] // 2 + 1,)
        out = np.zeros(F.shape[: F.ndim - self.d] + dst_shape, dtype=complex)
        lead = (Ellipsis,)
        if self.d == 1:
            m = min(src_shape[0], dst_shape[0]) - 1
            out[lead + (slice(0, m),)] = F[lead + (slice(0, m),)]
        else:
            n1 = min(src_shape[0], dst_shape[0])
            h = n1 // 2
            m = min(src_shape[1], dst_shape[1]) - 1
            out[lead + (slice(0, h), slice(0, m))] = F[lead + (slice(0, h), slice(0, m))]
            out[lead + (slice(-h + 1, None), slice(0, m))] = F[lead + (slice(-h + 1, None), slice(0, m))]
        return out

    def to_fine(self, f):
        """Spectral interpolation onto :attr:`fine` (Nyquist dropped)."""
        fine = self.fine
        F = self._copy_modes(self.fft(f), self.spectral_shape, fine.n)
        return fine.ifft(F) * (fine.size / self.size)

    def from_fine(self, f_fine):
        """Truncate a field on :attr:`fine` back to this grid."""
        fine = self.fine
        F = self._copy_modes(fine.fft(f_fine), fine.spectral_shape, self.n)
        return self.ifft(F) * (self.size / fine.size)

    def dealiased(self, func, *fields):
        """Evaluate ``func`` pointwise on the padded grid, return truncated."""
        res = func(*[self.to_fine(f) for f in fields])
        if isinstance(res, (list, tuple)):
            return type(res)(self.from_fine(r) for r in res)
        return self.from_fine(res)

    def filter(self, f, order=36, alpha=36.0):
        """Exponential cutoff acting on the top eighth of the spectrum."""
        sig = np.ones(self.spectral_shape)
        for ax, k in enumerate(self.wavenumbers):
            kmax = math.pi * self.n[ax] / self.L[ax]
            eta = np.abs(k) / kmax
            cut = 7.0 / 8.0
            s = np.where(eta > cut, np.exp(-alpha * ((eta - cut) / (1 - cut)) ** order), 1.0)
            sig = sig * s
        return self.ifft(sig * self.fft(f))


def _check_field(f, grid):
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise InvalidInputError(f"field shape {f.shape} does not match grid {grid.shape}")
    return f


def apply_multiplier(f, symbol, grid):
    """Apply the Fourier multiplier ``symbol`` to a real field.

    ``symbol`` is either an array broadcastable to the coefficient shape or a
    callable receiving the tuple of wavenumber arrays.
    """
    f = _check_field(f, grid)
    m = symbol(grid.wavenumbers) if callable(symbol) else np.asarray(symbol)
    m = np.broadcast_to(m, grid.spectral_shape)
    if not np.all(np.isfinite(m)):
        raise NumericDomainError("multiplier symbol is not finite on the grid")
    return grid.ifft(m * grid.fft(f))


def P_symbol(grid, mu, gamma=1.0):
    k = grid.kgamma(gamma)
    return k / np.sqrt(1.0 + math.sqrt(mu) * k)


def apply_P(f, params, grid):
    """The order-1/2 operator |D^gamma| / (1 + sqrt(mu)|D^gamma|)^(1/2)."""
    return apply_multiplier(f, P_symbol(grid, params.mu, params.gamma), grid)


def lambda_symbol(grid, s):
    return (1.0 + grid.kabs() ** 2) ** (s / 2.0)


def sobolev_norm(f, s, grid):
    """Discrete H^s norm, ``|Lambda^s f|_2``."""
    f = _check_field(f, grid)
    F = grid.fft(f)
    w = grid.mode_weights * (1.0 + grid.kabs() ** 2) ** s
    tot = float(np.sum(w * np.abs(F) ** 2)) * grid.area / grid.size**2
    if not math.isfinite(tot):
        raise NumericDomainError("Sobolev norm is not finite")
    return math.sqrt(tot)


def sobolev_inner(f, g, s, grid):
    """``(Lambda^s f, Lambda^s g)_2``."""
    F = grid.fft(f)
    Gc = grid.fft(g)
    w = grid.mode_weights * (1.0 + grid.kabs() ** 2) ** s
    return float(np.sum(w * (F * np.conj(Gc)).real)) * grid.area / grid.size**2


def P_norm(f, params, grid, s=0.0):
    """``|P f|_{H^s}`` computed directly in Fourier space."""
    F = grid.fft(f)
    w = grid.mode_weights * (1.0 + grid.kabs() ** 2) ** s * P_symbol(grid, params.mu, params.gamma) ** 2
    return math.sqrt(float(np.sum(w * np.abs(F) ** 2)) * grid.area / grid.size**2)
