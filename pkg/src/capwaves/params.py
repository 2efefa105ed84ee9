"""Dimensionless parameter set and conversion from physical scales."""

import dataclasses
import math
from dataclasses import dataclass

from .errors import InvalidInputError, OutOfRegimeError

# 1/(Bo*mu) above this is reported as outside the capillary regime of the
# long-time result
THEOREM_REGIME_LIMIT = 10.0


@dataclass(frozen=True)
class PhysicalScales:
    """Characteristic scales of a wave problem, SI units."""

    H0: float
    a_surf: float
    a_bott: float
    Lx: float
    Ly: float
    g: float = 9.81
    rho: float = 1000.0
    sigma: float = 0.073

    def __post_init__(self):
        for name in ("H0", "Lx", "Ly", "g", "rho", "sigma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidInputError(f"{name} must be finite and > 0, got {v!r}")
        for name in ("a_surf", "a_bott"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidInputError(f"{name} must be finite and >= 0, got {v!r}")
        if self.a_surf > self.H0:
            raise InvalidInputError("a_surf must not exceed H0")
        if self.a_bott >= self.H0:
            raise InvalidInputError("a_bott must be smaller than H0")


@dataclass(frozen=True)
class DimensionlessParams:
    """The five dimensionless numbers of the problem.

    ``bond`` may be ``math.inf``, which switches surface tension off
    (``inv_bond == 0``).
    """

    eps: float
    mu: float
    beta: float = 0.0
    gamma: float = 1.0
    bond: float = math.inf
    d: int = 1

    def __post_init__(self):
        if self.d not in (1, 2):
            raise InvalidInputError(f"dimension must be 1 or 2, got {self.d!r}")
        for name in ("eps", "beta", "gamma"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidInputError(f"{name} must be finite, got {v!r}")
            if not 0.0 <= v <= 1.0:
                raise OutOfRegimeError(f"bound 0 <= {name} <= 1 violated: {name}={v!r}")
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise InvalidInputError(f"mu must be finite and > 0, got {self.mu!r}")
        if not self.bond > 0 or math.isnan(self.bond):
            raise InvalidInputError(f"bond must be > 0, got {self.bond!r}")

    @property
    def inv_bond(self):
        return 0.0 if math.isinf(self.bond) else 1.0 / self.bond

    @property
    def bond_mu(self):
        return self.bond * self.mu

    @property
    def capillary_scale(self):
        """eps*sqrt(mu), the amplitude that enters the curvature term."""
        return self.eps * math.sqrt(self.mu)

    @property
    def regime(self):
        if self.inv_bond == 0.0:
            return "off-theorem"
        return "theorem" if 1.0 / self.bond_mu <= THEOREM_REGIME_LIMIT else "off-theorem"

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def as_dict(self):
        return dataclasses.asdict(self)


def nondimensionalize(scales, d=1):
    """Map physical scales to (eps, mu, beta, gamma, Bo)."""
    s = scales
    return DimensionlessParams(
        eps=s.a_surf / s.H0,
        mu=s.H0**2 / s.Lx**2,
        beta=s.a_bott / s.H0,
        gamma=s.Lx / s.Ly,
        bond=s.rho * s.g * s.Lx**2 / s.sigma,
        d=d,
    )


def physical_from_dimensionless(params, H0, g=9.81, rho=1000.0):
    """Inverse of :func:`nondimensionalize` for a given depth."""
    if params.gamma == 0.0:
        raise InvalidInputError("gamma = 0 has no finite transverse scale")
    if math.isinf(params.bond):
        raise InvalidInputError("infinite Bond number has no finite surface tension")
    Lx = H0 / math.sqrt(params.mu)
    return PhysicalScales(
        H0=H0,
        a_surf=params.eps * H0,
        a_bott=params.beta * H0,
        Lx=Lx,
        Ly=Lx / params.gamma,
        g=g,
        rho=rho,
        sigma=rho * g * Lx**2 / params.bond,
    )
