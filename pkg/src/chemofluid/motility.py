"""Signal-dependent motility functions.

Every family satisfies ``phi(0) = 0``, ``phi'(0) > 0`` and ``phi > 0`` on
``(0, inf)``.  ``motility_bounds`` returns the pair ``(lam, Lam)`` with
``lam * v <= phi(v) <= Lam * v`` and ``|phi'(v)| <= Lam`` on ``[0, K]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError

FAMILIES = ("linear", "saturating", "exponential", "tabulated")

_ALIASES = {
    "linear": "linear",
    "saturating": "saturating",
    "saturatingrational": "saturating",
    "rational": "saturating",
    "exponential": "exponential",
    "exponentialdecay": "exponential",
    "tabulated": "tabulated",
    "custom": "tabulated",
}

_PARAMS = {"linear": "c", "saturating": "a", "exponential": "chi"}
_DEFAULTS = {"linear": 1.0, "saturating": 1.0, "exponential": 1.0}
N_SAMPLES = 10_000


@dataclass(frozen=True)
class MotilitySpec:
    family: str = "linear"
    param: float = 1.0
    table_v: tuple = field(default=(), repr=False)
    table_phi: tuple = field(default=(), repr=False)
    source: str = ""

    def __post_init__(self):
        fam = _ALIASES.get(self.family.lower().replace("_", "").replace("-", ""))
        if fam is None:
            raise DomainError(f"unknown motility family {self.family!r}")
        object.__setattr__(self, "family", fam)
        if fam == "tabulated":
            _validate_table(np.asarray(self.table_v, float), np.asarray(self.table_phi, float))
        elif fam == "linear":
            if not self.param > 0:
                raise DomainError("linear motility needs c > 0 so that phi'(0) > 0")
        elif not self.param >= 0 or not math.isfinite(self.param):
            raise DomainError(f"{fam} motility parameter must be a finite nonnegative real")

    @classmethod
    def linear(cls, c=1.0):
        return cls("linear", c)

    @classmethod
    def saturating(cls, a=1.0):
        return cls("saturating", a)

    @classmethod
    def exponential(cls, chi=1.0):
        return cls("exponential", chi)

    @classmethod
    def tabulated(cls, v, phi, source=""):
        return cls("tabulated", 0.0, tuple(map(float, v)), tuple(map(float, phi)), source)

    @classmethod
    def from_table_file(cls, path):
        """Load a two-column text table ``v  phi(v)``."""
        data = np.loadtxt(path, ndmin=2)
        if data.shape[1] != 2:
            raise DomainError(f"{path}: motility table must have exactly two columns")
        return cls.tabulated(data[:, 0], data[:, 1], source=str(path))

    @property
    def vmax(self) -> float:
        return self.table_v[-1] if self.family == "tabulated" else math.inf

    def describe(self) -> str:
        if self.family == "tabulated":
            return f"tabulated, path={self.source}"
        return f"{self.family}, {_PARAMS[self.family]}={self.param!r}"

    def _interp(self):
        return _pchip(self.table_v, self.table_phi)


_PCHIP_CACHE: dict = {}


def _pchip(tv, tp):
    key = (tv, tp)
    if key not in _PCHIP_CACHE:
        _PCHIP_CACHE[key] = PchipInterpolator(np.asarray(tv), np.asarray(tp), extrapolate=False)
    return _PCHIP_CACHE[key]


def _validate_table(v, p):
    if v.ndim != 1 or v.shape != p.shape or v.size < 3:
        raise DomainError("motility table needs at least three (v, phi) rows")
    if v[0] != 0.0 or p[0] != 0.0:
        raise DomainError("motility table must start at v = 0 with phi(0) = 0")
    if np.any(np.diff(v) <= 0):
        raise DomainError("motility table v column must be strictly increasing")
    if np.any(p[1:] <= 0):
        raise DomainError("motility table violates phi > 0 on (0, inf)")
    interp = PchipInterpolator(v, p, extrapolate=False)
    if not interp.derivative()(0.0) > 0:
        raise DomainError("motility table violates phi'(0) > 0")
    s = np.linspace(0.0, v[-1], N_SAMPLES + 1)[1:]
    if np.any(interp(s) <= 0):
        raise DomainError("interpolated motility is not positive on (0, vmax]")


def _check_v(spec, v):
    v = np.asarray(v, dtype=float)
    if np.any(v < 0) or np.any(np.isnan(v)):
        raise DomainError("motility evaluated at negative signal; positivity was lost upstream")
    if spec.family == "tabulated" and np.any(v > spec.vmax):
        raise DomainError(f"signal exceeds tabulated range vmax={spec.vmax}")
    return v


def phi(spec: MotilitySpec, v):
    v = _check_v(spec, v)
    if spec.family == "linear":
        out = spec.param * v
    elif spec.family == "saturating":
        out = v / (1.0 + spec.param * v)
    elif spec.family == "exponential":
        out = v * np.exp(-spec.param * v)
    else:
        out = spec._interp()(v)
        out = np.where(v == 0.0, 0.0, out)
    return out if np.ndim(out) else float(out)


def phi_prime(spec: MotilitySpec, v):
    v = _check_v(spec, v)
    if spec.family == "linear":
        out = np.full_like(v, spec.param)
    elif spec.family == "saturating":
        out = 1.0 / (1.0 + spec.param * v) ** 2
    elif spec.family == "exponential":
        out = (1.0 - spec.param * v) * np.exp(-spec.param * v)
    else:
        out = spec._interp().derivative()(v)
    return out if np.ndim(out) else float(out)


def motility_bounds(spec: MotilitySpec, K: float) -> tuple[float, float]:
    """Return ``(lam, Lam)`` valid on ``(0, K]``."""
    if not K > 0 or not math.isfinite(K):
        raise DomainError(f"K must be a positive real, got {K}")
    c = spec.param
    if spec.family == "linear":
        return c, c
    if spec.family == "saturating":
        # phi/v = 1/(1+av) decreasing; |phi'| = 1/(1+av)^2 <= 1
        return 1.0 / (1.0 + c * K), 1.0
    if spec.family == "exponential":
        # phi/v = exp(-chi v); |phi'| peaks at v=0 (value 1) vs exp(-2) at v=2/chi
        return math.exp(-c * K), 1.0
    if K > spec.vmax:
        raise DomainError(f"K={K} exceeds tabulated range vmax={spec.vmax}")
    s = np.linspace(0.0, K, N_SAMPLES + 1)[1:]
    ratio = phi(spec, s) / s
    slope0 = float(phi_prime(spec, 0.0))
    lam = float(ratio.min())
    Lam = float(max(ratio.max(), slope0, np.abs(phi_prime(spec, s)).max()))
    return lam, Lam
