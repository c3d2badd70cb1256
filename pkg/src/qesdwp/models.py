"""The three double-well potentials, their variable changes and gauge factors.

Conventions
-----------
Manning and Razavy use the Schrödinger operator ``-d²/dx² + V``. The Shifman
gauge ``exp(-a cosh x)`` and its polynomial operator are consistent only with
``-(1/2) d²/dx² + V``, so :func:`kinetic_prefactor` returns 1/2 for that model.

Each model reduces, after ``psi(x) = gauge(z) * phi(z)``, to a polynomial
problem for ``phi``:

=========  ==================  ============  ===================
model      z(x)                deg(phi)      singular points
=========  ==================  ============  ===================
Manning    tanh(x)**2          n             0, 1
Razavy     exp(2x)             M - 1         0
Shifman    cosh(x)             n             -1, +1
=========  ==================  ============  ===================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DomainError, InvalidQesParameters

__all__ = [
    "ManningParams",
    "RazavyParams",
    "ShifmanParams",
    "Params",
    "QesState",
    "potential_eval",
    "variable_map",
    "manning_energy",
    "gauge_factor",
    "wavefunction_eval",
    "kinetic_prefactor",
    "params_from_dict",
]


@dataclass(frozen=True)
class ManningParams:
    """Generalized Manning well ``-v1 sech^6 - v2 sech^4 - v3 sech^2``.

    ``v3`` is not an input: it is fixed by the level structure and returned by
    the solvers. The energy follows from ``v1``, ``v2`` and ``n`` alone.
    """

    v1: float
    v2: float
    n: int
    model: str = field(default="manning", init=False, repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.v1) and np.isfinite(self.v2)):
            raise InvalidQesParameters("v1 and v2 must be finite")
        if int(self.n) != self.n or self.n < 0:
            raise InvalidQesParameters(f"n must be a non-negative integer, got {self.n}")
        if self.v1 <= 0:
            raise InvalidQesParameters(f"v1 must be > 0, got {self.v1}")
        if self.delta <= 0:
            raise InvalidQesParameters(
                f"no bound QES level: sqrt(-E) = {self.delta:.6g} <= 0 for v1={self.v1}, v2={self.v2}, n={self.n}"
            )

    @property
    def s(self) -> float:
        return math.sqrt(self.v1)

    @property
    def delta(self) -> float:
        """``sqrt(-E_n)`` from the quasi-exact solvability condition."""
        s = math.sqrt(self.v1)
        return -(self.v1 + self.v2 + (3 + 4 * self.n) * s) / (2 * s)

    @property
    def energy(self) -> float:
        return -self.delta**2

    @property
    def chi(self) -> float:
        """Linear drift coefficient ``3/2 + sqrt(-E) - sqrt(v1)`` of the gauged operator."""
        return 1.5 + self.delta - self.s

    @property
    def lam(self) -> float:
        return (3 + 2 * self.delta) * self.s + self.v1 + self.v2

    def epsilon(self, v3: float) -> float:
        return -self.v1 - self.v2 - v3 - self.energy + self.delta - self.s

    def v3_from_epsilon(self, eps: float) -> float:
        return -self.v1 - self.v2 - eps - self.energy + self.delta - self.s

    @property
    def degree(self) -> int:
        return self.n

    @property
    def dim(self) -> int:
        return self.n + 1

    def as_dict(self) -> dict:
        return {"v1": self.v1, "v2": self.v2, "n": self.n}


@dataclass(frozen=True)
class RazavyParams:
    """Razavy bistable well ``(xi cosh 2x - M)^2``; the lowest M levels are algebraic."""

    xi: float
    M: int
    model: str = field(default="razavy", init=False, repr=False)

    def __post_init__(self):
        if not np.isfinite(self.xi) or self.xi == 0:
            raise InvalidQesParameters(f"xi must be finite and non-zero, got {self.xi}")
        if int(self.M) != self.M or self.M < 1:
            raise InvalidQesParameters(f"M must be an integer >= 1, got {self.M}")

    @property
    def double_well(self) -> bool:
        return self.M > self.xi

    @property
    def degree(self) -> int:
        return self.M - 1

    @property
    def dim(self) -> int:
        return self.M

    def as_dict(self) -> dict:
        return {"xi": self.xi, "M": self.M}


@dataclass(frozen=True)
class ShifmanParams:
    """Hyperbolic Shifman well ``(a²/2) sinh² x - a (n + 1/2) cosh x``."""

    a: float
    n: int
    model: str = field(default="shifman", init=False, repr=False)

    def __post_init__(self):
        if not np.isfinite(self.a) or self.a <= 0:
            raise InvalidQesParameters(f"a must be > 0, got {self.a}")
        if int(self.n) != self.n or self.n < 0:
            raise InvalidQesParameters(f"n must be a non-negative integer, got {self.n}")

    @property
    def degree(self) -> int:
        return self.n

    @property
    def dim(self) -> int:
        return self.n + 1

    def as_dict(self) -> dict:
        return {"a": self.a, "n": self.n}


Params = Union[ManningParams, RazavyParams, ShifmanParams]


def params_from_dict(model: str, values: dict) -> Params:
    if model == "manning":
        return ManningParams(float(values["v1"]), float(values["v2"]), int(values["n"]))
    if model == "razavy":
        return RazavyParams(float(values["xi"]), int(values["M"]))
    if model == "shifman":
        return ShifmanParams(float(values["a"]), int(values["n"]))
    raise InvalidQesParameters(f"unknown model {model!r}")


@dataclass(frozen=True)
class QesState:
    """One algebraic level.

    ``coeffs`` are the ascending coefficients ``a_0 .. a_deg`` of the
    polynomial factor, normalized to a monic leading term. ``roots`` may be
    complex (conjugate-closed) for Razavy levels.
    """

    level_index: int
    energy: float
    roots: tuple = ()
    coeffs: tuple = (1.0,)
    manning_v3: Optional[float] = None
    method: str = "both"

    def phi(self, z):
        z = np.asarray(z, dtype=float)
        return np.polyval(np.asarray(self.coeffs, dtype=float)[::-1], z)


def kinetic_prefactor(params: Params) -> float:
    return 0.5 if params.model == "shifman" else 1.0


def _logcosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)


def potential_eval(params: Params, x, v3: Optional[float] = None):
    """V(x) in atomic units. Manning needs the (solved) ``v3``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        if params.model == "manning":
            if v3 is None:
                raise InvalidQesParameters("Manning potential requires v3")
            sech2 = np.exp(-2.0 * _logcosh(x))
            out = -(params.v1 * sech2**3 + params.v2 * sech2**2 + v3 * sech2)
        elif params.model == "razavy":
            out = (params.xi * np.cosh(2.0 * x) - params.M) ** 2
        else:
            a = params.a
            out = 0.5 * a * a * np.sinh(x) ** 2 - a * (params.n + 0.5) * np.cosh(x)
    return out[()] if out.ndim == 0 else out


def variable_map(params: Params, x):
    x = np.asarray(x, dtype=float)
    if params.model == "manning":
        out = np.tanh(x) ** 2
    elif params.model == "razavy":
        with np.errstate(over="ignore"):
            out = np.exp(2.0 * x)
    else:
        with np.errstate(over="ignore"):
            out = np.cosh(x)
    return out[()] if out.ndim == 0 else out


def manning_energy(params: ManningParams) -> float:
    # the constructor already rejects delta <= 0
    return params.energy


def gauge_factor(params: Params, z):
    """Positive prefactor multiplying phi(z); z must lie strictly inside the physical range."""
    z = np.asarray(z, dtype=float)
    if params.model == "manning":
        if np.any((z < 0) | (z >= 1)):
            raise DomainError("Manning gauge needs 0 <= z < 1")
        out = np.exp(0.5 * params.delta * np.log1p(-z) + 0.5 * params.s * z)
    elif params.model == "razavy":
        if np.any(z <= 0):
            raise DomainError("Razavy gauge needs z > 0")
        out = np.exp(0.5 * (1 - params.M) * np.log(z) - 0.25 * params.xi * (z + 1.0 / z))
    else:
        if np.any(z < 1):
            raise DomainError("Shifman gauge needs z >= 1")
        out = np.exp(-params.a * z)
    return out[()] if out.ndim == 0 else out


def _log_gauge_and_logz(params: Params, x):
    """log(gauge) and log(z) as functions of x, evaluated without overflow."""
    if params.model == "manning":
        lc = _logcosh(x)
        t2 = np.tanh(x) ** 2
        return -params.delta * lc + 0.5 * params.s * t2, None
    if params.model == "razavy":
        with np.errstate(over="ignore"):
            return (1 - params.M) * x - 0.5 * params.xi * np.cosh(2.0 * x), 2.0 * x
    lc = _logcosh(x)
    with np.errstate(over="ignore"):
        return -params.a * np.cosh(x), lc


def wavefunction_eval(params: Params, state: QesState, x):
    """psi(x) = gauge * phi(z(x)), unnormalized, vectorized over ``x``.

    A ``longdouble`` input is evaluated and returned in that precision.
    """
    x = np.asarray(x)
    if x.dtype != np.longdouble:
        x = x.astype(float)
    if not np.all(np.isfinite(x)):
        raise DomainError("x must be finite")
    coeffs = np.asarray(state.coeffs, dtype=float)
    lg, logz = _log_gauge_and_logz(params, x)
    roots = np.asarray(state.roots, dtype=complex)
    if len(roots) and len(roots) == len(coeffs) - 1:
        # product form: no cancellation between monomials near clustered nodes
        if logz is None:
            z = np.tanh(x) ** 2
        else:
            with np.errstate(over="ignore"):
                z = np.exp(logz) if params.model == "razavy" else np.cosh(x)
        real = roots[np.abs(roots.imag) <= 1e-12 * np.maximum(1.0, np.abs(roots))].real
        upper = roots[roots.imag > 1e-12 * np.maximum(1.0, np.abs(roots))]
        lin = z[..., None] - real.astype(x.dtype)
        # each conjugate pair contributes (z - re)^2 + im^2 > 0
        quad = (z[..., None] - upper.real.astype(x.dtype)) ** 2 + upper.imag.astype(x.dtype) ** 2
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            logmag = np.log(np.abs(lin)).sum(axis=-1) + np.log(quad).sum(axis=-1)
            out = np.sign(lin).prod(axis=-1) * np.exp(lg + logmag)
        out = np.where(np.isfinite(out), out, 0.0)
    elif logz is None:
        out = np.exp(lg) * np.polyval(coeffs[::-1], np.tanh(x) ** 2)
    else:
        # sum a_m exp(lg + m log z) term by term so large z never overflows
        m = np.arange(len(coeffs))
        with np.errstate(over="ignore", invalid="ignore"):
            expo = lg[..., None] + logz[..., None] * m
            terms = coeffs * np.exp(expo)
        terms = np.where(np.isfinite(expo), terms, 0.0)
        out = terms.sum(axis=-1)
    return out[()] if out.ndim == 0 else out


def decay_ratio(params: Params, state: QesState, x_max: float) -> float:
    """max(|psi(+-x_max)|) / max|psi| sampled on [-x_max, x_max]."""
    xs = np.linspace(-x_max, x_max, 4001)
    psi = np.abs(wavefunction_eval(params, state, xs))
    return float(max(psi[0], psi[-1]) / psi.max())
