"""Bethe-ansatz root systems and their numerical solution.

Every model's root equations share one shape::

    sum_{j != k} 2 / (z_k - z_j) + g(z_k) = 0

with a model-specific one-body field ``g``:

* Manning  ``g = 1/(2z) + (1 + sqrt(-E))/(z - 1) + sqrt(v1)``
* Razavy   ``g = xi/(2 z²) - (M - 2)/z - xi/2``
* Shifman  ``g = (2a z² - z - 2a)/(1 - z²)``

Manning and Shifman roots are real and the equations are the gradient of a
log-potential that is concave on every "cell" (a fixed count of roots per
interval between singular points). One seed per cell plus damped Newton
ascent therefore reaches every configuration. Razavy roots are generally
complex; those configurations are followed by continuation in xi from the
large-xi limit, where the roots cluster at +1 and -1 around scaled Hermite
zeros.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from numpy.polynomial.hermite import hermroots

from .errors import IncompleteEnumeration, PoleCollision, Unsupported
from .models import ManningParams, Params, RazavyParams, ShifmanParams

__all__ = [
    "BaeSystem",
    "SolverOptions",
    "Observables",
    "bae_system",
    "bae_residual",
    "bae_jacobian",
    "solve_bae",
    "reconstruct_observables",
    "closed_form_roots",
    "razavy_m3_candidates",
    "expected_count",
]


@dataclass(frozen=True)
class SolverOptions:
    max_starts: Optional[int] = None
    newton_tol: float = 1e-12
    max_iters: int = 200
    dedup_tol: float = 1e-8
    pole_guard: float = 1e-12
    rng_seed: int = 42

    def __post_init__(self):
        for name in ("newton_tol", "dedup_tol", "pole_guard"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    def starts_for(self, unknown_count: int) -> int:
        if self.max_starts is not None:
            return self.max_starts
        return max(64, 64 * unknown_count)


@dataclass(frozen=True)
class BaeSystem:
    model: str
    unknown_count: int
    singular_points: tuple
    field: Callable
    field_derivative: Callable
    # one-body log-potential whose derivative is `field`; None when no real cell structure exists
    potential: Optional[Callable] = None
    # d field / d(parameter) used by continuation (Razavy only)
    field_param_derivative: Optional[Callable] = None

    def residual(self, z):
        z = np.asarray(z)
        if len(z) == 0:
            return np.zeros(0, dtype=z.dtype)
        d = z[:, None] - z[None, :]
        np.fill_diagonal(d, 1.0)
        pair = 2.0 / d
        np.fill_diagonal(pair, 0.0)
        return pair.sum(axis=1) + self.field(z)

    def jacobian(self, z):
        z = np.asarray(z)
        d = z[:, None] - z[None, :]
        np.fill_diagonal(d, 1.0)
        jac = 2.0 / d**2
        np.fill_diagonal(jac, 0.0)
        np.fill_diagonal(jac, -jac.sum(axis=1) + self.field_derivative(z))
        return jac

    def scale(self, z):
        """Magnitude of the terms entering each residual; used for relative convergence."""
        z = np.asarray(z)
        d = np.abs(z[:, None] - z[None, :])
        np.fill_diagonal(d, np.inf)
        return (2.0 / d).sum(axis=1) + np.abs(self.field(z)) + 1.0

    def log_potential(self, z):
        z = np.asarray(z, dtype=float)
        d = np.abs(z[:, None] - z[None, :])
        iu = np.triu_indices(len(z), 1)
        return 2.0 * np.log(d[iu]).sum() + self.potential(z).sum()


def bae_system(params: Params) -> BaeSystem:
    if params.model == "manning":
        s, c1 = params.s, 1.0 + params.delta
        return BaeSystem(
            "manning",
            params.n,
            (0.0, 1.0),
            lambda z: 0.5 / z + c1 / (z - 1.0) + s,
            lambda z: -0.5 / z**2 - c1 / (z - 1.0) ** 2,
            lambda z: 0.5 * np.log(np.abs(z)) + c1 * np.log(np.abs(z - 1.0)) + s * z,
        )
    if params.model == "razavy":
        xi, M = params.xi, params.M
        return BaeSystem(
            "razavy",
            M - 1,
            (0.0,),
            lambda z: xi / (2.0 * z**2) - (M - 2) / z - xi / 2.0,
            lambda z: -xi / z**3 + (M - 2) / z**2,
            None,
            lambda z: 1.0 / (2.0 * z**2) - 0.5,
        )
    a = params.a
    return BaeSystem(
        "shifman",
        params.n,
        (-1.0, 1.0),
        lambda z: (2 * a * z**2 - z - 2 * a) / (1.0 - z**2),
        lambda z: -(1.0 + z**2) / (1.0 - z**2) ** 2,
        lambda z: 0.5 * np.log(np.abs(z - 1.0)) + 0.5 * np.log(np.abs(z + 1.0)) - 2 * a * z,
    )


def _check_guard(system: BaeSystem, z, guard: float):
    z = np.asarray(z)
    for p in system.singular_points:
        if np.any(np.abs(z - p) <= guard):
            raise PoleCollision(f"root within {guard:g} of singular point {p:g}")
    if len(z) > 1:
        d = np.abs(z[:, None] - z[None, :])
        np.fill_diagonal(d, np.inf)
        if d.min() <= guard:
            raise PoleCollision(f"two roots closer than {guard:g}")


def bae_residual(params: Params, roots: Sequence, pole_guard: float = 1e-12) -> np.ndarray:
    system = bae_system(params)
    z = np.asarray(roots)
    if z.dtype.kind not in "fc":
        z = z.astype(float)
    if len(z) != system.unknown_count:
        raise ValueError(f"expected {system.unknown_count} roots, got {len(z)}")
    _check_guard(system, z, pole_guard)
    return system.residual(z)


def bae_jacobian(params: Params, roots: Sequence) -> np.ndarray:
    return bae_system(params).jacobian(np.asarray(roots))


@dataclass(frozen=True)
class Observables:
    energy: float
    manning_v3: Optional[float] = None
    manning_epsilon: Optional[float] = None


def reconstruct_observables(params: Params, roots: Sequence) -> Observables:
    total = complex(np.sum(np.asarray(roots, dtype=complex))).real if len(roots) else 0.0
    if params.model == "razavy":
        xi, M = params.xi, params.M
        return Observables(xi**2 + 2 * M - 1 + 2 * xi * total)
    if params.model == "shifman":
        return Observables(params.a * total - params.n**2 / 2.0)
    n = params.n
    eps = -4.0 * params.s * total - 4.0 * n * (n - 1) - 4.0 * params.chi * n
    return Observables(params.energy, params.v3_from_epsilon(eps), eps)


def expected_count(params: Params) -> int:
    return params.dim


def closed_form_roots(params: Params) -> List[np.ndarray]:
    """Explicit one-root (two for Razavy M=2) solutions used as regression targets."""
    if params.model == "manning" and params.n == 1:
        s, chi = params.s, params.chi
        disc = math.sqrt(chi**2 + 2 * s)
        return [np.array([(-chi + sign * disc) / (2 * s)]) for sign in (1, -1)]
    if params.model == "razavy" and params.M == 2:
        return [np.array([1.0]), np.array([-1.0])]
    if params.model == "shifman" and params.n == 1:
        a = params.a
        disc = math.sqrt(1 + 16 * a * a)
        return [np.array([(1 + sign * disc) / (4 * a)]) for sign in (1, -1)]
    if params.model == "razavy" and params.M == 1 or params.model != "razavy" and params.n == 0:
        return [np.zeros(0)]
    raise Unsupported(f"no closed form for {params}")


def razavy_m3_candidates(xi: float) -> np.ndarray:
    """All values produced by the printed M = 3 root expressions over every sign choice.

    Which sign branches pair into a configuration is not stated, so only the
    set of values is returned. The rows for ``z2, z3`` with ``+-1, -+1`` are
    included as well.
    """
    q = np.sqrt(complex(4 * xi * xi + 1))
    r = np.sqrt(1 + q)
    t = np.sqrt(2 - 2 * q)
    sq2 = math.sqrt(2)
    out = [1.0, -1.0]
    signs = (1, -1)
    for s1 in signs:
        for s2 in signs:
            for s3 in signs:
                for s4 in signs:
                    for s5 in signs:
                        num = s1 * (sq2 * r + s2 * q + s3 * 1) * sq2 * r * (-1 + q)
                        den = 2 * (sq2 * (q + 3) * r + s4 * 4 * q + s5 * 4) * xi
                        out.append(num / den)
    for s1 in signs:
        out.append((s1 * sq2 * r + q) / (2 * xi))
        out.append((1 + q + s1 * sq2 * r) / (2 * xi))
        out.append((1 - q + s1 * t) / (2 * xi))
        for s2 in signs:
            for s3 in signs:
                num = -(-1 + q + s1 * -1 * t) * t * (1 + q)
                den = 2 * xi * ((q - 3) * t + s2 * 4 * q + s3 * -4)
                out.append(num / den)
    return np.unique(np.round(np.array(out, dtype=complex), 14))


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------


def _sort_roots(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z)
    if z.dtype.kind == "c":
        idx = np.lexsort((z.imag, np.round(z.real, 10)))
        return z[idx]
    return np.sort(z)


def _realify(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if np.all(np.abs(z.imag) <= 1e-12 * np.maximum(1.0, np.abs(z))):
        return np.sort(z.real)
    return _sort_roots(z)


def _conjugate_closed(z: np.ndarray, tol: float = 1e-7) -> bool:
    z = np.asarray(z, dtype=complex)
    used = np.zeros(len(z), dtype=bool)
    for k, zk in enumerate(z):
        d = np.abs(z - np.conj(zk))
        d[used] = np.inf
        j = int(np.argmin(d))
        if d[j] > tol * max(1.0, abs(zk)):
            return False
        used[j] = True
    return True


def _symmetrize(z: np.ndarray) -> np.ndarray:
    """Project a nearly conjugate-closed set onto an exactly conjugate-closed one."""
    z = np.asarray(z, dtype=complex)
    out = z.copy()
    free = np.ones(len(z), dtype=bool)
    for k in np.argsort(-np.abs(z.imag)):
        if not free[k]:
            continue
        free[k] = False
        d = np.abs(z - np.conj(z[k]))
        d[~free] = np.inf
        j = int(np.argmin(d)) if free.any() else k
        if free.any() and d[j] < abs(z[k] - np.conj(z[k])):
            free[j] = False
            w = 0.5 * (z[k] + np.conj(z[j]))
            out[k], out[j] = w, np.conj(w)
        else:
            out[k] = z[k].real
    return out


# scaled-residual floor accepted when the absolute tolerance sits below round-off
_REL_TOL = 1e-13


def _relative_residual(system: BaeSystem, z) -> float:
    with np.errstate(all="ignore"):
        return float(np.max(np.abs(system.residual(z)) / system.scale(z)))


def _newton(system: BaeSystem, z, opts: SolverOptions, max_iters: int, rel_tol: float = 0.0):
    """Damped Newton on the residual max-norm. Returns the converged roots or None."""
    z = np.array(z, dtype=complex)
    if len(z) == 0:
        return z
    with np.errstate(all="ignore"):
        r = system.residual(z)
        for _ in range(max_iters):
            nr = np.max(np.abs(r))
            if not np.isfinite(nr):
                return None
            if nr < opts.newton_tol or (rel_tol and np.max(np.abs(r) / system.scale(z)) < rel_tol):
                return z
            try:
                dz = np.linalg.solve(system.jacobian(z), -r)
            except np.linalg.LinAlgError:
                return None
            if not np.all(np.isfinite(dz)):
                return None
            t = 1.0
            while True:
                zn = z + t * dz
                try:
                    _check_guard(system, zn, opts.pole_guard)
                    rn = system.residual(zn)
                    nrn = np.max(np.abs(rn))
                except PoleCollision:
                    nrn = np.inf
                if np.isfinite(nrn) and nrn < (1 - 1e-4 * t) * nr:
                    break
                t *= 0.5
                if t < 1e-6:
                    # accept a full step when stagnating at round-off level
                    return z if _relative_residual(system, z) < _REL_TOL else None
            z, r = zn, rn
    return None


def _cell_ascent(system: BaeSystem, z0: np.ndarray, opts: SolverOptions):
    """Newton ascent of the concave cell log-potential for real-rooted models."""
    z = np.sort(np.asarray(z0, dtype=float))
    if len(z) == 0:
        return z
    pts = np.array(system.singular_points)

    def cells(v):
        return np.searchsorted(pts, v)

    cell0 = cells(z)
    with np.errstate(all="ignore"):
        f = system.log_potential(z)
        for _ in range(opts.max_iters):
            r = system.residual(z)
            if not np.all(np.isfinite(r)):
                return None
            if np.max(np.abs(r)) < opts.newton_tol:
                return z
            jac = system.jacobian(z)
            try:
                dz = np.linalg.solve(jac, -r)
            except np.linalg.LinAlgError:
                dz = r.copy()
            if not np.all(np.isfinite(dz)) or r @ dz <= 0:
                dz = r / np.max(np.abs(jac.diagonal()))
            slope = r @ dz
            t = 1.0
            while True:
                zn = z + t * dz
                if np.all(np.diff(zn) > 0) and np.array_equal(cells(zn), cell0):
                    fn = system.log_potential(zn)
                    if np.isfinite(fn) and fn >= f + 1e-4 * t * slope:
                        break
                    # near the maximum F stops resolving progress; fall back to the residual
                    if np.max(np.abs(system.residual(zn))) < 0.5 * np.max(np.abs(r)):
                        break
                t *= 0.5
                if t < 1e-14:
                    return z if _relative_residual(system, z) < _REL_TOL else None
            z, f = zn, fn
    return None


def _cell_seeds(params: Params, j: int, scale: float = 1.0) -> np.ndarray:
    """j roots inside the bounded interval, the rest on the unbounded side."""
    n = params.n
    k = n - j
    cheb = lambda m: 0.5 * (1 - np.cos(np.pi * (np.arange(m) + 0.5) / m)) if m else np.zeros(0)
    if params.model == "manning":
        inner = 0.05 + 0.9 * cheb(j)
        reach = scale * 2.0 * (2.0 + params.delta + 2.0 * n) / params.s
        outer = -reach * (0.02 + cheb(k))
    else:
        inner = -0.95 + 1.9 * cheb(j)
        reach = scale * (1.0 + 2.0 * n) / params.a
        outer = 1.0 + reach * (0.02 + cheb(k))
    return np.sort(np.concatenate([inner, outer]))


# near-degenerate doublets shrink the step without bound; give up and fall back
_TRACK_STEP_BUDGET = 1500


def _hermite_zeros(m: int) -> np.ndarray:
    if m == 0:
        return np.zeros(0)
    c = np.zeros(m + 1)
    c[-1] = 1.0
    return np.sort(hermroots(c))


def _razavy_track(M: int, xi_target: float, j: int, opts: SolverOptions, theta: float = 0.0):
    """Follow configuration j (j roots near +1) from large xi down to xi_target > 0."""
    k = M - 1
    x0 = max(1e4 * M, 100.0 * xi_target)
    seed = np.concatenate(
        [1 + math.sqrt(2 / x0) * _hermite_zeros(j), -1 + 1j * math.sqrt(2 / x0) * _hermite_zeros(k - j)]
    ).astype(complex)
    z = _newton(bae_system(RazavyParams(x0, M)), seed, opts, 30, rel_tol=1e-13)
    if z is None:
        return None
    la, lb = math.log(x0), math.log(xi_target)

    def log_xi(s):
        if theta == 0.0:
            return la + (lb - la) * s
        if s < 0.1:
            return la + 1j * theta * s / 0.1
        if s < 0.9:
            return la + (lb - la) * (s - 0.1) / 0.8 + 1j * theta
        return lb + 1j * theta * (1 - s) / 0.1

    def system_at(x):
        return BaeSystem(
            "razavy",
            k,
            (0.0,),
            lambda w: x / (2.0 * w**2) - (M - 2) / w - x / 2.0,
            lambda w: -x / w**3 + (M - 2) / w**2,
        )

    s, h = 0.0, 0.02
    with np.errstate(all="ignore"):
        for _ in range(_TRACK_STEP_BUDGET):
            if s >= 1.0:
                return z
            hn = min(h, 1.0 - s)
            sn = 1.0 if hn == 1.0 - s else s + hn
            x, xn = np.exp(log_xi(s)), np.exp(log_xi(sn))
            try:
                tangent = np.linalg.solve(system_at(x).jacobian(z), -(1.0 / (2.0 * z**2) - 0.5))
            except np.linalg.LinAlgError:
                return None
            zp = z + tangent * (xn - x)
            zn = _newton(system_at(xn), zp, opts, 8, rel_tol=1e-13)
            ok = False
            if zn is not None:
                d = np.abs(zn[:, None] - zn[None, :])
                np.fill_diagonal(d, np.inf)
                near = np.minimum(d.min(axis=1) if k > 1 else np.inf, np.abs(zn))
                ok = bool(np.all(np.abs(zn - zp) < 0.1 * near))
            if ok:
                z, s = zn, sn
                h *= 1.5
            else:
                h *= 0.5
                if h < 1e-9:
                    return None
    return z if s >= 1.0 else None


def _random_start(rng: np.random.Generator, params: Params, k: int) -> np.ndarray:
    """Conjugate-closed random start spread over the magnitudes where roots live."""
    npair = int(rng.integers(0, k // 2 + 1)) if params.model == "razavy" else 0
    nreal = k - 2 * npair
    mags = np.exp(rng.uniform(-3, 3, npair))
    pairs = mags * np.exp(1j * rng.uniform(0.05, np.pi - 0.05, npair))
    if params.model == "razavy":
        real = rng.choice([-1.0, 1.0], nreal) * np.exp(rng.uniform(-3, 3, nreal))
    elif params.model == "manning":
        real = np.where(rng.random(nreal) < 0.5, rng.uniform(0.01, 0.99, nreal), -np.exp(rng.uniform(-3, 3, nreal)))
    else:
        real = np.where(
            rng.random(nreal) < 0.5, rng.uniform(-0.99, 0.99, nreal), 1 + np.exp(rng.uniform(-3, 3, nreal)) / params.a
        )
    return np.concatenate([pairs, np.conj(pairs), real]).astype(complex)


class _Collector:
    def __init__(self, params, system, opts):
        self.params = params
        self.system = system
        self.opts = opts
        self.configs: List[np.ndarray] = []

    def offer(self, z) -> bool:
        if z is None:
            return False
        z = np.asarray(z)
        if len(z) != self.system.unknown_count:
            return False
        if z.dtype.kind == "c" and not _conjugate_closed(z):
            return False
        # final polish at the absolute tolerance
        if len(z):
            zp = _newton(self.system, z, self.opts, 10)
            if zp is not None:
                z = zp
            if z.dtype.kind == "c":
                z = _symmetrize(z)
            try:
                _check_guard(self.system, z, self.opts.pole_guard)
            except PoleCollision:
                return False
            with np.errstate(all="ignore"):
                res = np.max(np.abs(self.system.residual(z)))
            if not (res < 10 * self.opts.newton_tol or _relative_residual(self.system, z) < _REL_TOL):
                return False
        z = _realify(z)
        for c in self.configs:
            if len(c) == 0 or np.max(np.abs(_sort_roots(c.astype(complex)) - _sort_roots(z.astype(complex)))) <= (
                self.opts.dedup_tol * max(1.0, float(np.max(np.abs(z))))
            ):
                return False
        self.configs.append(z)
        return True


def _config_key(params: Params, z) -> float:
    obs = reconstruct_observables(params, z)
    return obs.manning_v3 if params.model == "manning" else obs.energy


def solve_bae(params: Params, opts: Optional[SolverOptions] = None) -> List[np.ndarray]:
    """All distinct root configurations found, ordered by energy (v3 for Manning).

    Real-rooted configurations come back as float arrays, complex ones as
    conjugate-closed complex arrays. Emits :class:`IncompleteEnumeration` when
    fewer than the expected number are found.
    """
    opts = opts or SolverOptions()
    system = bae_system(params)
    k = system.unknown_count
    expected = expected_count(params)
    col = _Collector(params, system, opts)
    if k == 0:
        col.configs.append(np.zeros(0))
        return col.configs

    if params.model in ("manning", "shifman"):
        for j in range(k + 1):
            for scale in (1.0, 0.5, 2.0, 4.0):
                z = _cell_ascent(system, _cell_seeds(params, j, scale), opts)
                if z is not None and col.offer(z):
                    break
    else:
        sign = 1.0 if params.xi > 0 else -1.0
        for j in range(params.M):
            for theta in (0.0, 0.5, 1.2):
                z = _razavy_track(params.M, abs(params.xi), j, opts, theta)
                if z is not None:
                    z = _newton(system, sign * z, opts, opts.max_iters, rel_tol=1e-15)
                if z is not None and col.offer(z):
                    break

    if len(col.configs) < expected:
        rng = np.random.default_rng(opts.rng_seed)
        for _ in range(opts.starts_for(k)):
            z = _newton(system, _random_start(rng, params, k), opts, opts.max_iters)
            col.offer(z)
            if len(col.configs) >= expected:
                break

    configs = sorted(col.configs, key=lambda c: _config_key(params, c))
    if len(configs) < expected:
        warnings.warn(IncompleteEnumeration(expected, len(configs)), stacklevel=2)
    return configs
