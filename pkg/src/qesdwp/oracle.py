"""Independent check: finite-difference eigenvalues, ODE residuals, nodes.

Nothing here looks at Bethe roots or recurrence coefficients. A state enters
only through its energy and its wavefunction values on a grid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import linear_sum_assignment

from .errors import DomainError, GridMarginWarning
from .models import Params, QesState, kinetic_prefactor, potential_eval, wavefunction_eval

__all__ = [
    "GridSpec",
    "LevelMatch",
    "GridReport",
    "default_grid",
    "grid_hamiltonian",
    "lowest_eigenvalues",
    "eigenvalues_below",
    "richardson",
    "ode_residual",
    "residual_grid",
    "node_count",
    "match_levels",
    "boundary_margin",
    "verify_states",
]

MARGIN_FACTOR = 2.0
DECAY_LIMIT = 1e-6


@dataclass(frozen=True)
class GridSpec:
    x_max: float
    n_points: int
    bc: str = "dirichlet"

    def __post_init__(self):
        if not (self.x_max > 0 and math.isfinite(self.x_max)):
            raise ValueError("x_max must be positive and finite")
        if self.n_points < 201 or self.n_points % 2 == 0:
            raise ValueError("n_points must be odd and >= 201")
        if self.bc != "dirichlet":
            raise ValueError("only Dirichlet boundaries are supported")

    @property
    def h(self) -> float:
        return 2.0 * self.x_max / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.x_max, self.x_max, self.n_points)

    def refined(self) -> "GridSpec":
        """Same domain at half the spacing."""
        return GridSpec(self.x_max, 2 * self.n_points - 1, self.bc)


def _manning_x_max(params) -> float:
    # psi ~ 2^delta exp(-delta x); ask for 1e-10 at the wall
    d = params.delta
    return max(6.0, (math.log(1e10) + d * math.log(2.0)) / d)


def default_grid(params: Params, n_points: int = 6001) -> GridSpec:
    if params.model == "razavy":
        return GridSpec(6.0, n_points)
    if params.model == "shifman":
        return GridSpec(12.0, n_points)
    return GridSpec(_manning_x_max(params), n_points)


def grid_hamiltonian(params: Params, grid: GridSpec, v3: Optional[float] = None):
    """(diagonal, off-diagonal) of the 3-point Dirichlet Hamiltonian on interior nodes."""
    kin = kinetic_prefactor(params)
    x = grid.x[1:-1]
    h2 = grid.h**2
    diag = 2.0 * kin / h2 + potential_eval(params, x, v3)
    off = np.full(len(x) - 1, -kin / h2)
    return diag, off


def lowest_eigenvalues(diag, off, k: int) -> np.ndarray:
    """The k smallest eigenvalues by Sturm-count bisection (LAPACK stebz)."""
    diag = np.asarray(diag, dtype=float)
    if k > len(diag):
        raise ValueError(f"k={k} exceeds dimension {len(diag)}")
    if k <= 0:
        return np.zeros(0)
    norm = float(np.max(np.abs(diag)) + 2 * np.max(np.abs(off), initial=0.0))
    return eigh_tridiagonal(
        diag,
        np.asarray(off, dtype=float),
        eigvals_only=True,
        select="i",
        select_range=(0, k - 1),
        lapack_driver="stebz",
        tol=1e-10 * max(1.0, norm) * 1e-6,
    )


def eigenvalues_below(diag, off, upper: float) -> np.ndarray:
    lo = float(np.min(diag) - 2 * np.max(np.abs(off), initial=0.0)) - 1.0
    if upper <= lo:
        return np.zeros(0)
    return eigh_tridiagonal(
        np.asarray(diag, dtype=float),
        np.asarray(off, dtype=float),
        eigvals_only=True,
        select="v",
        select_range=(lo, upper),
        lapack_driver="stebz",
    )


def richardson(e_h, e_h2):
    """Second-order extrapolation from spacings h and h/2."""
    return (4.0 * np.asarray(e_h2) - np.asarray(e_h)) / 3.0


def residual_grid(params: Params, state: QesState) -> GridSpec:
    """A grid fine enough that truncation error, not round-off, dominates the residual."""
    base = default_grid(params)
    v_min = _potential_min(params, base, state.manning_v3)
    gap = max(1.0, state.energy - v_min)
    # truncation error is about 0.3 (h * gap)^2
    h = min(1e-3, 0.008 / gap)
    # no need to resolve tails where psi has decayed below any visible residual
    psi = np.abs(wavefunction_eval(params, state, base.x))
    live = np.nonzero(psi > 1e-12 * psi.max())[0]
    half = min(base.x_max, float(np.max(np.abs(base.x[[live[0], live[-1]]]))) + 0.5)
    n = int(math.ceil(2 * half / h)) + 1
    n += 1 - n % 2
    return GridSpec(half, max(n, 201))


def ode_residual(params: Params, state: QesState, grid: GridSpec) -> float:
    """max |-k psi'' + (V - E) psi| / max |psi| over interior nodes.

    psi is evaluated in extended precision where the platform has it, so the
    second difference is not swamped by round-off at small h.
    """
    # built by hand: linspace in longdouble is not uniform to the working precision
    step = np.longdouble(2 * grid.x_max) / (grid.n_points - 1)
    x = -np.longdouble(grid.x_max) + step * np.arange(grid.n_points, dtype=np.longdouble)
    try:
        psi = wavefunction_eval(params, state, x)
    except (FloatingPointError, OverflowError) as exc:
        raise DomainError(f"wavefunction evaluation failed: {exc}") from exc
    if not np.all(np.isfinite(psi)):
        raise DomainError("wavefunction is not finite on the grid")
    scale = float(np.max(np.abs(psi)))
    if scale == 0.0:
        raise DomainError("wavefunction vanishes on the grid")
    d2 = (psi[2:] - 2.0 * psi[1:-1] + psi[:-2]) / step**2
    v = potential_eval(params, grid.x[1:-1], state.manning_v3)
    with np.errstate(over="ignore", invalid="ignore"):
        r = (-kinetic_prefactor(params) * d2 + (v - state.energy) * psi[1:-1]).astype(float)
    # far tails: huge V times a psi that underflowed to ~0
    r = np.where(np.isfinite(r), r, 0.0)
    return float(np.max(np.abs(r)) / scale)


def node_count(params: Params, state: QesState, grid: GridSpec) -> int:
    psi = wavefunction_eval(params, state, grid.x[1:-1])
    # skip values at round-off level so exponentially small tails cannot fake a node
    keep = np.abs(psi) > 1e-9 * np.max(np.abs(psi))
    signs = np.sign(psi[keep])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


@dataclass(frozen=True)
class LevelMatch:
    qes_energy: float
    grid_energy: float
    abs_err: float
    grid_index: int


def match_levels(qes: Sequence[float], grid_levels: Sequence[float]) -> List[Optional[LevelMatch]]:
    """One-to-one assignment minimizing the total energy distance.

    Entries are aligned with ``qes``; ``None`` marks a level left unmatched
    because the grid returned too few eigenvalues.
    """
    qes = np.asarray(qes, dtype=float)
    grid_levels = np.asarray(grid_levels, dtype=float)
    out: List[Optional[LevelMatch]] = [None] * len(qes)
    if len(qes) == 0 or len(grid_levels) == 0:
        return out
    cost = np.abs(qes[:, None] - grid_levels[None, :])
    rows, cols = linear_sum_assignment(cost)
    for r, c in zip(rows, cols):
        out[r] = LevelMatch(float(qes[r]), float(grid_levels[c]), float(cost[r, c]), int(c))
    return out


def _potential_min(params: Params, grid: GridSpec, v3) -> float:
    return float(np.min(potential_eval(params, grid.x, v3)))


def boundary_margin(params: Params, grid: GridSpec, e_max: float, v3=None, state=None) -> Tuple[float, bool]:
    """(margin, ok). Confining wells use the potential margin, Manning the wavefunction decay."""
    if params.model == "manning":
        if state is None:
            return float("nan"), True
        xs = np.array([-grid.x_max, grid.x_max])
        tail = float(np.max(np.abs(wavefunction_eval(params, state, xs))))
        peak = float(np.max(np.abs(wavefunction_eval(params, state, grid.x))))
        ratio = tail / peak
        return ratio, ratio <= DECAY_LIMIT
    v = potential_eval(params, np.array([-grid.x_max, grid.x_max]), v3)
    v_min = _potential_min(params, grid, v3)
    margin = (float(np.min(v)) - v_min) / max(e_max - v_min, 1e-300)
    return margin, margin >= MARGIN_FACTOR


@dataclass
class GridReport:
    """Outcome of checking a set of states against the grid.

    ``eigenvalues[i]`` are the grid levels of the potential ``potentials[i]``;
    Razavy and Shifman have a single potential, Manning one per distinct ``v3``.
    """

    grid: GridSpec
    richardson: bool
    potentials: Tuple = ()
    eigenvalues: Tuple = ()
    matches: List[Optional[LevelMatch]] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)
    residuals_refined: List[float] = field(default_factory=list)
    node_counts: List[int] = field(default_factory=list)
    margin_ok: bool = True

    @property
    def max_error(self) -> float:
        errs = [m.abs_err for m in self.matches if m is not None]
        return max(errs) if errs else float("nan")

    def matched(self, tol: float) -> int:
        return sum(1 for m in self.matches if m is not None and m.abs_err < tol)

    def all_matched(self, tol: float) -> bool:
        return self.matched(tol) == len(self.matches)

    @property
    def residual_ratios(self) -> List[float]:
        return [a / b if b > 0 else float("inf") for a, b in zip(self.residuals, self.residuals_refined)]


def _grid_levels(params, grid, v3, upper, use_richardson):
    d, o = grid_hamiltonian(params, grid, v3)
    coarse = eigenvalues_below(d, o, upper)
    if not use_richardson:
        return coarse
    fine_grid = grid.refined()
    d2, o2 = grid_hamiltonian(params, fine_grid, v3)
    fine = lowest_eigenvalues(d2, o2, len(coarse))
    return richardson(coarse, fine)


def verify_states(
    params: Params,
    states: Sequence[QesState],
    grid: Optional[GridSpec] = None,
    use_richardson: bool = True,
    with_residuals: bool = True,
) -> GridReport:
    grid = grid or default_grid(params)
    report = GridReport(grid=grid, richardson=use_richardson)
    if not states:
        return report
    margin_ok = True
    if params.model == "manning":
        groups = [(s.manning_v3, [i]) for i, s in enumerate(states)]
    else:
        groups = [(None, list(range(len(states))))]
    matches: List[Optional[LevelMatch]] = [None] * len(states)
    pots, eigs = [], []
    for v3, idx in groups:
        energies = [states[i].energy for i in idx]
        e_max = max(energies)
        upper = e_max + 1.0 + 0.1 * abs(e_max)
        if params.model == "manning":
            upper = min(upper, -1e-9)
            _, ok = boundary_margin(params, grid, e_max, v3, states[idx[0]])
        else:
            _, ok = boundary_margin(params, grid, e_max, v3)
        margin_ok &= ok
        levels = _grid_levels(params, grid, v3, upper, use_richardson)
        pots.append(v3)
        eigs.append(tuple(float(e) for e in levels))
        for i, m in zip(idx, match_levels(energies, levels)):
            matches[i] = m
    if not margin_ok:
        warnings.warn(GridMarginWarning(f"boundary margin below {MARGIN_FACTOR} on {grid}"), stacklevel=2)
    report.potentials = tuple(pots)
    report.eigenvalues = tuple(eigs)
    report.matches = matches
    report.margin_ok = margin_ok
    report.node_counts = [node_count(params, s, grid) for s in states]
    if with_residuals:
        for s in states:
            g = residual_grid(params, s)
            report.residuals.append(ode_residual(params, s, g))
            report.residuals_refined.append(ode_residual(params, s, g.refined()))
    return report
