"""Per-model spectra assembled from both solution routes, and Razavy splittings."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import algebraic, bethe, oracle
from .errors import DegenerateNullspace, MethodDisagreement
from .models import Params, QesState, RazavyParams

__all__ = [
    "Spectrum",
    "SplittingRow",
    "SplittingTable",
    "assemble_spectrum",
    "splitting_table",
    "pairing_check",
    "trace_identity",
    "DISAGREEMENT_LIMIT",
]

DISAGREEMENT_LIMIT = 1e-6
TIE_LIMIT = 1e-12


@dataclass
class Spectrum:
    """Algebraic levels of one parameter set.

    ``method_agreement`` is the largest relative gap between the two routes
    over paired levels (energies, or ``v3`` for Manning). ``root_agreement``
    compares Bethe roots with the zeros of the recurrence polynomial.
    """

    model: str
    params: Params
    states: List[QesState]
    method_agreement: float = float("nan")
    root_agreement: float = float("nan")
    oracle_report: Optional[oracle.GridReport] = None
    flags: List[str] = field(default_factory=list)

    @property
    def energies(self) -> List[float]:
        return [s.energy for s in self.states]

    @property
    def keys(self) -> List[float]:
        if self.model == "manning":
            return [s.manning_v3 for s in self.states]
        return self.energies

    @property
    def fully_corroborated(self) -> bool:
        return bool(self.states) and all(s.method == "both" for s in self.states)


def _key_of_u(params: Params, u: float) -> float:
    return params.v3_from_epsilon(u) if params.model == "manning" else u


def _root_distance(a, b) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if len(a) == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(np.max(cost[r, c] / np.maximum(1.0, np.abs(a[r]))))


def _tidy_roots(z) -> tuple:
    z = np.asarray(z, dtype=complex)
    if len(z) == 0:
        return ()
    if np.all(np.abs(z.imag) <= 1e-10 * np.maximum(1.0, np.abs(z))):
        return tuple(float(v) for v in np.sort(z.real))
    return tuple(bethe._sort_roots(z))


def assemble_spectrum(
    params: Params,
    opts: Optional[bethe.SolverOptions] = None,
    method: str = "both",
    with_oracle: bool = False,
    strict: bool = True,
) -> Spectrum:
    """Solve by both routes and pair the results by proximity.

    A level found by only one route is kept and flagged. With ``strict``,
    a paired gap above :data:`DISAGREEMENT_LIMIT` raises
    :class:`MethodDisagreement`.
    """
    if method not in ("both", "bethe", "determinant"):
        raise ValueError(f"unknown method {method!r}")
    flags: List[str] = []

    det = []  # (key, u, coeffs or None)
    if method in ("both", "determinant"):
        pencil = algebraic.build_pencil(params)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            roots = algebraic.determinant_roots(pencil)
        for w in caught:
            flags.append(f"determinant: {w.message}")
        for u in roots:
            try:
                coeffs = algebraic.coefficient_vector(pencil, u).coeffs
            except DegenerateNullspace:
                flags.append(f"degenerate nullspace at {u:.12g}")
                coeffs = None
            det.append((_key_of_u(params, u), u, coeffs))

    bae = []  # (key, roots, observables)
    if method in ("both", "bethe"):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            configs = bethe.solve_bae(params, opts)
        for w in caught:
            flags.append(f"bethe: {w.message}")
        for z in configs:
            obs = bethe.reconstruct_observables(params, z)
            key = obs.manning_v3 if params.model == "manning" else obs.energy
            bae.append((key, z, obs))

    pairs = []
    if det and bae:
        cost = np.abs(np.array([b[0] for b in bae])[None, :] - np.array([d[0] for d in det])[:, None])
        rows, cols = linear_sum_assignment(cost)
        pairs = list(zip(rows.tolist(), cols.tolist()))
    paired_d = {d for d, _ in pairs}
    paired_b = {b for _, b in pairs}

    agreement = 0.0 if pairs else float("nan")
    root_agreement = 0.0 if pairs else float("nan")
    states = []
    for di, bi in pairs:
        key_d, u, coeffs = det[di]
        key_b, z, _ = bae[bi]
        rel = abs(key_b - key_d) / max(1.0, abs(key_d))
        agreement = max(agreement, rel)
        if rel > DISAGREEMENT_LIMIT and strict:
            raise MethodDisagreement(
                f"{params.model}: Bethe value {key_b:.12g} vs determinant value {key_d:.12g} (relative gap {rel:.3g})"
            )
        if coeffs is not None:
            root_agreement = max(root_agreement, _root_distance(z, algebraic.polynomial_roots(coeffs)))
        states.append(_state(params, key_d, u, coeffs, z, "both"))
    for di, (key, u, coeffs) in enumerate(det):
        if di not in paired_d:
            if method == "both":
                flags.append(f"level {key:.12g} found by the determinant route only")
            roots = algebraic.polynomial_roots(coeffs) if coeffs is not None else None
            states.append(_state(params, key, u, coeffs, roots, "determinant"))
    for bi, (key, z, obs) in enumerate(bae):
        if bi not in paired_b:
            if method == "both":
                flags.append(f"level {key:.12g} found by the Bethe route only")
            u = obs.manning_epsilon if params.model == "manning" else obs.energy
            states.append(_state(params, key, u, None, z, "bethe"))

    order = sorted(range(len(states)), key=lambda i: (states[i].energy, states[i].manning_v3 or 0.0))
    states = [_reindex(states[i], k) for k, i in enumerate(order)]
    keys = [s.manning_v3 if params.model == "manning" else s.energy for s in states]
    for a, b in zip(keys, keys[1:]):
        if abs(b - a) < TIE_LIMIT * max(1.0, abs(a)):
            flags.append(f"near-tie between levels at {a:.12g}")

    spec = Spectrum(params.model, params, states, agreement, root_agreement, None, flags)
    if with_oracle:
        spec.oracle_report = oracle.verify_states(params, states)
    return spec


def _state(params, key, u, coeffs, roots, method) -> QesState:
    if roots is None:
        roots = ()
    roots = _tidy_roots(roots)
    if coeffs is None:
        coeffs = np.real(np.poly(np.asarray(roots, dtype=complex))[::-1]) if roots else np.array([1.0])
    energy = params.energy if params.model == "manning" else float(key)
    v3 = float(key) if params.model == "manning" else None
    return QesState(0, float(energy), roots, tuple(float(c) for c in coeffs), v3, method)


def _reindex(state: QesState, k: int) -> QesState:
    return QesState(k, state.energy, state.roots, state.coeffs, state.manning_v3, state.method)


@dataclass(frozen=True)
class SplittingRow:
    M: int
    energies: tuple
    deltas: tuple


@dataclass(frozen=True)
class SplittingTable:
    xi: float
    rows: tuple


def splitting_table(xi: float, M_max: int, opts: Optional[bethe.SolverOptions] = None, method: str = "both") -> SplittingTable:
    """Energies of each M = 1..M_max and the 1-based pair gaps E_2 - E_1, E_4 - E_3, ..."""
    if M_max < 1:
        raise ValueError("M_max must be >= 1")
    rows = []
    for M in range(1, M_max + 1):
        e = sorted(assemble_spectrum(RazavyParams(xi, M), opts, method=method).energies)
        deltas = tuple(e[2 * j + 1] - e[2 * j] for j in range(M // 2))
        rows.append(SplittingRow(M, tuple(e), deltas))
    return SplittingTable(xi, tuple(rows))


def pairing_check(table: SplittingTable) -> List[bool]:
    return [all(b > a for a, b in zip(r.deltas, r.deltas[1:])) for r in table.rows]


def trace_identity(params: RazavyParams, energies) -> float:
    """Relative gap between the energy sum and trace(A B^-1) of the pencil."""
    pencil = algebraic.build_pencil(params)
    tr = float(np.trace(pencil.A @ np.linalg.inv(pencil.B)))
    return abs(float(np.sum(energies)) - tr) / max(1.0, abs(tr))
