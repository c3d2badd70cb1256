"""sl(2) route: generator matrices, recurrence pencils, determinant roots.

The gauged operator of each model maps the monomial space ``<1, z, ..., z^d>``
into itself. Writing ``phi = sum a_m z^m`` and collecting the coefficient of
``z^k`` gives row ``k`` of a banded matrix that is affine in the level
unknown ``u`` (the energy, or ``epsilon`` for Manning where the energy is
fixed and ``v3`` is the free parameter)::

    (A - u B) a = 0,   B = beta * I

Row coefficients (``s = sqrt(v1)``, ``chi = 3/2 + sqrt(-E) - s``)::

    Manning  (k+1)(k+1/2) a_{k+1} - [k(k-1) + chi k + eps/4] a_k + s(n-k+1) a_{k-1}
    Razavy   -2xi(k+1) a_{k+1} + [-4k² + 4k(M-1) + xi² + 2M - 1 - E] a_k + 2xi(k-M) a_{k-1}
    Shifman  (k+2)(k+1)/2 a_{k+2} - a(k+1) a_{k+1} - [k²/2 + E] a_k + a(k-1-n) a_{k-1}

Matrix rows are indexed by the power of z and columns by the coefficient
index, so the matrix is the operator itself in the monomial basis.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import DegenerateNullspace, IndexOutOfRange, RootCountMismatch, Unsupported
from .models import Params

__all__ = [
    "Sl2Generators",
    "RecurrenceRow",
    "BandedPencil",
    "CoefficientVector",
    "sl2_generators",
    "commutator",
    "recurrence_coeffs",
    "build_pencil",
    "determinant",
    "determinant_roots",
    "coefficient_vector",
    "polynomial_roots",
    "algebraized_matrix",
    "truncation_coefficient",
    "implied_overflow",
    "closed_form_energies",
    "ALGEBRAIZATION_FACTOR",
]


@dataclass(frozen=True)
class Sl2Generators:
    n: int
    jplus: np.ndarray
    jzero: np.ndarray
    jminus: np.ndarray


def sl2_generators(n: int) -> Sl2Generators:
    """Matrices of ``J+ = -z² d/dz + n z``, ``J0 = z d/dz - n/2``, ``J- = d/dz`` on degree <= n."""
    if n < 0:
        raise ValueError("n must be >= 0")
    dim = n + 1
    jp = np.zeros((dim, dim))
    j0 = np.zeros((dim, dim))
    jm = np.zeros((dim, dim))
    for m in range(dim):
        j0[m, m] = m - n / 2.0
        if m >= 1:
            jm[m - 1, m] = m
        if m + 1 < dim:
            jp[m + 1, m] = n - m
    return Sl2Generators(n, jp, j0, jm)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


@dataclass(frozen=True)
class RecurrenceRow:
    """Row ``m``: ``sum_off coeffs[off] * a_{m+off} + u * u_weight * a_m = 0``."""

    m: int
    coeffs: dict
    u_weight: float

    @property
    def sub(self) -> float:
        return self.coeffs.get(-1, 0.0)

    @property
    def diag(self) -> float:
        return self.coeffs.get(0, 0.0)

    @property
    def super(self) -> tuple:
        return tuple(self.coeffs.get(off, 0.0) for off in (1, 2) if off in self.coeffs)


def _row(params: Params, m: int) -> RecurrenceRow:
    if params.model == "manning":
        s, n, chi = params.s, params.n, params.chi
        return RecurrenceRow(
            m,
            {-1: s * (n - m + 1), 0: -(m * (m - 1) + chi * m), 1: (m + 1) * (m + 0.5)},
            -0.25,
        )
    if params.model == "razavy":
        xi, M = params.xi, params.M
        return RecurrenceRow(
            m,
            {
                -1: 2 * xi * (m - M),
                0: -4.0 * m * m + 4.0 * m * (M - 1) + xi * xi + 2 * M - 1,
                1: -2 * xi * (m + 1),
            },
            -1.0,
        )
    a, n = params.a, params.n
    return RecurrenceRow(
        m,
        {-1: a * (m - 1 - n), 0: -m * m / 2.0, 1: -a * (m + 1), 2: 0.5 * (m + 2) * (m + 1)},
        -1.0,
    )


def recurrence_coeffs(params: Params, m: int) -> RecurrenceRow:
    if not 0 <= m < params.dim:
        raise IndexOutOfRange(f"row {m} outside 0..{params.dim - 1}")
    return _row(params, m)


def truncation_coefficient(params: Params) -> float:
    """Coefficient of ``a_{dim-1}`` in the first row past the top; zero for a QES level."""
    return _row(params, params.dim).coeffs[-1]


@dataclass(frozen=True)
class BandedPencil:
    model: str
    dim: int
    A: np.ndarray
    B: np.ndarray
    unknown: str
    bandwidths: tuple

    def matrix(self, u: float) -> np.ndarray:
        return self.A - u * self.B

    @property
    def beta(self) -> float:
        return float(self.B[0, 0])


def build_pencil(params: Params) -> BandedPencil:
    dim = params.dim
    A = np.zeros((dim, dim))
    weight = None
    for k in range(dim):
        row = _row(params, k)
        weight = row.u_weight
        for off, c in row.coeffs.items():
            if 0 <= k + off < dim:
                A[k, k + off] = c
    B = -weight * np.eye(dim)
    unknown = "epsilon" if params.model == "manning" else "energy"
    bands = (1, 2) if params.model == "shifman" else (1, 1)
    return BandedPencil(params.model, dim, A, B, unknown, bands)


def determinant(pencil: BandedPencil, u) -> np.ndarray:
    """(sign, log|det|) of ``A - u B``, vectorized over ``u``."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    mats = pencil.A[None, :, :] - u[:, None, None] * pencil.B[None, :, :]
    return np.linalg.slogdet(mats)


def _gershgorin_bracket(pencil: BandedPencil):
    c = pencil.A / pencil.beta
    radius = np.abs(c).sum(axis=1) - np.abs(np.diag(c))
    lo = float(np.min(np.diag(c) - radius))
    hi = float(np.max(np.diag(c) + radius))
    pad = 1e-6 * max(1.0, abs(lo), abs(hi))
    return lo - pad, hi + pad


def _symmetric_tridiagonal(pencil: BandedPencil):
    """Diagonal and off-diagonal of a symmetric matrix similar to A/beta, or None."""
    c = pencil.A / pencil.beta
    dim = pencil.dim
    if np.any(np.abs(np.triu(c, 2)) > 0) or np.any(np.abs(np.tril(c, -2)) > 0):
        return None
    prod = np.array([c[k, k + 1] * c[k + 1, k] for k in range(dim - 1)])
    if np.any(prod <= 0):
        return None
    return np.diag(c).copy(), np.sqrt(prod)


def _sturm_count(d: np.ndarray, e: np.ndarray, x: float) -> int:
    """Number of eigenvalues of the symmetric tridiagonal (d, e) strictly below x."""
    count = 0
    q = d[0] - x
    pivmin = np.finfo(float).eps * max(1.0, float(np.max(np.abs(d))), float(np.max(e, initial=0.0))) ** 2
    for i in range(len(d)):
        if i > 0:
            q = d[i] - x - e[i - 1] ** 2 / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0:
            count += 1
    return count


def _sturm_eigenvalues(d: np.ndarray, e: np.ndarray, lo: float, hi: float) -> List[float]:
    out = []
    for idx in range(len(d)):
        a, b = lo, hi
        while True:
            mid = 0.5 * (a + b)
            if mid <= a or mid >= b:
                break
            if _sturm_count(d, e, mid) > idx:
                b = mid
            else:
                a = mid
        out.append(0.5 * (a + b))
    return out


def _newton_polish(pencil: BandedPencil, u: float, iters: int = 4) -> float:
    for _ in range(iters):
        try:
            tr = np.trace(np.linalg.solve(pencil.matrix(u), pencil.B))
        except np.linalg.LinAlgError:
            return u
        if tr == 0 or not np.isfinite(tr):
            return u
        step = 1.0 / tr
        if abs(step) > 1e-6 * max(1.0, abs(u)):
            return u
        u = u + step
        if abs(step) <= 4 * np.finfo(float).eps * max(1.0, abs(u)):
            break
    return u


def _scan_roots(pencil: BandedPencil, lo: float, hi: float) -> List[float]:
    roots: List[float] = []
    n_samples = 400 * pencil.dim
    for _ in range(4):
        grid = np.linspace(lo, hi, n_samples)
        sign, _ = determinant(pencil, grid)
        roots = []
        for i in np.nonzero(sign[:-1] * sign[1:] <= 0)[0]:
            a, b = grid[i], grid[i + 1]
            sa = sign[i]
            if sa == 0:
                roots.append(a)
                continue
            for _ in range(200):
                mid = 0.5 * (a + b)
                if mid <= a or mid >= b:
                    break
                sm = determinant(pencil, mid)[0][0]
                if sm == 0:
                    a = b = mid
                    break
                if sm == sa:
                    a = mid
                else:
                    b = mid
            roots.append(0.5 * (a + b))
        roots = sorted(set(roots))
        if len(roots) >= pencil.dim:
            break
        n_samples *= 8
    return roots


def determinant_roots(pencil: BandedPencil) -> List[float]:
    """All real roots of ``det(A - u B)``, ascending.

    Tridiagonal pencils with positive off-diagonal products are symmetrizable
    and are bracketed by Sturm-sequence bisection; others are isolated by sign
    changes over the Gershgorin interval. Roots are Newton-polished.
    """
    lo, hi = _gershgorin_bracket(pencil)
    sym = _symmetric_tridiagonal(pencil)
    if sym is not None:
        roots = _sturm_eigenvalues(sym[0], sym[1], lo, hi)
    else:
        roots = _scan_roots(pencil, lo, hi)
    roots = sorted(float(_newton_polish(pencil, u)) for u in roots)
    if len(roots) < pencil.dim:
        warnings.warn(RootCountMismatch(pencil.dim, len(roots)), stacklevel=2)
    return roots


@dataclass(frozen=True)
class CoefficientVector:
    u: float
    coeffs: np.ndarray
    residual: float


def _gecp_null(mat: np.ndarray):
    """Gaussian elimination with complete pivoting; returns (null vector, |pivots|)."""
    a = np.array(mat, dtype=float)
    dim = a.shape[0]
    cols = np.arange(dim)
    pivots = []
    for k in range(dim):
        sub = np.abs(a[k:, k:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        i += k
        j += k
        a[[k, i]] = a[[i, k]]
        a[:, [k, j]] = a[:, [j, k]]
        cols[[k, j]] = cols[[j, k]]
        piv = a[k, k]
        pivots.append(abs(piv))
        if piv == 0.0:
            continue
        a[k + 1 :, k:] -= np.outer(a[k + 1 :, k] / piv, a[k, k:])
    # the last pivot is the smallest under complete pivoting; free that column
    x = np.zeros(dim)
    x[dim - 1] = 1.0
    for k in range(dim - 2, -1, -1):
        if a[k, k] != 0.0:
            x[k] = -(a[k, k + 1 :] @ x[k + 1 :]) / a[k, k]
    out = np.zeros(dim)
    out[cols] = x
    return out, np.array(pivots)


def coefficient_vector(pencil: BandedPencil, u: float) -> CoefficientVector:
    """Nullspace vector of ``A - u B`` normalized to a monic top coefficient."""
    mat = pencil.matrix(u)
    scale = max(1.0, float(np.max(np.abs(mat))))
    if pencil.dim == 1:
        vec = np.array([1.0])
    else:
        vec, piv = _gecp_null(mat)
        if piv[-2] <= 1e-9 * scale:
            _, _, vt = np.linalg.svd(mat)
            raise DegenerateNullspace(f"nullspace of dimension > 1 at u={u!r}", basis=vt[-2:])
    nz = np.nonzero(np.abs(vec) > 1e-14 * np.max(np.abs(vec)))[0]
    vec = vec / vec[nz[-1]]
    res = float(np.max(np.abs(mat @ vec)))
    return CoefficientVector(float(u), vec, res)


def implied_overflow(params: Params, vec: CoefficientVector) -> float:
    """Coefficient a_dim that the top row would require; zero when truncation is consistent."""
    dim = params.dim
    row = _row(params, dim - 1)
    top = max(off for off in row.coeffs)
    rest = 0.0
    for off, c in row.coeffs.items():
        idx = dim - 1 + off
        if 0 <= idx < dim:
            rest += c * vec.coeffs[idx]
    rest += vec.u * row.u_weight * vec.coeffs[dim - 1]
    # every coefficient beyond the top is zero except the one being inferred
    c_next = row.coeffs[1]
    return float(-rest / c_next) if top >= 1 else 0.0


def polynomial_roots(coeffs) -> np.ndarray:
    """Roots of ``sum a_m z^m`` (ascending coefficients), Newton-polished."""
    c = np.asarray(coeffs, dtype=float)
    nz = np.nonzero(c)[0]
    c = c[: nz[-1] + 1]
    if len(c) < 2:
        return np.zeros(0, dtype=complex)
    if len(c) > 65:
        raise ValueError("degree > 64 not supported")
    desc = c[::-1]
    roots = np.roots(desc).astype(complex)
    d1 = np.polyder(desc)
    for _ in range(3):
        p = np.polyval(desc, roots)
        dp = np.polyval(d1, roots)
        ok = dp != 0
        step = np.zeros_like(roots)
        step[ok] = p[ok] / dp[ok]
        # reject steps that would jump to a different root
        step[np.abs(step) > 1e-3 * np.maximum(1.0, np.abs(roots))] = 0
        roots = roots - step
    return roots


def algebraized_matrix(params: Params, u: float) -> np.ndarray:
    """The gauged operator assembled from sl(2) generator matrices.

    Returned in the normalization of the generator form, which relates to the
    pencil by a fixed factor: Manning ``-(A - eps B)``, Razavy
    ``-(A - E B)/4``, Shifman ``A - E B``.
    """
    g = sl2_generators(params.degree)
    jp, j0, jm = g.jplus, g.jzero, g.jminus
    eye = np.eye(params.dim)
    if params.model == "manning":
        n, s, d = params.n, params.s, params.delta
        return (
            -jp @ jm
            - j0 @ jm
            - s * jp
            + (1.5 + n + d - s) * j0
            - 0.5 * (n + 1) * jm
            + (n * n / 2.0 + (1.5 + d - s) * n / 2.0 + u / 4.0) * eye
        )
    if params.model == "razavy":
        xi, M = params.xi, params.M
        return (
            -jp @ jm
            + 0.5 * xi * jp
            + j0
            + 0.5 * xi * jm
            + ((M - 1) / 2.0 + (u + 1 - 2 * M - xi * xi) / 4.0) * eye
        )
    n, a = params.n, params.a
    return (
        0.5 * (jp @ jm + jm @ jm)
        - a * (jp + jm)
        - 0.5 * (n + 1) * j0
        - (u + n * (n + 1) / 4.0) * eye
    )


ALGEBRAIZATION_FACTOR = {"manning": -1.0, "razavy": -0.25, "shifman": 1.0}


def closed_form_energies(params: Params) -> List[float]:
    """Explicit low-level energies (epsilon for Manning n <= 1), ascending."""
    if params.model == "razavy":
        xi, M = params.xi, params.M
        if M == 1:
            return [xi * xi + 1]
        if M == 2:
            return sorted([xi * xi + 3 - 2 * xi, xi * xi + 3 + 2 * xi])
        if M == 3:
            r = math.sqrt(4 * xi * xi + 1)
            return sorted([xi * xi + 5, xi * xi + 7 - 2 * r, xi * xi + 7 + 2 * r])
    if params.model == "shifman":
        a = params.a
        if params.n == 0:
            return [0.0]
        if params.n == 1:
            r = math.sqrt(16 * a * a + 1)
            return sorted([(-1 - r) / 4, (-1 + r) / 4])
        if params.n == 2:
            cubic = [-1.0, -2.5, 4 * a * a - 1, 6 * a * a]
            return sorted(float(z.real) for z in np.roots(cubic))
    if params.model == "manning":
        if params.n == 0:
            return [0.0]
        if params.n == 1:
            # eps² + 2 eps (3 + 2 sqrt(-E) - 2 s) - 8 s = 0
            b = 2 * (3 + 2 * params.delta - 2 * params.s)
            r = math.sqrt(b * b + 32 * params.s)
            return sorted([(-b - r) / 2, (-b + r) / 2])
    raise Unsupported(f"no closed form energies for {params}")
