"""Exterior algebra of R^d and discrete currents.

k-vectors and k-covectors are coefficient arrays over the strictly increasing
k-tuples of ``range(d)`` in lexicographic order.  The interior product follows
the duality convention ``<v _| eta, w> = <v, eta ^ w>`` (eta wedged on the
left).  Norms are Euclidean in this basis, not the mass norm.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

from .errors import (
    DegenerateVector,
    DegreeOverflow,
    DegreeUnderflow,
    DimensionError,
    EmptyFamily,
    SpecFormatError,
)
from .grid import GridMeasure

KVECTOR_SCHEMA_VERSION = "kvector-text/1"


@lru_cache(maxsize=None)
def basis(d: int, k: int) -> tuple[tuple[int, ...], ...]:
    if not 0 <= k <= d:
        return ()
    return tuple(combinations(range(d), k))


@lru_cache(maxsize=None)
def basis_index(d: int, k: int) -> dict[tuple[int, ...], int]:
    return {t: i for i, t in enumerate(basis(d, k))}


def _merge_sign(left: tuple[int, ...], right: tuple[int, ...]) -> int:
    """Sign of the permutation sorting ``left + right`` (0 if they overlap)."""
    if set(left) & set(right):
        return 0
    inversions = sum(1 for a in left for b in right if a > b)
    return -1 if inversions % 2 else 1


@lru_cache(maxsize=None)
def _wedge_table(d: int, p: int, q: int):
    out_index = basis_index(d, p + q)
    ia, ib, io, sg = [], [], [], []
    for a, ta in enumerate(basis(d, p)):
        for b, tb in enumerate(basis(d, q)):
            s = _merge_sign(ta, tb)
            if s:
                ia.append(a)
                ib.append(b)
                io.append(out_index[tuple(sorted(ta + tb))])
                sg.append(s)
    return (np.array(ia, dtype=int), np.array(ib, dtype=int),
            np.array(io, dtype=int), np.array(sg, dtype=int))


@dataclass(frozen=True)
class _Multi:
    d: int
    k: int
    coeffs: np.ndarray

    def __post_init__(self):
        if not 0 <= self.k <= self.d:
            raise DimensionError(f"degree {self.k} outside 0..{self.d}")
        coeffs = np.asarray(self.coeffs)
        if coeffs.dtype != object:
            coeffs = coeffs.astype(float)
        coeffs = coeffs.reshape(-1)
        if coeffs.shape != (comb(self.d, self.k),):
            raise DimensionError(
                f"expected {comb(self.d, self.k)} coefficients for d={self.d}, k={self.k}, "
                f"got {coeffs.shape[0]}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zero(cls, d: int, k: int, exact: bool = False):
        n = comb(d, k)
        if exact:
            return cls(d, k, np.array([Fraction(0)] * n, dtype=object))
        return cls(d, k, np.zeros(n))

    @classmethod
    def basis_element(cls, d: int, indices, exact: bool = False):
        """``e_{i1} ^ ... ^ e_{ik}`` for strictly increasing 0-based indices."""
        indices = tuple(indices)
        out = cls.zero(d, len(indices), exact)
        coeffs = out.coeffs.copy()
        coeffs[basis_index(d, len(indices))[indices]] = Fraction(1) if exact else 1.0
        return cls(d, len(indices), coeffs)

    @classmethod
    def from_vector(cls, x):
        x = np.asarray(x)
        return cls(len(x), 1, x)

    @classmethod
    def exact(cls, d: int, k: int, coeffs):
        return cls(d, k, np.array([Fraction(c) for c in coeffs], dtype=object))

    @property
    def is_exact(self) -> bool:
        return self.coeffs.dtype == object

    def _same(self, other):
        if type(other) is not type(self) or (other.d, other.k) != (self.d, self.k):
            raise DimensionError("operands live in different spaces")

    def __add__(self, other):
        self._same(other)
        return type(self)(self.d, self.k, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._same(other)
        return type(self)(self.d, self.k, self.coeffs - other.coeffs)

    def __neg__(self):
        return type(self)(self.d, self.k, -self.coeffs)

    def __mul__(self, scalar):
        return type(self)(self.d, self.k, self.coeffs * scalar)

    __rmul__ = __mul__

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return (self.d, self.k) == (other.d, other.k) and bool(np.all(self.coeffs == other.coeffs))

    def __hash__(self):
        return hash((type(self).__name__, self.d, self.k, tuple(self.coeffs.tolist())))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs.astype(float)))

    def as_float(self):
        return type(self)(self.d, self.k, self.coeffs.astype(float))


class KVector(_Multi):
    """Element of Lambda_k(R^d)."""


class KCovector(_Multi):
    """Element of Lambda^k(R^d), dual basis dx^{i1} ^ ... ^ dx^{ik}."""


def dx(d: int, i: int) -> KCovector:
    """The coordinate 1-covector dx^i (0-based)."""
    return KCovector.basis_element(d, (i,))


def omega_of(xi) -> KCovector:
    """The 1-covector w -> w . xi."""
    return KCovector.from_vector(np.asarray(xi, dtype=float))


def wedge(a: _Multi, b: _Multi) -> _Multi:
    """Exterior product; graded-anticommutative, bilinear."""
    if type(a) is not type(b):
        raise DimensionError("cannot wedge a vector with a covector")
    if a.d != b.d:
        raise DimensionError("operands have different ambient dimension")
    if a.k + b.k > a.d:
        raise DegreeOverflow(f"degree {a.k}+{b.k} exceeds dimension {a.d}")
    ia, ib, io, sg = _wedge_table(a.d, a.k, b.k)
    exact = a.is_exact or b.is_exact
    out = type(a).zero(a.d, a.k + b.k, exact).coeffs.copy()
    if len(io):
        np.add.at(out, io, sg * a.coeffs[ia] * b.coeffs[ib])
    return type(a)(a.d, a.k + b.k, out)


def pairing(v: KVector, w: KCovector):
    if (v.d, v.k) != (w.d, w.k):
        raise DimensionError("pairing needs equal dimension and degree")
    return (v.coeffs * w.coeffs).sum()


@lru_cache(maxsize=None)
def _interior_tensor(d: int, k: int) -> np.ndarray:
    """I[i, J, K] with (v _| dx^i)_J = sum_K I[i, J, K] v_K."""
    out = np.zeros((d, comb(d, k - 1), comb(d, k)))
    idx_k = basis_index(d, k)
    for j, tj in enumerate(basis(d, k - 1)):
        for i in range(d):
            if i in tj:
                continue
            # <v, dx^i ^ dx^J>: sign of moving i into sorted position
            sign = -1 if sum(1 for t in tj if t < i) % 2 else 1
            out[i, j, idx_k[tuple(sorted(tj + (i,)))]] = sign
    out.setflags(write=False)
    return out


def interior_matrix(d: int, k: int, eta) -> np.ndarray:
    """Matrix of ``v -> v _| eta`` from Lambda_k to Lambda_{k-1}."""
    if k < 1:
        raise DegreeUnderflow("interior product needs degree >= 1")
    eta = eta.coeffs if isinstance(eta, KCovector) else np.asarray(eta, dtype=float)
    return np.tensordot(eta.astype(float), _interior_tensor(d, k), axes=(0, 0))


def interior_product(v: KVector, eta: KCovector) -> KVector:
    if v.k < 1:
        raise DegreeUnderflow("interior product needs degree >= 1")
    if eta.k != 1 or eta.d != v.d:
        raise DimensionError("eta must be a 1-covector of the same dimension")
    tensor = _interior_tensor(v.d, v.k)
    if v.is_exact or eta.is_exact:
        out = KVector.zero(v.d, v.k - 1, exact=True).coeffs.copy()
        for i, ji, ki in zip(*np.nonzero(tensor)):
            out[ji] += int(tensor[i, ji, ki]) * eta.coeffs[i] * v.coeffs[ki]
        return KVector(v.d, v.k - 1, out)
    return KVector(v.d, v.k - 1, interior_matrix(v.d, v.k, eta) @ v.coeffs)


def wedge_matrix(v: KVector) -> np.ndarray:
    """Matrix of the linear map ``x -> x ^ v`` from R^d to Lambda_{k+1}."""
    cols = [wedge(KVector.basis_element(v.d, (i,)), v.as_float()).coeffs for i in range(v.d)]
    return np.stack(cols, axis=1)


def _null_space(mat: np.ndarray, rel_tol: float) -> np.ndarray:
    """Orthonormal null space basis (columns) with a relative singular cutoff."""
    cols = mat.shape[1]
    if mat.shape[0] == 0:
        return np.eye(cols)
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    smax = s.max() if s.size else 0.0
    if smax == 0.0:
        return np.eye(cols)
    rank = int(np.sum(s > rel_tol * smax))
    return vh[rank:].T


def is_simple(v: KVector, rel_tol: float = 1e-8) -> bool:
    """True iff ``{x : x ^ v = 0}`` has dimension k."""
    v = v.as_float()
    if v.norm() == 0:
        raise DegenerateVector("the zero k-vector has no simplicity verdict")
    if v.k == v.d:
        return True
    return _null_space(wedge_matrix(v), rel_tol).shape[1] == v.k


def annihilator_covector(vs, rel_tol: float = 1e-8) -> KCovector | None:
    """A unit 1-covector w with ``v_i _| w = 0`` for all i, or None."""
    vs = list(vs)
    if not vs:
        raise EmptyFamily("need at least one k-vector")
    d = vs[0].d
    blocks = []
    for v in vs:
        v = v.as_float()
        if v.d != d:
            raise DimensionError("k-vectors have different ambient dimension")
        if v.norm() == 0:
            raise DegenerateVector("family contains a zero k-vector")
        if v.k < 1:
            raise DegreeUnderflow("scalars have no interior product")
        # column i is v _| dx^i
        blocks.append(np.tensordot(_interior_tensor(d, v.k), v.coeffs, axes=(2, 0)).T)
    stacked = np.vstack(blocks)
    null = _null_space(stacked, rel_tol)
    if null.shape[1] == 0:
        return None
    w = null[:, 0]
    w = w / np.linalg.norm(w)
    if w[np.argmax(np.abs(w))] < 0:
        w = -w
    return KCovector(d, 1, w)


def induced_map(lin: np.ndarray, k: int) -> np.ndarray:
    """Matrix of ``Lambda_k(L)`` (k x k minors of L) on the lexicographic bases."""
    lin = np.asarray(lin, dtype=float)
    rows_d, cols_d = lin.shape
    out_basis, in_basis = basis(rows_d, k), basis(cols_d, k)
    out = np.zeros((len(out_basis), len(in_basis)))
    if k == 0:
        return np.ones((1, 1))
    for a, I in enumerate(out_basis):
        for b, J in enumerate(in_basis):
            out[a, b] = np.linalg.det(lin[np.ix_(I, J)])
    return out


def format_kvector(v: _Multi) -> str:
    """``d k c1 ... cN``; exact coefficients print as fractions."""
    fmt = str if v.is_exact else (lambda c: repr(float(c)))
    return " ".join([str(v.d), str(v.k)] + [fmt(c) for c in v.coeffs]) + "\n"


def parse_kvector(text: str, cls=KVector, exact: bool = False) -> _Multi:
    parts = text.split()
    if len(parts) < 2:
        raise SpecFormatError("k-vector text: expected 'd k c1 ... cN'")
    try:
        d, k = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise SpecFormatError(f"k-vector text: bad header {parts[:2]}") from exc
    if not 0 <= k <= d:
        raise SpecFormatError(f"k-vector text: degree {k} outside 0..{d}")
    n = comb(d, k)
    if len(parts) - 2 != n:
        raise SpecFormatError(f"k-vector text: expected {n} coefficients, got {len(parts) - 2}")
    try:
        if exact:
            return cls.exact(d, k, [Fraction(c) for c in parts[2:]])
        coeffs = [float(c) for c in parts[2:]]
    except (ValueError, ZeroDivisionError) as exc:
        raise SpecFormatError(f"k-vector text: {exc}") from exc
    return cls(d, k, np.array(coeffs))


# ---------------------------------------------------------------------------
# discrete currents


@dataclass(frozen=True)
class DiscreteCurrent:
    """A k-current with finite mass: a Lambda_k(R^d)-valued grid measure."""

    k: int
    measure: GridMeasure

    def __post_init__(self):
        if self.measure.m != comb(self.measure.d, self.k):
            raise DimensionError(
                f"a {self.k}-current in R^{self.measure.d} needs "
                f"{comb(self.measure.d, self.k)} channels, got {self.measure.m}"
            )

    @property
    def d(self) -> int:
        return self.measure.d

    @property
    def mass(self) -> float:
        return self.measure.total_variation


def _axis_derivative(values: np.ndarray, h: float, axis: int, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2 * h)
    return np.gradient(values, h, axis=axis, edge_order=2)


def boundary(T: DiscreteCurrent) -> DiscreteCurrent:
    """``dT = - sum_i d_i T _| dx^i`` with second-order finite differences.

    Derivatives act on cell integrals directly, which equals differentiating
    the density and re-integrating on a uniform grid.
    """
    if T.k < 1:
        raise DegreeUnderflow("a 0-current has no boundary")
    mu = T.measure
    if mu.cells < 3:
        raise DimensionError("boundary needs at least 3 cells per axis")
    d = mu.d
    tensor = _interior_tensor(d, T.k)
    out = np.zeros((mu.cells,) * d + (comb(d, T.k - 1),))
    for i in range(d):  # axis-major summation order
        deriv = _axis_derivative(mu.values, mu.h[i], i, mu.periodic)
        out -= deriv @ tensor[i].T
    return DiscreteCurrent(T.k - 1, mu.with_values(out, m=comb(d, T.k - 1)))
