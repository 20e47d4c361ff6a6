"""Operators whose wave cones are known in closed form.

Flattening conventions (all preserve the Frobenius inner product):

* ``l x d`` matrices: row-major, entry (k, j) at index ``k*d + j``.
* symmetric ``d x d`` matrices: pairs ``i <= j`` in lexicographic order,
  off-diagonal entries multiplied by sqrt(2).
* symmetric r-linear maps R^d -> R^l: component k, then multisets of size r in
  lexicographic order, each entry multiplied by sqrt(number of orderings).
* tuples of k-vectors: concatenated coefficient arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, combinations_with_replacement
from math import comb, factorial, sqrt

import numpy as np

from . import exterior
from .errors import DimensionError
from .operator_core import PdeOperator, unit_index

SYM_RANK_CUT = 1e-8


# ---------------------------------------------------------------------------
# embeddings


@lru_cache(maxsize=None)
def sym_pairs(d: int) -> tuple[tuple[int, int], ...]:
    return tuple((i, j) for i in range(d) for j in range(i, d))


def sym_to_flat(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    return np.array([M[i, j] if i == j else sqrt(2) * M[i, j] for i, j in sym_pairs(M.shape[0])])


def flat_to_sym(v, d: int) -> np.ndarray:
    M = np.zeros((d, d))
    for c, (i, j) in zip(np.asarray(v, dtype=float), sym_pairs(d)):
        if i == j:
            M[i, i] = c
        else:
            M[i, j] = M[j, i] = c / sqrt(2)
    return M


@lru_cache(maxsize=None)
def sym_embedding(d: int) -> np.ndarray:
    """E with ``vec(M) = E @ flat(M)`` for symmetric M (row-major vec)."""
    pairs = sym_pairs(d)
    E = np.zeros((d * d, len(pairs)))
    for c, (i, j) in enumerate(pairs):
        w = 1.0 if i == j else 1 / sqrt(2)
        E[i * d + j, c] = w
        E[j * d + i, c] = w
    return E


@lru_cache(maxsize=None)
def multisets(d: int, r: int) -> tuple[tuple[int, ...], ...]:
    return tuple(combinations_with_replacement(range(d), r))


def orderings(ms: tuple[int, ...]) -> int:
    out = factorial(len(ms))
    for v in set(ms):
        out //= factorial(ms.count(v))
    return out


def symtensor_to_flat(T) -> np.ndarray:
    """Flatten an array of shape (l, d, ..., d) symmetric in its last r axes."""
    T = np.asarray(T, dtype=float)
    ell, d, r = T.shape[0], T.shape[1], T.ndim - 1
    out = []
    for k in range(ell):
        for ms in multisets(d, r):
            out.append(sqrt(orderings(ms)) * T[(k,) + ms])
    return np.array(out)


def flat_to_symtensor(v, ell: int, d: int, r: int) -> np.ndarray:
    from itertools import permutations

    v = np.asarray(v, dtype=float)
    T = np.zeros((ell,) + (d,) * r)
    ms_list = multisets(d, r)
    for k in range(ell):
        for s, ms in enumerate(ms_list):
            val = v[k * len(ms_list) + s] / sqrt(orderings(ms))
            for perm in set(permutations(ms)):
                T[(k,) + perm] = val
    return T


def rank_one_tensor(a, xi, r: int) -> np.ndarray:
    """``a (x) xi (x) ... (x) xi`` with r copies of xi."""
    T = np.asarray(a, dtype=float)
    for _ in range(r):
        T = np.multiply.outer(T, np.asarray(xi, dtype=float))
    return T


# ---------------------------------------------------------------------------
# closed-form cones


def _tail_fraction(mat: np.ndarray, keep: int) -> float:
    s = np.linalg.svd(mat, compute_uv=False)
    total = np.linalg.norm(s)
    if total == 0:
        return 0.0
    return float(np.linalg.norm(s[keep:]) / total)


@dataclass(frozen=True)
class ConeForm:
    """Closed-form description of a wave cone.

    ``kind`` is one of RankOne, SymmetricRankOne, RankAtMost, HigherRankOne,
    CurrentAnnihilator; ``params`` carries the dimensions.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def contains(self, v, tol: float = 1e-6) -> bool:
        v = np.asarray(v, dtype=float)
        p = self.params
        if self.kind == "RankOne":
            return _tail_fraction(v.reshape(p["ell"], p["d"]), 1) <= tol
        if self.kind == "RankAtMost":
            return _tail_fraction(v.reshape(p["d"], p["d"]), p["rank"]) <= tol
        if self.kind == "SymmetricRankOne":
            lam = np.linalg.eigvalsh(flat_to_sym(v, p["d"]))
            lam = lam[np.argsort(-np.abs(lam))]
            top = abs(lam[0])
            if top == 0:
                return True
            lam = np.where(np.abs(lam) <= SYM_RANK_CUT * top, 0.0, lam)
            if np.any(lam[2:] != 0):
                return False
            return lam[0] * lam[1] <= tol * top**2
        if self.kind == "HigherRankOne":
            ell, d, r = p["ell"], p["d"], p["r"]
            unfold = v.reshape(ell, -1)
            if _tail_fraction(unfold, 1) > tol:
                return False
            # the right factor must itself be +-xi^{(x)r}
            _, _, vh = np.linalg.svd(unfold)
            sym = flat_to_symtensor(vh[0], 1, d, r)[0]
            return _tail_fraction(sym.reshape(d, -1), 1) <= tol
        if self.kind == "CurrentAnnihilator":
            parts = split_current_tuple(v, p["d"], p["degrees"])
            nonzero = [w for w in parts if w.norm() > 0]
            if not nonzero:
                return True
            return exterior.annihilator_covector(nonzero, rel_tol=tol) is not None
        raise ValueError(f"unknown cone kind {self.kind!r}")

    def sample_member(self, rng: np.random.Generator) -> np.ndarray:
        """A random element of the cone."""
        p = self.params
        if self.kind == "RankOne":
            return np.outer(rng.standard_normal(p["ell"]), rng.standard_normal(p["d"])).ravel()
        if self.kind == "RankAtMost":
            d = p["d"]
            u, _, vh = np.linalg.svd(rng.standard_normal((d, d)))
            s = rng.uniform(0.5, 2.0, d)
            s[p["rank"]:] = 0.0
            return (u * s @ vh).ravel()
        if self.kind == "SymmetricRankOne":
            a, b = rng.standard_normal(p["d"]), rng.standard_normal(p["d"])
            return sym_to_flat((np.outer(a, b) + np.outer(b, a)) / 2)
        if self.kind == "HigherRankOne":
            T = rank_one_tensor(rng.standard_normal(p["ell"]), rng.standard_normal(p["d"]), p["r"])
            return symtensor_to_flat(T)
        if self.kind == "CurrentAnnihilator":
            d = p["d"]
            q, _ = np.linalg.qr(rng.standard_normal((d, d)))
            hyper = q[:, : d - 1]
            parts = []
            for k in p["degrees"]:
                inner = rng.standard_normal(comb(d - 1, k)) if k <= d - 1 else np.zeros(0)
                if k <= d - 1:
                    parts.append(exterior.induced_map(hyper, k) @ inner)
                else:
                    parts.append(np.zeros(comb(d, k)))
            return np.concatenate(parts)
        raise ValueError(f"unknown cone kind {self.kind!r}")


def split_current_tuple(v, d: int, degrees) -> list[exterior.KVector]:
    v = np.asarray(v, dtype=float)
    out, off = [], 0
    for k in degrees:
        n = comb(d, k)
        out.append(exterior.KVector(d, k, v[off : off + n]))
        off += n
    return out


@dataclass(frozen=True)
class CatalogEntry:
    operator: PdeOperator
    cone: ConeForm
    citation: str

    def contains(self, v, tol: float = 1e-6) -> bool:
        return self.cone.contains(v, tol)


# ---------------------------------------------------------------------------
# constructors


def curl_annihilator(d: int, ell: int) -> CatalogEntry:
    """Constraints satisfied by gradients of R^l-valued maps.

    One equation ``d_i mu^k_j - d_j mu^k_i`` per component k and pair i < j.
    """
    if d < 2:
        raise DimensionError("curl needs d >= 2")
    if ell < 1:
        raise DimensionError("ell must be positive")
    pairs = list(combinations(range(d), 2))
    n, m = ell * len(pairs), ell * d
    A = {unit_index(d, i): np.zeros((n, m)) for i in range(d)}
    row = 0
    for k in range(ell):
        for i, j in pairs:
            A[unit_index(d, i)][row, k * d + j] += 1.0
            A[unit_index(d, j)][row, k * d + i] -= 1.0
            row += 1
    op = PdeOperator.from_terms(d, m, n, A, label=f"curl(d={d},l={ell})")
    return CatalogEntry(
        op,
        ConeForm("RankOne", {"ell": ell, "d": d}),
        "Gradients: polar of D^s u is a rank-one matrix a (x) b (Alberti's rank-one theorem).",
    )


def higher_gradient_annihilator(d: int, ell: int, r: int) -> CatalogEntry:
    """Constraints satisfied by r-th derivatives of R^l-valued maps.

    Acts on symmetric r-linear maps in the weighted multiset basis.  For each
    component k, multiset beta of size r-1 and pair i < j the row reads
    ``d_i T^k_{beta+j} - d_j T^k_{beta+i}``.
    """
    if d < 2:
        raise DimensionError("higher gradient constraints need d >= 2")
    if ell < 1 or r < 1:
        raise DimensionError("ell and r must be positive")
    ms_r = multisets(d, r)
    pos = {ms: s for s, ms in enumerate(ms_r)}
    pairs = list(combinations(range(d), 2))
    betas = multisets(d, r - 1)
    n, m = ell * len(betas) * len(pairs), ell * len(ms_r)
    A = {unit_index(d, i): np.zeros((n, m)) for i in range(d)}
    row = 0
    for k in range(ell):
        for beta in betas:
            for i, j in pairs:
                sj = tuple(sorted(beta + (j,)))
                si = tuple(sorted(beta + (i,)))
                A[unit_index(d, i)][row, k * len(ms_r) + pos[sj]] += 1 / sqrt(orderings(sj))
                A[unit_index(d, j)][row, k * len(ms_r) + pos[si]] -= 1 / sqrt(orderings(si))
                row += 1
    op = PdeOperator.from_terms(d, m, n, A, label=f"higher_gradient(d={d},l={ell},r={r})")
    return CatalogEntry(
        op,
        ConeForm("HigherRankOne", {"ell": ell, "d": d, "r": r}),
        "Higher derivatives: polar of (D^r u)^s is a (x) b (x) ... (x) b, r copies of b.",
    )


def saint_venant(d: int) -> CatalogEntry:
    """Saint-Venant compatibility conditions on symmetric matrix fields.

    Row (j, k), j <= k:
    ``sum_i d_ik mu_ij + d_ij mu_ik - d_jk mu_ii - d_ii mu_jk``.
    In d = 2 the (0, 1) row vanishes identically; it is kept for uniformity.
    """
    if d < 2:
        raise DimensionError("Saint-Venant conditions need d >= 2")
    rows = sym_pairs(d)
    n = len(rows)
    full = {}

    def add(alpha, row, col, val):
        full.setdefault(alpha, np.zeros((n, d * d)))[row, col] += val

    for r, (j, k) in enumerate(rows):
        for i in range(d):
            add(unit_index(d, i, k), r, i * d + j, 1.0)
            add(unit_index(d, i, j), r, i * d + k, 1.0)
            add(unit_index(d, j, k), r, i * d + i, -1.0)
            add(unit_index(d, i, i), r, j * d + k, -1.0)
    E = sym_embedding(d)
    terms = {alpha: mat @ E for alpha, mat in full.items()}
    op = PdeOperator.from_terms(d, E.shape[1], n, terms, label=f"saint_venant(d={d})")
    return CatalogEntry(
        op,
        ConeForm("SymmetricRankOne", {"d": d}),
        "Symmetrized gradients (BD): polar of E^s u is a symmetric product a (.) b.",
    )


def divergence_operator(d: int) -> CatalogEntry:
    """Row-wise divergence ``(sum_j d_j mu^k_j)_k`` of d x d matrix fields."""
    if d < 2:
        raise DimensionError("divergence catalog entry needs d >= 2")
    A = {unit_index(d, j): np.zeros((d, d * d)) for j in range(d)}
    for k in range(d):
        for j in range(d):
            A[unit_index(d, j)][k, k * d + j] = 1.0
    op = PdeOperator.from_terms(d, d * d, d, A, label=f"divergence(d={d})")
    return CatalogEntry(
        op,
        ConeForm("RankAtMost", {"d": d, "rank": d - 1}),
        "Divergence-measure fields: polar of the singular part has rank at most d-1.",
    )


def current_boundary_operator(d: int, degrees) -> CatalogEntry:
    """``(dT_1, ..., dT_r)`` on tuples of currents of the given degrees.

    The symbol at xi sends (v_i) to ``-2 pi i (v_i _| omega_xi)``.
    """
    degrees = [int(k) for k in degrees]
    if not degrees:
        raise DimensionError("need at least one degree")
    if any(not 1 <= k <= d for k in degrees):
        raise DimensionError(f"degrees must lie in 1..{d}, got {degrees}")
    m = sum(comb(d, k) for k in degrees)
    n = sum(comb(d, k - 1) for k in degrees)
    A = {}
    for i in range(d):
        mat = np.zeros((n, m))
        r0 = c0 = 0
        for k in degrees:
            block = exterior.interior_matrix(d, k, exterior.dx(d, i))
            mat[r0 : r0 + block.shape[0], c0 : c0 + block.shape[1]] = -block
            r0 += block.shape[0]
            c0 += block.shape[1]
        A[unit_index(d, i)] = mat
    label = f"boundary(d={d},k={','.join(map(str, degrees))})"
    op = PdeOperator.from_terms(d, m, n, A, label=label)
    return CatalogEntry(
        op,
        ConeForm("CurrentAnnihilator", {"d": d, "degrees": tuple(degrees)}),
        "Normal currents: at singular points all orientations share a 1-covector "
        "w with T_i _| w = 0.",
    )


def default_entries() -> list[CatalogEntry]:
    """The five catalog families at small default dimensions."""
    return [
        curl_annihilator(2, 2),
        higher_gradient_annihilator(2, 1, 2),
        saint_venant(2),
        divergence_operator(2),
        current_boundary_operator(3, [2]),
    ]
