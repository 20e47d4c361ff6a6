"""Wave cone computations for constant-coefficient operators.

Membership ``v in Lambda_A`` is decided by minimizing the residual
``r(xi) = |A^k(xi) v| / |v|_inf`` over the unit sphere: a deterministic sample
set followed by a shrinking random compass search.  A negative verdict is only
a sampled lower bound, so ``samples_used`` and the landscape are exposed for
auditing.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gamma, pi

import numpy as np
from scipy import optimize

from .errors import DegenerateFrequency, DegenerateVector, DimensionError, UnsupportedOrderZero
from .operator_core import PdeOperator, PrincipalPolynomial, order, principal_symbol

DEFAULT_TOL = 1e-6
DEFAULT_RANK_TOL = 1e-8
_GOLDEN_ANGLE = pi * (3.0 - np.sqrt(5.0))
_MAX_MOVES_PER_RADIUS = 12


@dataclass(frozen=True)
class SphereSampling:
    count: int = 4096
    seed: int = 0
    refine_steps: int = 60
    refine_shrink: float = 0.7

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("sample count must be positive")
        if not 0.0 < self.refine_shrink < 1.0:
            raise ValueError("refine_shrink must lie in (0, 1)")


@dataclass(frozen=True)
class ConeVerdict:
    member: bool
    witness_xi: np.ndarray | None
    residual: float
    samples_used: int
    refined: bool
    best_xi: np.ndarray

    def as_dict(self) -> dict:
        return {
            "member": self.member,
            "witness_xi": None if self.witness_xi is None else [float(x) for x in self.witness_xi],
            "residual": float(self.residual),
            "samples_used": int(self.samples_used),
            "refined": bool(self.refined),
            "best_xi": [float(x) for x in self.best_xi],
        }


@dataclass(frozen=True)
class RankProfile:
    min_rank: int
    max_rank: int
    violation_pair: tuple[np.ndarray, np.ndarray] | None

    @property
    def constant(self) -> bool:
        return self.min_rank == self.max_rank


@lru_cache(maxsize=64)
def _polynomial(op: PdeOperator) -> PrincipalPolynomial:
    return PrincipalPolynomial(op)


@lru_cache(maxsize=32)
def sphere_points(d: int, count: int, seed: int) -> np.ndarray:
    """Unit vectors: the 2d coordinate directions, then ``count`` further points.

    d = 2: equispaced angles with a seeded offset; d = 3: Fibonacci lattice
    under a seeded rotation; d > 3: seeded normalized Gaussians.
    """
    axes = np.vstack([np.eye(d), -np.eye(d)])
    rng = np.random.default_rng(seed)
    if d == 1:
        pts = np.zeros((0, 1))
    elif d == 2:
        theta = 2 * pi * (np.arange(count) + rng.random()) / count
        pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    elif d == 3:
        i = np.arange(count)
        z = 1.0 - (2 * i + 1) / count
        rad = np.sqrt(1.0 - z * z)
        phi = i * _GOLDEN_ANGLE
        pts = np.stack([rad * np.cos(phi), rad * np.sin(phi), z], axis=1)
        q, r = np.linalg.qr(rng.standard_normal((3, 3)))
        q = q * np.sign(np.diag(r))
        pts = pts @ q.T
    else:
        pts = rng.standard_normal((count, d))
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    out = np.vstack([axes, pts])
    out.setflags(write=False)
    return out


def _spacing(d: int, count: int) -> float:
    if d < 2:
        return 0.0
    area = 2 * pi ** (d / 2) / gamma(d / 2)
    return (area / count) ** (1.0 / (d - 1))


def _first_min(values: np.ndarray, pts: np.ndarray) -> int:
    """Index of the smallest value; ties broken by lexicographically smallest point."""
    keys = tuple(pts[:, a] for a in reversed(range(pts.shape[1]))) + (values,)
    return int(np.lexsort(keys)[0])


def _check_vector(op: PdeOperator, v) -> tuple[np.ndarray, float]:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (op.m,):
        raise DimensionError(f"vector has length {v.shape[0]}, operator expects {op.m}")
    scale = float(np.max(np.abs(v))) if v.size else 0.0
    if scale == 0.0:
        raise DegenerateVector("the zero vector has no direction")
    return v, scale


def kernel_basis(op: PdeOperator, xi, rel_tol: float = DEFAULT_RANK_TOL) -> list[np.ndarray]:
    """Orthonormal real basis of ``Ker A^k(xi)``.

    The complex symbol acting on real vectors is stacked as ``[Re; Im]`` and
    singular values at or below ``rel_tol * sigma_max`` count as zero.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (op.d,):
        raise DimensionError(f"frequency has shape {xi.shape}, expected ({op.d},)")
    if np.linalg.norm(xi) == 0:
        raise DegenerateFrequency("xi = 0 has no wave-cone meaning")
    sym = principal_symbol(op, xi)
    stacked = np.vstack([sym.real, sym.imag])
    _, s, vh = np.linalg.svd(stacked, full_matrices=True)
    smax = s.max() if s.size else 0.0
    rank = 0 if smax == 0 else int(np.sum(s > rel_tol * smax))
    return [row.copy() for row in vh[rank:]]


def residual_at(op: PdeOperator, v, xi) -> np.ndarray:
    """Normalized residual ``|A^k(xi) v| / |v|_inf`` at one or many unit xi."""
    v, scale = _check_vector(op, v)
    xi = np.asarray(xi, dtype=float)
    return _polynomial(op).apply_norm(xi, v / scale)


def _refine(poly, v, x, fx, sampling: SphereSampling, d: int):
    rng = np.random.default_rng([sampling.seed, 0x5EED])
    bound = poly.bind(v)
    radius = _spacing(d, sampling.count)
    evals = 0
    for _ in range(sampling.refine_steps):
        if fx == 0.0:
            break
        for _ in range(_MAX_MOVES_PER_RADIUS):
            # d-1 random tangent directions, both signs
            g = rng.standard_normal((d - 1, d))
            g -= np.outer(g @ x, x)
            g /= np.sqrt(np.einsum("ij,ij->i", g, g))[:, None]
            cand = np.concatenate([x + radius * g, x - radius * g])
            cand /= np.sqrt(np.einsum("ij,ij->i", cand, cand))[:, None]
            vals = poly.apply_norm(cand, v, bound)
            evals += len(cand)
            j = int(np.argmin(vals))
            if vals[j] < fx:
                x, fx = cand[j], float(vals[j])
            else:
                break
        radius *= sampling.refine_shrink
    return x, fx, evals


def _polish(poly, v, x, fx, d: int, scale: float):
    """Nelder-Mead in tangent coordinates at ``x``; adapts to narrow valleys."""
    bound = poly.bind(v)
    # orthonormal tangent basis: complete x to an orthonormal frame
    q, _ = np.linalg.qr(np.column_stack([x, np.eye(d)]))
    basis = q[:, 1:d]

    def chart(t):
        y = x + basis @ t
        return y / np.linalg.norm(y)

    def f(t):
        return float(poly.apply_norm(chart(t)[None, :], v, bound)[0])

    simplex = np.vstack([np.zeros(d - 1), scale * np.eye(d - 1)])
    res = optimize.minimize(
        f, np.zeros(d - 1), method="Nelder-Mead",
        options={"initial_simplex": simplex, "xatol": 1e-12, "fatol": 1e-14, "maxfev": 400 * d},
    )
    if res.fun < fx:
        return chart(res.x), float(res.fun), int(res.nfev)
    return x, fx, int(res.nfev)


def in_wave_cone(
    op: PdeOperator,
    v,
    tol: float = DEFAULT_TOL,
    sampling: SphereSampling = SphereSampling(),
    refine: bool = True,
) -> ConeVerdict:
    """Decide ``v in Lambda_A`` up to ``tol`` on the normalized residual."""
    order(op)
    v, scale = _check_vector(op, v)
    v = v / scale
    poly = _polynomial(op)
    pts = sphere_points(op.d, sampling.count, sampling.seed)
    vals = poly.apply_norm(pts, v)
    i = _first_min(vals, pts)
    x, fx = pts[i].copy(), float(vals[i])
    used = len(pts)
    refined = False
    if refine and op.d >= 2 and sampling.refine_steps > 0:
        x, fx, extra = _refine(poly, v, x, fx, sampling, op.d)
        used += extra
        if fx > tol:
            x, fx, extra = _polish(poly, v, x, fx, op.d, _spacing(op.d, sampling.count))
            used += extra
        refined = True
    x = x / np.linalg.norm(x)
    fx = float(poly.apply_norm(x[None, :], v)[0])
    member = fx <= tol
    return ConeVerdict(
        member=member,
        witness_xi=x.copy() if member else None,
        residual=fx,
        samples_used=used,
        refined=refined,
        best_xi=x.copy(),
    )


def cone_distance_profile(
    op: PdeOperator, v, sampling: SphereSampling = SphereSampling()
) -> tuple[np.ndarray, np.ndarray]:
    """Sampled residual landscape ``(xis, residuals)`` sorted ascending."""
    order(op)
    v, scale = _check_vector(op, v)
    pts = sphere_points(op.d, sampling.count, sampling.seed)
    vals = _polynomial(op).apply_norm(pts, v / scale)
    keys = tuple(pts[:, a] for a in reversed(range(op.d))) + (vals,)
    perm = np.lexsort(keys)
    return pts[perm].copy(), vals[perm]


def write_profile_csv(xis: np.ndarray, residuals: np.ndarray, path) -> None:
    d = xis.shape[1]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join([f"xi{a}" for a in range(d)] + ["residual"]) + "\n")
        for x, r in zip(xis, residuals):
            fh.write(",".join(repr(float(t)) for t in x) + "," + repr(float(r)) + "\n")


def symbol_ranks(op: PdeOperator, xis: np.ndarray, rel_tol: float = DEFAULT_RANK_TOL):
    """Numerical ranks of ``A^k(xi)`` at many xi against a common reference.

    The reference is the largest singular value over all given xi, so a
    symbol that degenerates at some frequency shows a rank drop there.
    """
    sv = np.linalg.svd(_polynomial(op).matrices(xis), compute_uv=False)
    ref = sv.max() if sv.size else 0.0
    if ref == 0:
        return np.zeros(len(xis), dtype=int)
    return np.sum(sv > rel_tol * ref, axis=-1)


def constant_rank_check(
    op: PdeOperator,
    sampling: SphereSampling = SphereSampling(),
    rel_tol: float = DEFAULT_RANK_TOL,
) -> RankProfile:
    if order(op) < 1:
        raise UnsupportedOrderZero("constant rank is only meaningful for order >= 1")
    pts = sphere_points(op.d, sampling.count, sampling.seed)
    ranks = symbol_ranks(op, pts, rel_tol)
    lo, hi = int(ranks.min()), int(ranks.max())
    pair = None
    if lo < hi:
        pair = (pts[int(np.argmin(ranks))].copy(), pts[int(np.argmax(ranks))].copy())
    return RankProfile(lo, hi, pair)
