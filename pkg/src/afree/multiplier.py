"""Fourier multipliers on a periodic box and the regularization experiment.

Fields live on the torus ``[-L/2, L/2)^d`` (default period 4) with cell
centers at ``-L/2 + i L / N``.  Frequencies are in cycles per unit length:
a symbol ``m(xi)`` multiplies the coefficient of ``exp(2 pi i x . xi)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import product
from math import comb, floor
from typing import Callable

import numpy as np

from .errors import (
    ConeDegenerate,
    DimensionError,
    InvalidExponent,
    ScenarioContradictsHypothesis,
)
from .operator_core import PdeOperator, order, principal_symbol
from .wavecone import SphereSampling, in_wave_cone

DEFAULT_PERIOD = 4.0
WEAK11_LEVELS = 64
ALIAS_BAND = 0.75


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True)
class PeriodicField:
    d: int
    c: int
    N: int
    values: np.ndarray
    period: float = DEFAULT_PERIOD

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        expected = (self.N,) * self.d + (self.c,)
        if vals.shape != expected:
            raise DimensionError(f"values have shape {vals.shape}, expected {expected}")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_array(cls, values, period: float = DEFAULT_PERIOD, channels: bool = True):
        """Wrap an array of shape (N,)*d + (c,), or (N,)*d when ``channels`` is false."""
        arr = np.asarray(values)
        if not channels:
            arr = arr[..., None]
        d = arr.ndim - 1
        return cls(d, arr.shape[-1], arr.shape[0], arr, period)

    @classmethod
    def zeros(cls, d, c, N, period=DEFAULT_PERIOD):
        return cls(d, c, N, np.zeros((N,) * d + (c,)), period)

    def with_values(self, values) -> "PeriodicField":
        values = np.asarray(values)
        return PeriodicField(self.d, values.shape[-1], self.N, values, self.period)

    @property
    def h(self) -> float:
        return self.period / self.N

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    def axis(self) -> np.ndarray:
        return -self.period / 2 + np.arange(self.N) * self.h

    def coords(self) -> np.ndarray:
        ax = self.axis()
        return np.stack(np.meshgrid(*([ax] * self.d), indexing="ij"), axis=-1)

    def frequencies(self) -> np.ndarray:
        return frequency_grid(self.d, self.N, self.period)

    def spectrum(self) -> np.ndarray:
        return np.fft.fftn(self.values, axes=tuple(range(self.d)))

    def from_spectrum(self, spec: np.ndarray) -> "PeriodicField":
        return self.with_values(np.fft.ifftn(spec, axes=tuple(range(self.d))))

    def magnitude(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=-1)

    def lp_norm(self, p: float, mask=None) -> float:
        g = self.magnitude()
        if mask is not None:
            g = g[mask]
        if np.isinf(p):
            return float(g.max()) if g.size else 0.0
        return float((np.sum(g**p) * self.cell_volume) ** (1.0 / p))

    def l1(self, mask=None) -> float:
        return self.lp_norm(1.0, mask)

    @property
    def real(self) -> "PeriodicField":
        return self.with_values(self.values.real)


def frequency_grid(d: int, N: int, period: float = DEFAULT_PERIOD) -> np.ndarray:
    f = np.fft.fftfreq(N, d=period / N)
    return np.stack(np.meshgrid(*([f] * d), indexing="ij"), axis=-1)


# ---------------------------------------------------------------------------
# multipliers


@dataclass(frozen=True)
class MultiplierSpec:
    """``evaluator(xi)`` maps frequencies of shape (..., d) to (..., c_out, c_in)."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    c_out: int
    c_in: int
    label: str = ""

    def __call__(self, xi) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(xi, dtype=float)), dtype=complex)


def identity_multiplier(c: int) -> MultiplierSpec:
    eye = np.eye(c)
    return MultiplierSpec(lambda xi: np.broadcast_to(eye, xi.shape[:-1] + (c, c)), c, c, "identity")


def scalar_multiplier(fn, c: int = 1, label: str = "") -> MultiplierSpec:
    """``fn(xi) * I_c`` for a scalar function of the frequency."""
    eye = np.eye(c)
    return MultiplierSpec(lambda xi: np.asarray(fn(xi))[..., None, None] * eye, c, c, label)


def compose(outer: MultiplierSpec, inner: MultiplierSpec) -> MultiplierSpec:
    """Pointwise product ``outer(xi) @ inner(xi)``: apply inner first."""
    if outer.c_in != inner.c_out:
        raise DimensionError(f"cannot compose {outer.c_in} <- {inner.c_out} channels")
    return MultiplierSpec(
        lambda xi: outer(xi) @ inner(xi), outer.c_out, inner.c_in, f"{outer.label}*{inner.label}"
    )


def apply_multiplier(f: PeriodicField, m: MultiplierSpec) -> PeriodicField:
    if f.c != m.c_in:
        raise DimensionError(f"multiplier expects {m.c_in} channels, field has {f.c}")
    sym = m(f.frequencies())
    out = np.einsum("...ij,...j->...i", sym, f.spectrum())
    return f.from_spectrum(out)


def bessel_factor(xi, s: float) -> np.ndarray:
    return (1.0 + 4 * np.pi**2 * np.sum(np.asarray(xi) ** 2, axis=-1)) ** (-s / 2)


def bessel_multiplier(s: float, c: int = 1) -> MultiplierSpec:
    """``(1 + 4 pi^2 |xi|^2)^(-s/2)`` on every channel; any real s."""
    return scalar_multiplier(lambda xi: bessel_factor(xi, s), c, f"bessel({s})")


def bessel_potential(f: PeriodicField, s: float) -> PeriodicField:
    if not s > 0:
        raise InvalidExponent(f"Bessel potential needs s > 0, got {s}")
    return apply_multiplier(f, bessel_multiplier(s, f.c))


def aliasing_fraction(f: PeriodicField, band: float = ALIAS_BAND) -> float:
    """Share of spectral energy with some index above ``band`` times Nyquist."""
    spec = np.sum(np.abs(f.spectrum()) ** 2, axis=-1)
    k = np.abs(np.fft.fftfreq(f.N) * f.N)
    hi = np.zeros(spec.shape, dtype=bool)
    for axis in range(f.d):
        shape = [1] * f.d
        shape[axis] = f.N
        hi |= (k > band * f.N / 2).reshape(shape)
    total = spec.sum()
    return float(spec[hi].sum() / total) if total > 0 else 0.0


# ---------------------------------------------------------------------------
# mollifiers


@dataclass(frozen=True)
class MollifierSpec:
    shape: str = "bump"
    epsilon: float = 0.1

    def __post_init__(self):
        if self.shape not in ("bump", "gaussian"):
            raise ValueError(f"unknown mollifier shape {self.shape!r}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


def mollifier_kernel(spec: MollifierSpec, d: int, N: int, period: float = DEFAULT_PERIOD) -> np.ndarray:
    """Kernel centered at the origin of the torus, normalized to unit grid integral.

    ``bump``: ``(1 - |x/eps|^2)^3`` on the eps-ball.  ``gaussian``: standard
    deviation eps, truncated at 4 eps.  A kernel narrower than one cell
    collapses to the discrete delta.
    """
    h = period / N
    ax = np.fft.fftfreq(N, d=1.0 / period)  # signed distances to the origin
    r2 = sum(np.meshgrid(*([ax**2] * d), indexing="ij"))
    eps = spec.epsilon
    if spec.shape == "bump":
        k = np.clip(1.0 - r2 / eps**2, 0.0, None) ** 3
    else:
        k = np.where(r2 <= (4 * eps) ** 2, np.exp(-r2 / (2 * eps**2)), 0.0)
    total = k.sum() * h**d
    if total == 0:
        k = np.zeros_like(r2)
        k[(0,) * d] = 1.0
        total = h**d
    return k / total


def mollify(f: PeriodicField, spec: MollifierSpec) -> PeriodicField:
    kern = mollifier_kernel(spec, f.d, f.N, f.period)
    kh = np.fft.fftn(kern) * f.cell_volume
    return f.from_spectrum(f.spectrum() * kh[..., None])


# ---------------------------------------------------------------------------
# regularizer


@dataclass(frozen=True)
class Regularizer:
    """Symbols of the three-term decomposition for a fixed polar vector P0.

    With ``a(xi) = A^k(xi) P0`` and ``D = 1 + |a|^2``:
    T0 = a* A^k / D, T1 = 1 / D, T2 = a* / D, and the Bessel factorizations
    T1 = m1 (1+4pi^2|xi|^2)^(-k), T2 = m2 (1+4pi^2|xi|^2)^(-k/2).
    """

    op: PdeOperator
    p0: np.ndarray
    T0: MultiplierSpec
    T1: MultiplierSpec
    T2: MultiplierSpec
    m1: MultiplierSpec
    m2: MultiplierSpec
    p0_in_cone: bool

    @property
    def k(self) -> int:
        return order(self.op)


def _pieces(op, p0, xi):
    sym = principal_symbol(op, xi)
    a = sym @ p0
    denom = 1.0 + np.sum(np.abs(a) ** 2, axis=-1)
    return sym, a, denom


def build_regularizer(op: PdeOperator, p0, sampling: SphereSampling = SphereSampling()) -> Regularizer:
    k = order(op)
    p0 = np.asarray(p0, dtype=float).reshape(-1)
    if p0.shape != (op.m,):
        raise DimensionError(f"P0 must have length {op.m}")
    verdict = in_wave_cone(op, p0, sampling=sampling)
    if verdict.member:
        warnings.warn(
            f"P0 lies in the wave cone (residual {verdict.residual:.3g}); "
            "the multiplier bounds degenerate",
            ConeDegenerate,
            stacklevel=2,
        )

    def t0(xi):
        sym, a, den = _pieces(op, p0, xi)
        return np.einsum("...i,...ij->...j", a.conj(), sym)[..., None, :] / den[..., None, None]

    def t1(xi):
        _, _, den = _pieces(op, p0, xi)
        return (1.0 / den)[..., None, None]

    def t2(xi):
        _, a, den = _pieces(op, p0, xi)
        return (a.conj() / den[..., None])[..., None, :]

    def m1(xi):
        return t1(xi) / bessel_factor(xi, 2 * k)[..., None, None]

    def m2(xi):
        return t2(xi) / bessel_factor(xi, k)[..., None, None]

    return Regularizer(
        op,
        p0,
        MultiplierSpec(t0, 1, op.m, "T0"),
        MultiplierSpec(t1, 1, 1, "T1"),
        MultiplierSpec(t2, 1, op.n, "T2"),
        MultiplierSpec(m1, 1, 1, "m1"),
        MultiplierSpec(m2, 1, op.n, "m2"),
        verdict.member,
    )


def operator_multiplier(op: PdeOperator) -> MultiplierSpec:
    """The principal part ``A^k(xi)`` as a multiplier (R^m -> R^n)."""
    return MultiplierSpec(lambda xi: principal_symbol(op, xi), op.n, op.m, op.label)


def _fd_weights(order_: int):
    """Central stencil for the order-th derivative: offsets (units of step) and weights."""
    offs = np.arange(order_ + 1) - order_ / 2
    wts = np.array([(-1) ** (order_ - j) * comb(order_, j) for j in range(order_ + 1)], dtype=float)
    return offs, wts


def mihlin_profile(
    m: MultiplierSpec,
    d: int,
    shells=range(-2, 7),
    directions: int = 64,
    seed: int = 0,
    rel_step: float = 1e-3,
) -> list[tuple[float, float]]:
    """Sampled ``sup |xi|^|beta| |d^beta m(xi)|`` on dyadic shells.

    Returns ``(shell radius, constant)`` for every shell, over all
    ``|beta| <= floor(d/2) + 1`` and all symbol entries.  Derivatives are
    product central differences with step ``rel_step * |xi|``.
    """
    rng = np.random.default_rng(seed)
    top = floor(d / 2) + 1
    betas = [b for b in product(range(top + 1), repeat=d) if sum(b) <= top]
    out = []
    for j in shells:
        rad = 2.0**j * (1 + rng.random(directions))
        u = rng.standard_normal((directions, d))
        xi = u / np.linalg.norm(u, axis=1, keepdims=True) * rad[:, None]
        best = 0.0
        for beta in betas:
            step = rel_step * rad
            stencils = [_fd_weights(b) for b in beta]
            acc = 0.0
            for combo in product(*[range(len(s[0])) for s in stencils]):
                shift = np.array([stencils[i][0][c] for i, c in enumerate(combo)])
                w = np.prod([stencils[i][1][c] for i, c in enumerate(combo)])
                acc = acc + w * m(xi + shift[None, :] * step[:, None])
            deriv = np.abs(acc) / (step ** sum(beta))[:, None, None]
            best = max(best, float(np.max(rad[:, None, None] ** sum(beta) * deriv)))
        out.append((2.0**j, best))
    return out


# ---------------------------------------------------------------------------
# weak-(1,1) and Vitali-type diagnostics


@dataclass(frozen=True)
class Weak11Profile:
    levels: np.ndarray
    values: np.ndarray

    @property
    def headline(self) -> float:
        return float(self.values.max()) if self.values.size else 0.0


def weak11_profile(f: PeriodicField, levels: int = WEAK11_LEVELS, span: float = 1e6) -> Weak11Profile:
    """``lambda * |{|f| > lambda}|`` on log-spaced levels up to just below max |f|."""
    g = f.magnitude()
    top = float(g.max())
    if top == 0:
        return Weak11Profile(np.zeros(0), np.zeros(0))
    lam = np.geomspace(top / span, top * (1 - 1e-9), levels)
    srt = np.sort(g.ravel())
    counts = srt.size - np.searchsorted(srt, lam, side="right")
    return Weak11Profile(lam, lam * counts * f.cell_volume)


def _vitali_tests(f0: PeriodicField, radius: float, count: int = 10) -> list[np.ndarray]:
    """Fixed smooth test functions supported in the region ball."""
    x = f0.coords()
    rng = np.random.default_rng(1234)
    tests = []
    for _ in range(count):
        c = rng.uniform(-0.4, 0.4, f0.d) * radius
        w = rng.uniform(0.3, 0.6) * radius
        r2 = np.sum((x - c) ** 2, axis=-1) / w**2
        bump = np.where(r2 < 1, np.exp(-1.0 / np.clip(1 - r2, 1e-300, None)), 0.0)
        freq = rng.uniform(0, 2, f0.d)
        tests.append(bump * np.cos(2 * np.pi * (x @ freq)))
    return tests


def vitali_check(seq, region_radius: float = 1.0, lambdas=None, deltas=None) -> dict:
    """Observed-trend diagnostic for the three Vitali-type hypotheses.

    (a) pairings with 10 fixed test functions shrink below half their first
    value; (b) ``|{f_j^- > lambda}|`` in the region shrinks below half its
    first value (or vanishes) for every lambda; (c) the largest integral of
    ``f_j^-`` over a set of measure delta goes to 0 with delta uniformly in j.
    Conclusion: ``|f_j|_{L^1(region)}`` is non-increasing and ends below 10% of
    its start.  A fixed grid can only witness these trends, not prove limits.
    """
    seq = list(seq)
    if len(seq) < 3:
        raise ValueError("vitali_check needs at least three fields")
    f0 = seq[0]
    mask = np.linalg.norm(f0.coords(), axis=-1) < region_radius
    vol = f0.cell_volume
    tests = _vitali_tests(f0, region_radius)
    reals = [np.real(f.values[..., 0]) for f in seq]
    pair = np.array([[abs(float(np.sum(t * r) * vol)) for t in tests] for r in reals])
    first, last = pair[0].max(), pair[-1].max()
    cond_a = bool(last <= 0.5 * first + 1e-12)
    scale = max(float(np.abs(reals[0][mask]).max()), 1e-300)
    lambdas = np.asarray(lambdas if lambdas is not None else scale * np.array([0.01, 0.1, 0.5]))
    neg = [np.clip(-r, 0, None)[mask] for r in reals]
    meas = np.array([[np.count_nonzero(n > lam) * vol for lam in lambdas] for n in neg])
    cond_b = bool(np.all((meas[-1] <= 0.5 * meas[0]) | (meas[-1] == 0)))
    region_vol = mask.sum() * vol
    deltas = np.asarray(deltas if deltas is not None else region_vol * np.array([0.1, 0.01, 0.001]))
    equi = []
    for delta in deltas:
        cells = max(int(delta / vol), 1)
        equi.append(max(float(np.sort(n)[::-1][:cells].sum() * vol) for n in neg))
    total_neg = max(max(float(n.sum() * vol) for n in neg), 1e-300)
    cond_c = bool(equi[-1] <= 0.1 * total_neg or equi[-1] < 1e-12)
    l1 = np.array([float(np.abs(r[mask]).sum() * vol) for r in reals])
    decreasing = bool(np.all(np.diff(l1) <= 1e-12 * max(l1[0], 1e-300)))
    vanishing = bool(l1[-1] <= 0.1 * l1[0] + 1e-300)
    hypotheses = cond_a and cond_b and cond_c
    conclusion = decreasing and vanishing
    return {
        "label": "observed trend",
        "a_weak_to_zero": cond_a,
        "b_negative_part_in_measure": cond_b,
        "c_negative_part_equiintegrable": cond_c,
        "hypotheses_met": hypotheses,
        "l1_norms": [float(x) for x in l1],
        "l1_to_zero": conclusion,
        "consistent_with_vitali": bool((not hypotheses) or conclusion),
        "pairings_first_last": (float(first), float(last)),
        "negative_measure": meas.tolist(),
        "equiintegrability": [float(x) for x in equi],
    }


# ---------------------------------------------------------------------------
# experiments


def cutoff(f: PeriodicField, inner: float = 0.5, outer: float = 0.75) -> np.ndarray:
    """Smooth radial cut-off: 1 on B_inner, 0 outside B_outer."""
    r = np.linalg.norm(f.coords(), axis=-1)
    t = np.clip((r - inner) / (outer - inner), 0.0, 1.0)

    def g(s):
        return np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)

    return g(1 - t) / (g(1 - t) + g(t))


def kernel_projector(op: PdeOperator, xi: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto ``Ker A^k(xi)`` in C^m at every frequency."""
    sym = principal_symbol(op, xi)
    pinv = np.linalg.pinv(sym, rcond=1e-10)
    return np.eye(op.m) - pinv @ sym


def decomposition_terms(reg: Regularizer, chi_u: PeriodicField, chi_v: PeriodicField):
    """``(f, g, h, R)`` with ``chi u = f + g + h`` where f = T0[chi V],
    g = T1[chi u], h = T2[R] and R = A(P0 chi u) - A(chi V)."""
    A = operator_multiplier(reg.op)
    p0u = chi_u.with_values(chi_u.values * reg.p0)
    r = p0u.with_values(apply_multiplier(p0u, A).values - apply_multiplier(chi_v, A).values)
    return (
        apply_multiplier(chi_v, reg.T0),
        apply_multiplier(chi_u, reg.T1),
        apply_multiplier(r, reg.T2),
        r,
    )


@dataclass(frozen=True)
class Scenario:
    kind: str = "smooth"
    N: int = 64
    js: tuple = (1, 2, 4, 8)
    tangent: tuple | None = None
    mollifier: str = "bump"
    seed: int = 0

    @classmethod
    def from_dict(cls, raw: dict) -> "Scenario":
        known = {"kind", "N", "js", "tangent", "mollifier", "seed"}
        extra = set(raw) - known
        if extra:
            raise ValueError(f"unknown scenario fields {sorted(extra)}")
        out = dict(raw)
        if "js" in out:
            out["js"] = tuple(int(j) for j in out["js"])
        if out.get("tangent") is not None:
            out["tangent"] = tuple(float(t) for t in out["tangent"])
        sc = cls(**out)
        if sc.kind not in ("smooth", "line"):
            raise ValueError(f"unknown scenario kind {sc.kind!r}")
        if len(sc.js) < 2:
            raise ValueError("scenario needs at least two indices j")
        return sc


def _scale(j: int) -> float:
    """Concentration radius r_j of the j-th scenario term."""
    return 0.25 / j


def _scenario_density(sc: Scenario, base: PeriodicField, j: int) -> np.ndarray:
    """Positive density nu_j before mollification."""
    x = base.coords()
    rng = np.random.default_rng(sc.seed)
    if sc.kind == "smooth":
        direction = rng.standard_normal(base.d)
        direction /= np.linalg.norm(direction)
        return 1.0 + np.sin(2 * np.pi * (x @ direction) + 0.3) / (2 * j)
    tau = np.asarray(sc.tangent if sc.tangent is not None else np.eye(base.d)[0], dtype=float)
    tau = tau / np.linalg.norm(tau)
    dist = np.linalg.norm(x - np.multiply.outer(x @ tau, tau), axis=-1)
    width = _scale(j)
    prof = np.clip(1 - (dist / width) ** 2, 0, None)
    return prof / (4.0 / 3.0 * width)  # unit line density across the profile


def regularization_experiment(op: PdeOperator, p0, scenario: Scenario = Scenario()) -> dict:
    """Run the decomposition along a blow-up-like sequence u_j.

    ``V_j`` is the part of ``P0 u_j`` not annihilated by the operator, frequency
    by frequency, so ``A(P0 u_j) = A(V_j)`` holds exactly.  Reports the
    identity error, ``|chi V_j|_1``, the weak-(1,1) headline of ``T0[chi V_j]``,
    the remainder size, L1 increments of ``chi u_j`` and the aliasing share.
    """
    d = op.d
    p0 = np.asarray(p0, dtype=float).reshape(-1)
    if p0.shape != (op.m,):
        raise DimensionError(f"P0 must have length {op.m}")
    verdict = in_wave_cone(op, p0)
    if verdict.member:
        raise ScenarioContradictsHypothesis(
            f"P0 lies in the wave cone (residual {verdict.residual:.3g} at xi={verdict.best_xi.tolist()})"
        )
    reg = build_regularizer(op, p0)
    base = PeriodicField.zeros(d, 1, scenario.N)
    chi = cutoff(base)
    inner = np.linalg.norm(base.coords(), axis=-1) < 0.5
    proj = kernel_projector(op, base.frequencies())
    limit = None
    if scenario.kind == "smooth":
        limit = 1.0
    rows = []
    prev = None
    for j in scenario.js:
        nu = base.with_values(_scenario_density(scenario, base, j)[..., None])
        eps = min(1.0 / j, _scale(j))
        u = mollify(nu, MollifierSpec(scenario.mollifier, eps)).real
        p0u = u.with_values(u.values * p0)
        spec = p0u.spectrum()
        v = p0u.from_spectrum(spec - np.einsum("...ij,...j->...i", proj, spec)).real
        chi_u = u.with_values(u.values * chi[..., None])
        chi_v = v.with_values(v.values * chi[..., None])
        f, g, h, r = decomposition_terms(reg, chi_u, chi_v)
        recon = f.values + g.values + h.values
        err = float(np.abs(recon - chi_u.values).max() / max(np.abs(chi_u.values).max(), 1e-300))
        row = {
            "j": j,
            "epsilon": eps,
            "identity_error": err,
            "chiV_l1": chi_v.l1(),
            "T0_weak11": weak11_profile(f).headline,
            "R_l1": r.l1(),
            "aliasing": aliasing_fraction(chi_u),
        }
        if prev is not None:
            row["chiu_increment_l1"] = chi_u.with_values(chi_u.values - prev.values).l1()
        if limit is not None:
            row["dist_to_limit_l1"] = float(np.abs(u.values[..., 0][inner] - limit).sum() * u.cell_volume)
        rows.append(row)
        prev = chi_u
    ratios = [r["T0_weak11"] / r["chiV_l1"] for r in rows if r["chiV_l1"] > 0]
    return {
        "operator": op.label,
        "p0": [float(x) for x in p0],
        "p0_residual": float(verdict.residual),
        "scenario": scenario.kind,
        "N": scenario.N,
        "rows": rows,
        "violation_floor": float(min(r["chiV_l1"] for r in rows)),
        "weak11_constant_range": (float(min(ratios)), float(max(ratios))) if ratios else None,
    }


def bessel_lp_sweep(d: int, s: float, p: float, Ns=(32, 64, 128, 256), period: float = DEFAULT_PERIOD):
    """``|(Id - Delta)^(-s/2) delta_N|_p`` for a unit-mass one-cell spike at the origin."""
    out = []
    for N in Ns:
        f = PeriodicField.zeros(d, 1, N, period)
        vals = np.zeros((N,) * d + (1,))
        vals[(N // 2,) * d] = 1.0 / f.cell_volume
        out.append(bessel_potential(f.with_values(vals), s).real.lp_norm(p))
    return out


def spike_weak11_sequence(reg: Regularizer, direction, js=(0, 1, 2, 3), N: int = 64, width: float = 0.5):
    """Weak-(1,1) headline of ``T0[V_j]`` for bump spikes of mass ``2^-j``.

    Spike j has radius ``width * 2^(-j/2)`` and points along ``direction``.
    Returns rows ``(j, |V_j|_1, headline, headline / |V_j|_1)``.
    """
    e = np.asarray(direction, dtype=float).reshape(-1)
    if e.shape != (reg.op.m,):
        raise DimensionError(f"direction must have length {reg.op.m}")
    e = e / np.linalg.norm(e)
    base = PeriodicField.zeros(reg.op.d, 1, N)
    rows = []
    for j in js:
        spike = np.zeros((N,) * reg.op.d + (1,))
        spike[(N // 2,) * reg.op.d] = 1.0 / base.cell_volume
        bump = mollify(base.with_values(spike), MollifierSpec("bump", width * 2.0 ** (-j / 2))).real
        v = base.with_values(np.real(bump.values) * e * 2.0 ** (-j))
        head = weak11_profile(apply_multiplier(v, reg.T0)).headline
        rows.append((j, v.l1(), head, head / v.l1()))
    return rows
