"""Constant-coefficient linear PDE operators and their Fourier symbols.

An operator ``sum_alpha A_alpha d^alpha`` acting on R^m-valued fields in R^d
is stored as a table from multi-indices to real n x m matrices.  Symbols
carry the (2 pi i)^|alpha| factor that comes with the Fourier convention
``f^(xi) = int f(x) exp(-2 pi i x.xi) dx``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionError,
    OperatorIsZero,
    SpecFormatError,
    UnsupportedOrderZero,
)

SPEC_SCHEMA_VERSION = "operator-spec/1"

MultiIndex = tuple[int, ...]


def multi_index(entries: Iterable[int], d: int | None = None) -> MultiIndex:
    alpha = tuple(int(a) for a in entries)
    if any(a < 0 for a in alpha):
        raise DimensionError(f"multi-index entries must be non-negative: {alpha}")
    if d is not None and len(alpha) != d:
        raise DimensionError(f"multi-index {alpha} has length {len(alpha)}, expected {d}")
    return alpha


def unit_index(d: int, *axes: int) -> MultiIndex:
    """Multi-index of the derivative d_{axes[0]} d_{axes[1]} ... (0-based axes)."""
    alpha = [0] * d
    for ax in axes:
        alpha[ax] += 1
    return tuple(alpha)


def monomials(xi: np.ndarray, alphas: Sequence[MultiIndex]) -> np.ndarray:
    """Evaluate xi^alpha for a batch of frequencies.

    ``xi`` has shape (..., d); the result has shape (..., len(alphas)).
    Powers are formed by repeated multiplication so that zero and negative
    entries are exact.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.ones(xi.shape[:-1] + (len(alphas),))
    for t, alpha in enumerate(alphas):
        val = np.ones(xi.shape[:-1])
        for axis, power in enumerate(alpha):
            for _ in range(power):
                val = val * xi[..., axis]
        out[..., t] = val
    return out


@dataclass(frozen=True)
class PdeOperator:
    """``sum_{|alpha| <= k} A_alpha d^alpha`` with A_alpha real n x m.

    Terms are kept in lexicographic order of the multi-index so that
    serialization is deterministic.  Matrices are read-only copies.
    """

    d: int
    m: int
    n: int
    terms: tuple[tuple[MultiIndex, np.ndarray], ...]
    label: str = ""
    _order: int | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        nonzero = [sum(a) for a, mat in self.terms if np.any(mat != 0)]
        object.__setattr__(self, "_order", max(nonzero) if nonzero else None)

    @classmethod
    def from_terms(
        cls,
        d: int,
        m: int,
        n: int,
        terms: Mapping[Sequence[int], np.ndarray] | Iterable[tuple[Sequence[int], np.ndarray]],
        label: str = "",
    ) -> "PdeOperator":
        items = terms.items() if isinstance(terms, Mapping) else terms
        table: dict[MultiIndex, np.ndarray] = {}
        for alpha, mat in items:
            alpha = multi_index(alpha, d)
            mat = np.array(mat, dtype=float)
            if mat.shape != (n, m):
                raise DimensionError(
                    f"matrix for alpha={alpha} has shape {mat.shape}, expected {(n, m)}"
                )
            if alpha in table:
                table[alpha] = table[alpha] + mat
            else:
                table[alpha] = mat
        ordered = []
        for alpha in sorted(table):
            mat = table[alpha]
            mat.setflags(write=False)
            ordered.append((alpha, mat))
        return cls(d=d, m=m, n=n, terms=tuple(ordered), label=label)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PdeOperator):
            return NotImplemented
        if (self.d, self.m, self.n, self.label) != (other.d, other.m, other.n, other.label):
            return False
        if len(self.terms) != len(other.terms):
            return False
        return all(
            a1 == a2 and np.array_equal(m1, m2)
            for (a1, m1), (a2, m2) in zip(self.terms, other.terms)
        )

    def __hash__(self) -> int:
        return hash((self.d, self.m, self.n, self.label, tuple(a for a, _ in self.terms)))

    def __add__(self, other: "PdeOperator") -> "PdeOperator":
        if (self.d, self.m, self.n) != (other.d, other.m, other.n):
            raise DimensionError("operators act between different spaces")
        return PdeOperator.from_terms(
            self.d, self.m, self.n, list(self.terms) + list(other.terms),
            label=f"{self.label}+{other.label}",
        )

    @property
    def order(self) -> int:
        return order(self)

    def homogeneous_part(self, h: int) -> "PdeOperator":
        """The operator restricted to terms with |alpha| = h."""
        return PdeOperator.from_terms(
            self.d, self.m, self.n,
            [(a, mat) for a, mat in self.terms if sum(a) == h],
            label=f"{self.label}[{h}]",
        )

    def is_zero(self) -> bool:
        return self._order is None


def order(op: PdeOperator) -> int:
    """Largest |alpha| carrying a nonzero matrix."""
    if op._order is None:
        raise OperatorIsZero(f"operator {op.label!r} has no nonzero term")
    return op._order


def _check_xi(op: PdeOperator, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1:] != (op.d,):
        raise DimensionError(f"frequency has trailing shape {xi.shape[-1:]}, expected ({op.d},)")
    return xi


def _symbol_sum(op: PdeOperator, xi: np.ndarray, terms) -> np.ndarray:
    out = np.zeros(xi.shape[:-1] + (op.n, op.m), dtype=complex)
    if not terms:
        return out
    alphas = [a for a, _ in terms]
    mon = monomials(xi, alphas)
    for t, (alpha, mat) in enumerate(terms):
        factor = (2j * np.pi) ** sum(alpha)
        out = out + factor * mon[..., t, None, None] * mat
    return out


def full_symbol(op: PdeOperator, xi) -> np.ndarray:
    """``sum_{|alpha|<=k} (2 pi i)^|alpha| A_alpha xi^alpha``.

    Accepts a single frequency of shape (d,) or a batch (..., d).
    """
    xi = _check_xi(op, xi)
    return _symbol_sum(op, xi, op.terms)


def principal_symbol(op: PdeOperator, xi) -> np.ndarray:
    """Top-order part ``(2 pi i)^k sum_{|alpha|=k} A_alpha xi^alpha``."""
    xi = _check_xi(op, xi)
    k = order(op)
    return _symbol_sum(op, xi, [(a, mat) for a, mat in op.terms if sum(a) == k])


class PrincipalPolynomial:
    """Precomputed form of the principal symbol for fast batched evaluation.

    ``apply_norm(xi, v)`` returns ``|A^k(xi) v|`` for a batch of frequencies
    without materialising the n x m matrices.
    """

    def __init__(self, op: PdeOperator):
        self.op = op
        self.k = order(op)
        top = [(a, mat) for a, mat in op.terms if sum(a) == self.k]
        self.alphas = [a for a, _ in top]
        self.coeffs = np.stack([mat for _, mat in top])  # (T, n, m)
        self.scale = (2j * np.pi) ** self.k
        self._exps = np.array(self.alphas, dtype=int)
        self._max_power = int(self._exps.max()) if self._exps.size else 0

    def real_matrices(self, xi: np.ndarray) -> np.ndarray:
        """``sum A_alpha xi^alpha`` (real; the symbol divided by (2 pi i)^k)."""
        mon = monomials(xi, self.alphas)
        return np.einsum("...t,tnm->...nm", mon, self.coeffs)

    def matrices(self, xi: np.ndarray) -> np.ndarray:
        return self.scale * self.real_matrices(xi)

    def fast_monomials(self, xi: np.ndarray) -> np.ndarray:
        """``monomials`` for a (B, d) batch, vectorized over terms."""
        base = xi[:, None, :]
        out = np.ones((xi.shape[0],) + self._exps.shape)
        for p in range(self._max_power):
            out *= np.where(self._exps > p, base, 1.0)
        return np.prod(out, axis=-1)

    def bind(self, v: np.ndarray) -> np.ndarray:
        return self.coeffs @ v  # (T, n)

    def apply_norm(self, xi: np.ndarray, v: np.ndarray, bound: np.ndarray | None = None) -> np.ndarray:
        """``|A^k(xi) v|`` for a batch of xi of shape (B, d)."""
        cv = self.bind(v) if bound is None else bound
        mon = self.fast_monomials(np.atleast_2d(xi))
        return abs(self.scale) * np.linalg.norm(mon @ cv, axis=-1)


def augment_with_rhs(op: PdeOperator) -> PdeOperator:
    """Operator on (mu, sigma) encoding ``A mu = sigma`` as ``A~ (mu, sigma) = 0``.

    The sigma block enters through a zeroth-order ``-Id`` term, so for k >= 1
    the principal symbol kernel is ``Ker A^k(xi) x R^n``.
    """
    k = order(op)
    if k < 1:
        raise UnsupportedOrderZero("augmentation needs an operator of order >= 1")
    m2 = op.m + op.n
    terms = []
    for alpha, mat in op.terms:
        wide = np.zeros((op.n, m2))
        wide[:, : op.m] = mat
        terms.append((alpha, wide))
    rhs = np.zeros((op.n, m2))
    rhs[:, op.m :] = -np.eye(op.n)
    terms.append(((0,) * op.d, rhs))
    return PdeOperator.from_terms(op.d, m2, op.n, terms, label=f"{op.label}~rhs")


# ---------------------------------------------------------------------------
# operator spec files


def _fmt_float(x: float) -> str:
    return json.dumps(float(x))


def to_json(op: PdeOperator) -> str:
    """Canonical text of the operator spec file (stable byte-for-byte)."""
    lines = [
        "{",
        f'  "label": {json.dumps(op.label)},',
        f'  "d": {op.d},',
        f'  "m": {op.m},',
        f'  "n": {op.n},',
        '  "terms": [',
    ]
    body = []
    for alpha, mat in op.terms:
        rows = ", ".join("[" + ", ".join(_fmt_float(x) for x in row) + "]" for row in mat)
        body.append(f'    {{"alpha": [{", ".join(str(a) for a in alpha)}], "matrix": [{rows}]}}')
    lines.append(",\n".join(body))
    lines.append("  ]")
    lines.append("}")
    text = "\n".join(line for line in lines if line != "") + "\n"
    return text


def from_json(text: str) -> PdeOperator:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise SpecFormatError("top level: expected an object")
    for key in ("d", "m", "n", "terms"):
        if key not in raw:
            raise SpecFormatError(f"field {key!r}: missing")
    dims = {}
    for key in ("d", "m", "n"):
        val = raw[key]
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            raise SpecFormatError(f"field {key!r}: expected a positive integer, got {val!r}")
        dims[key] = val
    label = raw.get("label", "")
    if not isinstance(label, str):
        raise SpecFormatError("field 'label': expected a string")
    if not isinstance(raw["terms"], list):
        raise SpecFormatError("field 'terms': expected a list")
    terms = []
    for i, term in enumerate(raw["terms"]):
        where = f"terms[{i}]"
        if not isinstance(term, dict) or "alpha" not in term or "matrix" not in term:
            raise SpecFormatError(f"{where}: expected an object with 'alpha' and 'matrix'")
        alpha = term["alpha"]
        if (
            not isinstance(alpha, list)
            or len(alpha) != dims["d"]
            or not all(isinstance(a, int) and not isinstance(a, bool) and a >= 0 for a in alpha)
        ):
            raise SpecFormatError(f"{where}.alpha: expected {dims['d']} non-negative integers")
        mat = term["matrix"]
        if not isinstance(mat, list) or len(mat) != dims["n"]:
            raise SpecFormatError(f"{where}.matrix: expected {dims['n']} rows")
        for r, row in enumerate(mat):
            if not isinstance(row, list) or len(row) != dims["m"]:
                raise SpecFormatError(f"{where}.matrix[{r}]: expected {dims['m']} entries")
            if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in row):
                raise SpecFormatError(f"{where}.matrix[{r}]: entries must be numbers")
        terms.append((alpha, mat))
    return PdeOperator.from_terms(dims["d"], dims["m"], dims["n"], terms, label=label)


def load_operator(path) -> PdeOperator:
    with open(path, encoding="utf-8") as fh:
        return from_json(fh.read())


def save_operator(op: PdeOperator, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(to_json(op))
