"""Truncated multivariate Taylor arithmetic on numpy tensors.

A :class:`Jet` holds, for every component of a tensor, the Taylor
coefficients of that component around a base point, up to a fixed total
degree.  Coefficients live on the last axis and are ordered by a graded
monomial basis, so lowering the order is a slice.

Differentiation is exact on the truncated polynomial: ``d/dx_i`` of an
order-``K`` jet is an order ``K - 1`` jet.  This is what lets curvature
(second derivatives of the metric) and its covariant derivative (third
derivatives) be computed without finite differences.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class Basis:
    nvars: int
    order: int
    monomials: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return len(self.monomials)


@lru_cache(maxsize=None)
def basis(nvars: int, order: int) -> Basis:
    monos: list[tuple[int, ...]] = []
    for deg in range(order + 1):
        # lexicographically descending within each degree: x0^2, x0 x1, ...
        block = [m for m in itertools.product(range(deg + 1), repeat=nvars) if sum(m) == deg]
        block.sort(reverse=True)
        monos.extend(block)
    return Basis(nvars, order, tuple(monos))


@lru_cache(maxsize=None)
def _index(nvars: int, order: int) -> dict[tuple[int, ...], int]:
    return {m: i for i, m in enumerate(basis(nvars, order).monomials)}


@lru_cache(maxsize=None)
def _mul_table(nvars: int, order: int):
    """Pairs (i, j) whose product monomial has degree <= order, and a
    (pairs, size) scatter matrix mapping pair products to output slots."""
    b = basis(nvars, order)
    idx = _index(nvars, order)
    left, right, out = [], [], []
    for i, mi in enumerate(b.monomials):
        for j, mj in enumerate(b.monomials):
            if sum(mi) + sum(mj) > order:
                continue
            left.append(i)
            right.append(j)
            out.append(idx[tuple(a + c for a, c in zip(mi, mj))])
    scatter = np.zeros((len(out), b.size))
    scatter[np.arange(len(out)), out] = 1.0
    return np.array(left), np.array(right), scatter


@lru_cache(maxsize=None)
def _deriv_table(nvars: int, order: int, var: int):
    """Source slots and factors for d/dx_var, order -> order - 1."""
    lower = basis(nvars, order - 1)
    idx = _index(nvars, order)
    src, fac = [], []
    for m in lower.monomials:
        up = list(m)
        up[var] += 1
        src.append(idx[tuple(up)])
        fac.append(float(up[var]))
    return np.array(src), np.array(fac)


class Jet:
    """Tensor of truncated Taylor polynomials in ``nvars`` displacements."""

    __array_priority__ = 100

    def __init__(self, coef: np.ndarray, nvars: int, order: int):
        coef = np.asarray(coef)
        if coef.shape[-1] != basis(nvars, order).size:
            raise ValueError("coefficient axis does not match basis size")
        self.coef = coef
        self.nvars = nvars
        self.order = order

    # construction -----------------------------------------------------
    @classmethod
    def constant(cls, value, nvars: int, order: int, dtype=None) -> "Jet":
        value = np.asarray(value, dtype=dtype)
        coef = np.zeros(value.shape + (basis(nvars, order).size,), dtype=value.dtype)
        coef[..., 0] = value
        return cls(coef, nvars, order)

    @classmethod
    def variable(cls, value, var: int, nvars: int, order: int, dtype=float) -> "Jet":
        jet = cls.constant(np.asarray(value, dtype=dtype), nvars, order)
        if order >= 1:
            jet.coef[..., 1 + var] = 1.0
        return jet

    @classmethod
    def stack(cls, jets, axis: int = 0) -> "Jet":
        jets = list(jets)
        order = min(j.order for j in jets)
        nvars = jets[0].nvars
        coefs = [j.truncate(order).coef for j in jets]
        dtype = np.result_type(*coefs)
        if axis < 0:
            axis -= 1
        return cls(np.stack([c.astype(dtype) for c in coefs], axis=axis), nvars, order)

    # views ------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.coef.shape[:-1]

    @property
    def dtype(self):
        return self.coef.dtype

    @property
    def value(self) -> np.ndarray:
        return self.coef[..., 0]

    def gradient(self) -> np.ndarray:
        """First derivatives, derivative index last."""
        if self.order < 1:
            raise ValueError("jet of order 0 carries no gradient")
        return self.coef[..., 1 : 1 + self.nvars]

    def hessian(self) -> np.ndarray:
        """Second derivatives, two derivative indices last."""
        if self.order < 2:
            raise ValueError("jet of order < 2 carries no Hessian")
        n = self.nvars
        idx = _index(n, self.order)
        out = np.zeros(self.shape + (n, n), dtype=self.dtype)
        for i in range(n):
            for j in range(i, n):
                m = [0] * n
                m[i] += 1
                m[j] += 1
                c = self.coef[..., idx[tuple(m)]]
                if i == j:
                    out[..., i, i] = 2.0 * c
                else:
                    out[..., i, j] = c
                    out[..., j, i] = c
        return out

    def truncate(self, order: int) -> "Jet":
        if order == self.order:
            return self
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        size = basis(self.nvars, order).size
        return Jet(self.coef[..., :size], self.nvars, order)

    def real(self) -> "Jet":
        return Jet(self.coef.real.copy(), self.nvars, self.order)

    def imag(self) -> "Jet":
        return Jet(self.coef.imag.copy(), self.nvars, self.order)

    def conj(self) -> "Jet":
        return Jet(self.coef.conj(), self.nvars, self.order)

    def __getitem__(self, key) -> "Jet":
        # indexes tensor axes only; the coefficient axis is never addressed
        return Jet(self.coef[key], self.nvars, self.order)

    @property
    def T(self) -> "Jet":
        nd = self.coef.ndim
        axes = list(range(nd - 1))[::-1] + [nd - 1]
        return Jet(self.coef.transpose(axes), self.nvars, self.order)

    def transpose(self, *axes: int) -> "Jet":
        return Jet(self.coef.transpose(*axes, self.coef.ndim - 1), self.nvars, self.order)

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, nvars={self.nvars}, order={self.order})"

    # arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets over different variable sets")
            return other
        return Jet.constant(other, self.nvars, self.order)

    def _align(self, other):
        other = self._coerce(other)
        order = min(self.order, other.order)
        return self.truncate(order), other.truncate(order), order

    def __add__(self, other):
        a, b, order = self._align(other)
        return Jet(a.coef + b.coef, self.nvars, order)

    __radd__ = __add__

    def __sub__(self, other):
        a, b, order = self._align(other)
        return Jet(a.coef - b.coef, self.nvars, order)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Jet(-self.coef, self.nvars, self.order)

    def __mul__(self, other):
        if np.isscalar(other):
            return Jet(self.coef * other, self.nvars, self.order)
        a, b, order = self._align(other)
        left, right, scatter = _mul_table(self.nvars, order)
        prod = a.coef[..., left] * b.coef[..., right]
        return Jet(prod @ scatter, self.nvars, order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return Jet(self.coef / other, self.nvars, self.order)
        return self * self._coerce(other).reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)):
            raise TypeError("jets support integer powers only")
        if k < 0:
            return (self ** (-k)).reciprocal()
        result = Jet.constant(np.ones(self.shape, dtype=self.dtype), self.nvars, self.order)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def series(self, taylor_coeffs) -> "Jet":
        """Compose elementwise with a univariate function given its Taylor
        coefficients ``c_k`` about this jet's value: sum c_k * delta**k."""
        delta = Jet(self.coef.copy(), self.nvars, self.order)
        delta.coef[..., 0] = 0
        coeffs = list(taylor_coeffs)
        dtype = np.result_type(self.coef, *[np.asarray(c) for c in coeffs])
        out = Jet.constant(np.asarray(coeffs[0], dtype=dtype) * np.ones(self.shape, dtype=dtype),
                           self.nvars, self.order)
        power = None
        for k in range(1, self.order + 1):
            power = delta if power is None else power * delta
            out = out + power * coeffs[k]
        return out

    def reciprocal(self) -> "Jet":
        a = self.value
        if np.any(a == 0):
            raise ZeroDivisionError("reciprocal of a jet with zero value")
        coeffs = [(-1.0) ** k / a ** (k + 1) for k in range(self.order + 1)]
        return self.series(coeffs)

    # calculus ---------------------------------------------------------
    def d(self, var: int) -> "Jet":
        if self.order < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = _deriv_table(self.nvars, self.order, var)
        return Jet(self.coef[..., src] * fac, self.nvars, self.order - 1)

    def partials(self) -> "Jet":
        """All first partials, derivative index placed first."""
        return Jet.stack([self.d(i) for i in range(self.nvars)], axis=0)


def einsum(subscripts: str, *operands) -> Jet:
    """``np.einsum`` over tensor indices with polynomial products on the
    coefficient axis.  Plain arrays are treated as constants."""
    jets = [op for op in operands if isinstance(op, Jet)]
    if not jets:
        raise TypeError("einsum needs at least one Jet operand")
    nvars = jets[0].nvars
    order = min(j.order for j in jets)
    ins, out = subscripts.replace(" ", "").split("->")
    terms = ins.split(",")
    if len(terms) != len(operands):
        raise ValueError("subscript count does not match operands")
    free = next(c for c in "zyxwvutsrqponmlkjihgfedcbaZYXWVUTSRQPONMLKJIHGFEDCBA"
                if c not in subscripts)

    jet_terms, jet_ops, const_terms, const_ops = [], [], [], []
    for term, op in zip(terms, operands):
        if isinstance(op, Jet):
            jet_terms.append(term)
            jet_ops.append(op.truncate(order))
        else:
            const_terms.append(term)
            const_ops.append(np.asarray(op))

    # contract constants into the first jet
    acc_term = jet_terms[0]
    acc = jet_ops[0].coef
    if const_ops:
        needed = set(out) | set("".join(jet_terms[1:]))
        keep = "".join(c for c in dict.fromkeys(acc_term + "".join(const_terms)) if c in needed)
        spec = ",".join([acc_term + free] + const_terms) + "->" + keep + free
        acc = np.einsum(spec, acc, *const_ops)
        acc_term = keep

    left, right, scatter = _mul_table(nvars, order)
    for pos in range(1, len(jet_terms)):
        term, op = jet_terms[pos], jet_ops[pos]
        needed = set(out) | set("".join(jet_terms[pos + 1:]))
        keep = "".join(c for c in dict.fromkeys(acc_term + term) if c in needed)
        spec = f"{acc_term}{free},{term}{free}->{keep}{free}"
        acc = np.einsum(spec, acc[..., left], op.coef[..., right]) @ scatter
        acc_term = keep

    final = np.einsum(f"{acc_term}{free}->{out}{free}", acc)
    return Jet(final, nvars, order)


def inv(mat: Jet) -> Jet:
    """Inverse of a square matrix jet via the nilpotent Neumann series."""
    a0 = mat.value
    a0_inv = np.linalg.inv(a0)
    delta = Jet(mat.coef.copy(), mat.nvars, mat.order)
    delta.coef[..., 0] = 0
    step = -einsum("ij,jk->ik", a0_inv, delta)
    result = Jet.constant(a0_inv, mat.nvars, mat.order)
    term = result
    for _ in range(mat.order):
        term = einsum("ij,jk->ik", step, term)
        result = result + term
    return result


def exp(x: Jet) -> Jet:
    a = np.exp(x.value)
    return x.series([a / math.factorial(k) for k in range(x.order + 1)])


def det(mat: Jet) -> Jet:
    """Determinant of a square matrix jet."""
    a0 = mat.value
    d0 = np.linalg.det(a0)
    if d0 == 0:
        raise ZeroDivisionError("singular matrix jet")
    x = einsum("ij,jk->ik", np.linalg.inv(a0), mat - a0)
    trace = Jet.constant(np.asarray(0.0, dtype=x.dtype), mat.nvars, mat.order)
    power = None
    for k in range(1, mat.order + 1):
        power = x if power is None else einsum("ij,jk->ik", power, x)
        trace = trace + einsum("ii->", power) * ((-1.0) ** (k + 1) / k)
    return exp(trace) * d0


def sqrt_abs_det(mat: Jet) -> Jet:
    """|det|^(1/2) of a real matrix jet; the density factor of a metric."""
    d = det(mat)
    sign = np.sign(d.value)
    return power_real(d * float(sign), 0.5)


def power_real(x: Jet, p: float) -> Jet:
    """x**p for a jet with positive value and real exponent."""
    a = x.value
    coeffs = []
    c = np.ones_like(a)
    for k in range(x.order + 1):
        coeffs.append(c * a ** (p - k))
        c = c * (p - k) / (k + 1)
    return x.series(coeffs)
