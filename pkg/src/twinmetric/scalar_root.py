"""Roots of the fundamental scalar equation f'(S) S - (n/4) f(S) = 0.

``f`` is a real polynomial with ascending coefficients.  Each real root c
with f'(c) != 0 selects eps = c / n = f(c) / (4 f'(c)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DegenerateRootError

GCD_TOL = 1e-8
DEGENERATE_TOL = 1e-10


@dataclass(frozen=True)
class LagrangianSpec:
    coefficients: tuple[float, ...]  # ascending degree
    n: int

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if not coeffs or not any(coeffs):
            raise ValueError("f must not be the zero polynomial")
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"dimension must be an integer n >= 3, got {self.n}")

    def f(self, s):
        return P.polyval(s, self.coefficients)

    def f_prime(self, s):
        return P.polyval(s, P.polyder(self.coefficients))

    def f_second(self, s):
        return P.polyval(s, P.polyder(self.coefficients, 2))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))


@dataclass(frozen=True)
class Root:
    c: float
    multiplicity: int
    f_prime_at_c: float
    epsilon: float
    admissible: bool
    almost_tangent: bool = False


@dataclass
class RootReport:
    spec: LagrangianSpec
    roots: list[Root] = field(default_factory=list)
    identically_degenerate: bool = False

    @property
    def admissible(self) -> list[Root]:
        return [r for r in self.roots if r.admissible]


def phi_coefficients(spec: LagrangianSpec) -> np.ndarray:
    """Ascending coefficients of f'(S) S - (n/4) f(S): a_k (k - n/4)."""
    a = np.asarray(spec.coefficients)
    return a * (np.arange(len(a)) - spec.n / 4.0)


def _trim(c: np.ndarray, tol: float) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    scale = max(np.abs(c).max(), 1e-300)
    nz = np.nonzero(np.abs(c) > tol * scale)[0]
    return c[: nz[-1] + 1] if nz.size else np.zeros(1)


def _degree(c: np.ndarray) -> int:
    return len(c) - 1 if np.any(c) else -1


def poly_gcd(a: np.ndarray, b: np.ndarray, tol: float = GCD_TOL) -> np.ndarray:
    """Monic gcd by the Euclidean algorithm with a relative remainder cutoff."""
    a = _trim(a, tol)
    b = _trim(b, tol)
    while _degree(b) > 0:
        _, r = P.polydiv(a, b)
        r = np.atleast_1d(r)
        if np.linalg.norm(r) <= tol * max(np.linalg.norm(a), 1e-300):
            break
        a, b = b, _trim(r, tol)
        if _degree(b) == 0:
            return np.ones(1)
    if _degree(b) <= 0:
        return np.ones(1)
    return b / b[-1]


def _real_roots(c: np.ndarray) -> list[float]:
    c = _trim(c, 1e-14)
    if _degree(c) < 1:
        return []
    z = P.polyroots(c)
    scale = max(1.0, np.abs(z).max())
    real = sorted(float(r.real) for r in z if abs(r.imag) <= 1e-7 * scale)
    # Newton polish on the square-free polynomial
    dc = P.polyder(c)
    out = []
    for r in real:
        for _ in range(3):
            d = P.polyval(r, dc)
            if d == 0:
                break
            r = r - P.polyval(r, c) / d
        out.append(r)
    return out


def _multiplicity(c0: float, chain: list[np.ndarray]) -> int:
    """Number of polynomials in the gcd chain that vanish at c0."""
    m = 0
    for poly in chain:
        if _degree(poly) < 1:
            break
        scale = max(np.abs(poly).sum() * max(1.0, abs(c0)) ** (len(poly) - 1), 1e-300)
        if abs(P.polyval(c0, poly)) <= 1e-6 * scale:
            m += 1
        else:
            break
    return max(m, 1)


def classify_roots(spec: LagrangianSpec) -> RootReport:
    """All real roots of phi with multiplicities and admissibility."""
    phi = phi_coefficients(spec)
    if np.abs(phi).max() <= 1e-12 * spec.norm:
        return RootReport(spec, [], identically_degenerate=True)
    phi = _trim(phi, 1e-14)
    # gcd chain phi, gcd(phi, phi'), ... ; the first quotient is square-free
    chain = [phi]
    while _degree(chain[-1]) > 0:
        g = poly_gcd(chain[-1], P.polyder(chain[-1]))
        if _degree(g) < 1:
            break
        chain.append(g)
    if len(chain) > 1:
        squarefree, _ = P.polydiv(phi, chain[1])
    else:
        squarefree = phi
    roots = []
    for c in _real_roots(squarefree):
        c = float(c)
        mult = _multiplicity(c, chain)
        fp = float(spec.f_prime(c))
        degenerate = abs(fp) <= DEGENERATE_TOL * spec.norm
        tangent = abs(c) <= 1e-12
        if tangent:
            c = 0.0
        roots.append(Root(
            c=c,
            multiplicity=mult,
            f_prime_at_c=fp,
            epsilon=c / spec.n,
            # eps = 0 is the almost-tangent case, never fed to the pipeline
            admissible=(mult == 1 and not degenerate and not tangent),
            almost_tangent=tangent,
        ))
    return RootReport(spec, roots)


def epsilon_of_root(c: float, spec: LagrangianSpec, tol: float = 1e-9) -> float:
    """eps = c / n, cross-checked against f(c) / (4 f'(c))."""
    fp = float(spec.f_prime(c))
    if abs(fp) <= DEGENERATE_TOL * spec.norm:
        raise DegenerateRootError(f"f'({c}) = {fp:.3e}: root is degenerate")
    eps = c / spec.n
    other = float(spec.f(c)) / (4.0 * fp)
    if abs(other - eps) > tol * max(abs(eps), 1.0):
        raise DegenerateRootError(
            f"f(c)/4f'(c) = {other!r} disagrees with c/n = {eps!r}; c is not a root"
        )
    return eps


def quadratic_family(n: int, c0: float) -> LagrangianSpec:
    """f(S) = (n S + c0 (8 - n))^2, the quadratic family with root S = c0."""
    a = c0 * (8 - n)
    return LagrangianSpec((a * a, 2 * a * n, n * n), n)
