"""Pointwise linear algebra of the twin-metric equation (h^-1 g)^2 = eps I.

Canonical forms, simultaneous congruence of a twin pair to
``(D_h, D_g)`` and the complex symmetric factorization ``C = N^T N`` used
in the almost-complex case.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.linalg

from .errors import (
    AlmostTangentError,
    DegeneracyError,
    NotAKPairError,
    ParityError,
    PreconditionError,
    SingularMatrixError,
)

DEFAULT_TOL = 1e-9


def _rel(residual: np.ndarray, scale: np.ndarray) -> float:
    return float(np.linalg.norm(residual) / max(np.linalg.norm(scale), 1e-300))


def _as_sym(a, name: str, tol: float = 1e-12) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    if _rel(a - a.T, a) > tol:
        raise PreconditionError(f"{name} is not symmetric", _rel(a - a.T, a))
    return 0.5 * (a + a.T)


def _require_nondegenerate(a: np.ndarray, name: str) -> None:
    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] <= s[0] * 1e-14:
        raise SingularMatrixError(f"{name} is singular (smallest singular value {s[-1]:.3e})")


def canonical_d(n: int, k: int) -> np.ndarray:
    """diag(-1 (k times), +1 (n - k times))."""
    return np.diag(np.r_[-np.ones(k), np.ones(n - k)])


def canonical_j(n: int) -> np.ndarray:
    """The standard complex structure [[0, I], [-I, 0]] on R^(2m)."""
    if n % 2:
        raise ParityError(f"no complex structure in odd dimension {n}")
    m = n // 2
    j = np.zeros((n, n))
    j[:m, m:] = np.eye(m)
    j[m:, :m] = -np.eye(m)
    return j


def canonical_kh(m: int) -> np.ndarray:
    return np.diag(np.r_[np.ones(m), -np.ones(m)])


def canonical_kg(m: int) -> np.ndarray:
    kg = np.zeros((2 * m, 2 * m))
    kg[:m, m:] = np.eye(m)
    kg[m:, :m] = np.eye(m)
    return kg


# ------------------------------------------------------------------ twins
def twin_from_k(h, K, epsilon: int, tol: float = DEFAULT_TOL) -> np.ndarray:
    """g = h K for a K-structure compatible with h."""
    h = _as_sym(h, "h")
    K = np.asarray(K, dtype=float)
    n = h.shape[0]
    _require_nondegenerate(h, "h")
    if epsilon not in (1, -1):
        raise ValueError("epsilon must be +1 or -1")
    r1 = _rel(K @ K - epsilon * np.eye(n), np.eye(n))
    if r1 > tol:
        raise PreconditionError(f"K^2 != {epsilon:+d} I", r1)
    r2 = _rel(K.T @ h @ K - epsilon * h, h)
    if r2 > tol:
        raise PreconditionError(f"K^T h K != {epsilon:+d} h (sigma mismatch)", r2)
    g = h @ K
    return 0.5 * (g + g.T)


def k_from_pair(h, g, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, float]:
    """K = h^-1 g and the multiple eps with K^2 = eps I."""
    h = _as_sym(h, "h")
    g = _as_sym(g, "g")
    if h.shape != g.shape:
        raise ValueError(f"h and g differ in shape: {h.shape} vs {g.shape}")
    _require_nondegenerate(h, "h")
    _require_nondegenerate(g, "g")
    n = h.shape[0]
    K = np.linalg.solve(h, g)
    K2 = K @ K
    eps = float(np.trace(K2) / n)
    dev = _rel(K2 - eps * np.eye(n), K2)
    # rounding in h^-1 g grows with cond(h) and with |K|^2 relative to |K^2|
    rounding = 100 * np.finfo(float).eps * np.linalg.cond(h) * np.linalg.norm(K, 2) ** 2
    if dev > max(tol, rounding / np.linalg.norm(K2)):
        raise NotAKPairError("(h^-1 g)^2 is not a multiple of the identity", dev)
    if n % 2 and eps < 0:
        raise ParityError(f"negative epsilon {eps} in odd dimension {n}")
    return K, eps


def rescale_to_canonical(h, g, epsilon: float) -> tuple[np.ndarray, np.ndarray, int]:
    """Scale g by 1/sqrt|eps| so that (h^-1 g')^2 = sign(eps) I."""
    if epsilon == 0:
        raise AlmostTangentError("epsilon = 0 gives an almost-tangent structure, which is not supported")
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float) / np.sqrt(abs(epsilon))
    return h, g, int(np.sign(epsilon))


def signature(h, tol: float = 1e-12) -> tuple[int, int]:
    """Numbers (p, q) of positive and negative eigenvalues."""
    h = _as_sym(h, "h", tol=1e-9)
    w = np.linalg.eigvalsh(h)
    scale = np.abs(w).max() if w.size else 1.0
    if np.abs(w).min() <= tol * scale:
        raise SingularMatrixError("signature of a singular matrix is undefined")
    return int((w > 0).sum()), int((w < 0).sum())


def determinant_law_residual(h, g, epsilon: float) -> float:
    """Relative deviation of (det g / det h)^2 from eps^n."""
    n = np.asarray(h).shape[0]
    ratio = (np.linalg.det(g) / np.linalg.det(h)) ** 2
    return abs(ratio - epsilon ** n) / abs(epsilon ** n)


# ------------------------------------------------------------- involutions
@dataclass
class InvolutionDecomposition:
    kind: Literal["product", "complex"]
    M: np.ndarray
    k: int | None = None

    def canonical(self) -> np.ndarray:
        n = self.M.shape[0]
        return canonical_d(n, self.k) if self.kind == "product" else canonical_j(n)

    def reconstruct(self) -> np.ndarray:
        return self.M @ self.canonical() @ np.linalg.inv(self.M)


def _eigenspace_basis(proj: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of range(proj), built from its pivot columns so
    that coordinate-aligned eigenspaces come back as unit vectors."""
    n = proj.shape[0]
    if np.linalg.norm(proj) <= tol:
        return np.zeros((n, 0))
    _, r, piv = scipy.linalg.qr(proj, pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int((diag > tol * max(diag[0], 1.0)).sum())
    cols = proj[:, np.sort(piv[:rank])]
    q, r = np.linalg.qr(cols)
    q = q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))
    return q


def involution_decompose(P, epsilon: int, tol: float = DEFAULT_TOL) -> InvolutionDecomposition:
    """Write P (with P^2 = eps I) as M D_k M^-1 or M J0 M^-1."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    res = _rel(P @ P - epsilon * np.eye(n), np.eye(n))
    if res > tol:
        raise PreconditionError(f"P^2 != {epsilon:+d} I", res)
    if epsilon == 1:
        minus = _eigenspace_basis(0.5 * (np.eye(n) - P), 1e-8)
        plus = _eigenspace_basis(0.5 * (np.eye(n) + P), 1e-8)
        if minus.shape[1] + plus.shape[1] != n:
            raise DegeneracyError("eigenspaces of the involution do not span R^n")
        return InvolutionDecomposition("product", np.hstack([minus, plus]), minus.shape[1])
    if epsilon == -1:
        if n % 2:
            raise ParityError(f"P^2 = -I is impossible in odd dimension {n}")
        return InvolutionDecomposition("complex", _complex_frame(P))
    raise ValueError("epsilon must be +1 or -1")


def _complex_frame(P: np.ndarray) -> np.ndarray:
    """M with P M = M J0, i.e. columns (a_1..a_m, P a_1..).

    a_j + i b_j runs over a basis of the +i eigenspace of P, taken from
    pivoted QR of the projector (I - iP)/2.  Then P a = -b and P b = a,
    which is exactly the column pairing J0 asks for.  Each basis vector is
    divided by its dominant entry, a complex rescaling that keeps the
    pairing; b is then recomputed as -P a, so P = J0 returns M = I exactly.
    """
    n = P.shape[0]
    m = n // 2
    proj = 0.5 * (np.eye(n) - 1j * P)
    q, r, _ = scipy.linalg.qr(proj, pivoting=True)
    if abs(r[m - 1, m - 1]) < 1e-8 * abs(r[0, 0]):
        raise DegeneracyError("+i eigenspace of P has dimension < n/2")
    V = q[:, :m].copy()
    for j in range(m):
        k = np.argmax(np.abs(V[:, j]).round(12))
        V[:, j] /= V[k, j]
    A = V.real
    return np.hstack([A, -P @ A])


# --------------------------------------------------------- Takagi factor
@dataclass
class TakagiFactor:
    C: np.ndarray
    N: np.ndarray
    method: str = "takagi"

    @property
    def residual(self) -> float:
        return _rel(self.N.T @ self.N - self.C, self.C)


def _takagi(C: np.ndarray):
    """C = U diag(s) U^T via the real symmetric embedding [[A, B], [B, -A]]."""
    m = C.shape[0]
    A, B = C.real, C.imag
    H = np.block([[A, B], [B, -A]])
    w, V = np.linalg.eigh(0.5 * (H + H.T))
    top = V[:, m:]
    U = top[:m] + 1j * top[m:]
    s = w[m:]
    # sign is the only freedom of a Takagi vector; make the dominant entry positive
    for j in range(m):
        k = np.argmax(np.abs(U[:, j]))
        ref = U[k, j].real if abs(U[k, j].real) > 1e-12 else U[k, j].imag
        if ref < 0:
            U[:, j] = -U[:, j]
    return U, s


def _complex_ldl_factor(C: np.ndarray) -> np.ndarray:
    """Unpivoted C = L D L^T, returning N = sqrt(D) L^T."""
    m = C.shape[0]
    A = C.astype(complex).copy()
    L = np.eye(m, dtype=complex)
    d = np.zeros(m, dtype=complex)
    for j in range(m):
        d[j] = A[j, j] - np.sum(L[j, :j] ** 2 * d[:j])
        if abs(d[j]) < 1e-14 * max(np.abs(C).max(), 1.0):
            raise DegeneracyError("zero pivot in complex LDL^T")
        for i in range(j + 1, m):
            L[i, j] = (A[i, j] - np.sum(L[i, :j] * L[j, :j] * d[:j])) / d[j]
    return np.sqrt(d)[:, None] * L.T


def takagi_like_factor(C, tol: float = DEFAULT_TOL) -> TakagiFactor:
    """N with N^T N = C for a nondegenerate complex symmetric C."""
    C = np.atleast_2d(np.asarray(C, dtype=complex))
    if C.shape[0] != C.shape[1]:
        raise ValueError("C must be square")
    if _rel(C - C.T, C) > 1e-12:
        raise PreconditionError("C is not symmetric", _rel(C - C.T, C))
    if np.linalg.svd(C, compute_uv=False)[-1] <= 1e-14 * max(np.abs(C).max(), 1e-300):
        raise SingularMatrixError("C is singular")
    C = 0.5 * (C + C.T)
    U, s = _takagi(C)
    N = np.sqrt(s)[:, None] * U.T
    fac = TakagiFactor(C, N)
    if fac.residual > tol:
        fac = TakagiFactor(C, _complex_ldl_factor(C), method="ldl")
    if fac.residual > tol:
        raise DegeneracyError(f"factorization residual {fac.residual:.3e} exceeds {tol}")
    return fac


# ------------------------------------------------------------ congruence
@dataclass
class CongruenceDecomposition:
    R: np.ndarray
    D_h: np.ndarray
    D_g: np.ndarray
    case_tag: Literal["product", "complex"]
    k: int | None = None
    internals: dict = field(default_factory=dict)

    def residuals(self, h, g) -> tuple[float, float]:
        h = np.asarray(h, dtype=float)
        g = np.asarray(g, dtype=float)
        return (_rel(h - self.R.T @ self.D_h @ self.R, h),
                _rel(g - self.R.T @ self.D_g @ self.R, g))


def _sylvester(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """a = S^T diag(+-1) S by pivoted LDL^T; returns (S, signs)."""
    n = a.shape[0]
    if n == 0:
        return np.zeros((0, 0)), np.zeros(0)
    lu, d, perm = scipy.linalg.ldl(a, lower=True)
    # d is block diagonal with 1x1 / 2x2 blocks; diagonalize it orthogonally
    w, Q = np.linalg.eigh(d)
    scale = np.abs(w).max()
    if np.abs(w).min() <= 1e-13 * scale:
        raise DegeneracyError("block lost rank during Sylvester diagonalization")
    S = np.sqrt(np.abs(w))[:, None] * (lu @ Q).T
    return S, np.sign(w)


def _involution_gate(h: np.ndarray, P: np.ndarray, tol: float) -> float:
    """Tolerance for P^2 = +-I that admits rounding in forming h^-1 g."""
    rounding = 100 * np.finfo(float).eps * np.linalg.cond(h) * np.linalg.norm(P, 2) ** 2
    return max(tol, rounding)


def simultaneous_congruence(h, g, tol: float = DEFAULT_TOL) -> CongruenceDecomposition:
    """Find R with h = R^T D_h R and g = R^T D_g R in canonical form.

    Product case ((h^-1 g)^2 = I): D_h, D_g are +-1 diagonals.
    Complex case ((h^-1 g)^2 = -I): D_h = diag(I, -I), D_g = [[0, I], [I, 0]].
    """
    h = _as_sym(h, "h")
    g = _as_sym(g, "g")
    if h.shape != g.shape:
        raise ValueError(f"h and g differ in shape: {h.shape} vs {g.shape}")
    n = h.shape[0]
    _require_nondegenerate(h, "h")
    P = np.linalg.solve(h, g)
    P2 = P @ P
    gate = _involution_gate(h, P, tol)
    if _rel(P2 - np.eye(n), np.eye(n)) <= gate:
        eps = 1
    elif _rel(P2 + np.eye(n), np.eye(n)) <= gate:
        eps = -1
    else:
        dev = min(_rel(P2 - np.eye(n), np.eye(n)), _rel(P2 + np.eye(n), np.eye(n)))
        raise PreconditionError("(h^-1 g)^2 is neither I nor -I", dev)
    inv = involution_decompose(P, eps, tol=gate)
    M = inv.M
    ht = M.T @ h @ M
    ht = 0.5 * (ht + ht.T)

    if eps == 1:
        k = inv.k
        D = canonical_d(n, k)
        off = _rel(ht[:k, k:], ht)
        if off > 1e-6:
            raise DegeneracyError(f"transformed h does not commute with D_k (off-block {off:.3e})")
        S1, d1 = _sylvester(ht[:k, :k])
        S2, d2 = _sylvester(ht[k:, k:])
        S = scipy.linalg.block_diag(S1, S2)
        D_h = np.diag(np.r_[d1, d2])
        # g~ = h~ D_k, so the second factor keeps its sign and the first flips
        D_g = D_h @ D
        R = np.linalg.solve(M.T, S.T).T  # S M^-1
        out = CongruenceDecomposition(R, D_h, D_g, "product", k,
                                      {"M": M, "S": S, "h_tilde": ht})
    else:
        m = n // 2
        a = ht[:m, :m]
        b = 0.5 * (ht[:m, m:] + ht[m:, :m])
        anti = _rel(ht[m:, m:] + a, ht)
        if anti > 1e-6:
            raise DegeneracyError(f"transformed h does not anticommute with J0 ({anti:.3e})")
        fac = takagi_like_factor(a + 1j * b, tol=max(tol, 1e-9))
        s, u = fac.N.real, fac.N.imag
        S = np.block([[s, u], [-u, s]])
        R = np.linalg.solve(M.T, S.T).T
        out = CongruenceDecomposition(R, canonical_kh(m), canonical_kg(m), "complex", None,
                                      {"M": M, "S": S, "a": a, "b": b, "s": s, "u": u,
                                       "N": fac.N, "h_tilde": ht})
    rh, rg = out.residuals(h, g)
    if max(rh, rg) > tol:
        raise DegeneracyError(f"reconstruction residual {max(rh, rg):.3e} exceeds {tol}")
    return out
