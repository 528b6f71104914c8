"""2x2 complex matrix kernel with sl2(C) spectral conventions.

Matrices are plain ``numpy`` arrays of shape ``(..., 2, 2)`` and dtype
``complex128``; every function broadcasts over leading axes so the same
code serves a single family and a batch of Monte Carlo paths.

The spectral convention for a traceless, diagonalizable ``X`` is

    X = -G @ diag(s, -s) @ inv(G),   Re(s) >= 0,  Im(s) >= 0 if Re(s) == 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import NotDiagonalizable, ZeroMatrix

Mat2C = NDArray[np.complex128]

IDENTITY: Mat2C = np.eye(2, dtype=complex)
ZERO: Mat2C = np.zeros((2, 2), dtype=complex)

SL2_TOL = 1e-12
NILPOTENT_TOL = 1e-12
ZERO_TOL = 1e-14


def mat2c(x: ArrayLike) -> Mat2C:
    """Coerce to a finite complex 2x2 (or batched) array."""
    out = np.asarray(x, dtype=complex)
    if out.shape[-2:] != (2, 2):
        raise ValueError(f"expected trailing shape (2, 2), got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError("matrix entries must be finite")
    return out


def diag(a: complex, b: complex) -> Mat2C:
    return np.array([[a, 0], [0, b]], dtype=complex)


def frobenius(x: Mat2C) -> NDArray[np.float64]:
    return np.sqrt(np.sum(np.abs(x) ** 2, axis=(-2, -1)))


def trace(x: Mat2C) -> NDArray[np.complex128] | complex:
    return x[..., 0, 0] + x[..., 1, 1]


def is_sl2(x: Mat2C, tol: float = SL2_TOL) -> bool:
    """True when every matrix in ``x`` is traceless to scale-relative ``tol``."""
    return bool(np.all(np.abs(trace(x)) <= tol * np.maximum(1.0, frobenius(x))))


def commutator(x: Mat2C, y: Mat2C) -> Mat2C:
    return x @ y - y @ x


def trace_product(x: Mat2C, y: Mat2C):
    """Tr(XY) without forming the product."""
    return np.einsum("...ab,...ba->...", x, y)


def det2(x: Mat2C):
    return x[..., 0, 0] * x[..., 1, 1] - x[..., 0, 1] * x[..., 1, 0]


def inv2(x: Mat2C) -> Mat2C:
    d = det2(x)
    out = np.empty_like(x)
    out[..., 0, 0] = x[..., 1, 1]
    out[..., 1, 1] = x[..., 0, 0]
    out[..., 0, 1] = -x[..., 0, 1]
    out[..., 1, 0] = -x[..., 1, 0]
    return out / np.asarray(d)[..., None, None]


def expm_sl2(x: Mat2C) -> Mat2C:
    """Matrix exponential of a traceless 2x2 matrix, closed form.

    Uses X^2 = mu^2 Id with mu^2 = -det X, so exp(X) = cosh(mu) Id + sinh(mu)/mu X.
    """
    mu = np.sqrt(-det2(x) + 0j)
    small = np.abs(mu) < 1e-8
    safe = np.where(small, 1.0, mu)
    c = np.where(small, 1.0 + mu**2 / 2, np.cosh(safe))
    sc = np.where(small, 1.0 + mu**2 / 6, np.sinh(safe) / safe)
    return c[..., None, None] * IDENTITY + sc[..., None, None] * x


@dataclass(frozen=True)
class SpectralPair:
    s: complex
    G: Mat2C
    D: Mat2C


def _branch(s: complex) -> complex:
    # principal sqrt already has Re >= 0; only the Re == 0 tie needs care
    if s.real < 0 or (s.real == 0 and s.imag < 0):
        return -s
    return s


def _eigvec(x: Mat2C, mu: complex) -> NDArray[np.complex128]:
    a, b, c = x[0, 0], x[0, 1], x[1, 0]
    v1 = np.array([b, mu - a])
    v2 = np.array([mu + a, c])
    v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def eig_sl2(x: ArrayLike) -> SpectralPair:
    """Diagonalize a traceless 2x2 matrix in the ``X = -G D G^-1`` convention."""
    x = mat2c(x)
    norm = float(frobenius(x))
    if norm < ZERO_TOL:
        raise ZeroMatrix("cannot diagonalize the zero matrix")
    s = _branch(complex(np.sqrt(complex(-det2(x)))))
    if abs(s) < NILPOTENT_TOL * norm:
        raise NotDiagonalizable("matrix is nilpotent to tolerance")
    # first column: eigenvalue -s, second: +s
    g = np.column_stack([_eigvec(x, -s), _eigvec(x, s)])
    return SpectralPair(s=s, G=g, D=diag(s, -s))


def birkhoff_s(x: Mat2C) -> complex:
    """Branch-fixed eigenvalue s of a traceless matrix, 0 for the zero matrix."""
    if float(frobenius(x)) < ZERO_TOL:
        return 0j
    return _branch(complex(np.sqrt(complex(-det2(x)))))
