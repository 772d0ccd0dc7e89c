"""Pfaffians of complex antisymmetric matrices.

The fast path eliminates one 2x2 diagonal block per step: the pair (p, q)
with the largest ``|x_pq|`` is moved to the top-left corner by symmetric
transpositions, its entry is recorded as a factor, and the remaining
matrix is replaced by the antisymmetric Schur complement

    C + B^T A^{-1} B,    A = [[0, x], [-x, 0]].

Each nontrivial symmetric transposition flips the sign of the Pfaffian,
so a parity accumulator is carried alongside the product of pivots.

``pfaffian_reference`` is a first-row expansion used only as an oracle.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = [
    "SkewMatrix",
    "SingularPivotError",
    "pfaffian_fast",
    "pfaffian_batch",
    "pfaffian_reference",
    "schur_step",
    "SKEW_TOL",
    "SINGULAR_RTOL",
    "REFERENCE_MAX_DIM",
]

SKEW_TOL = 1e-13
SINGULAR_RTOL = 1e-14
REFERENCE_MAX_DIM = 12


class SingularPivotError(ValueError):
    """Raised when a Schur step is requested on a (numerically) zero pivot."""


class SkewMatrix:
    """Even-dimensional complex antisymmetric matrix.

    Construction checks ``x[a, b] == -x[b, a]`` to within ``SKEW_TOL``
    (scaled by the largest entry when that exceeds one).
    """

    __slots__ = ("entries",)

    def __init__(self, entries, check: bool = True):
        x = np.array(entries, dtype=np.complex128, copy=True)
        if x.ndim != 2 or x.shape[0] != x.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {x.shape}")
        if check and x.size:
            scale = max(1.0, float(np.max(np.abs(x))))
            err = float(np.max(np.abs(x + x.T)))
            if err > SKEW_TOL * scale:
                raise ValueError(f"matrix is not antisymmetric (max |x + x^T| = {err:.3e})")
        x.setflags(write=False)
        self.entries = x

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __repr__(self) -> str:
        return f"SkewMatrix(dim={self.dim})"


def _as_array(x) -> np.ndarray:
    if isinstance(x, SkewMatrix):
        return x.entries
    return SkewMatrix(x).entries


@njit(cache=True)
def _pfaffian_inplace(a):
    """Pfaffian of ``a``; ``a`` is overwritten."""
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    amax = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            v = abs(a[i, j])
            if v > amax:
                amax = v
    if amax == 0.0:
        return 0.0 + 0.0j
    thresh = SINGULAR_RTOL * amax
    result = 1.0 + 0.0j
    for k in range(0, n - 1, 2):
        # full pivot search over the active upper triangle
        best = -1.0
        p = k
        q = k + 1
        for i in range(k, n):
            for j in range(i + 1, n):
                v = abs(a[i, j])
                if v > best:
                    best = v
                    p = i
                    q = j
        if best < thresh:
            return 0.0 + 0.0j
        if p != k:
            for c in range(n):
                tmp = a[k, c]
                a[k, c] = a[p, c]
                a[p, c] = tmp
            for r in range(n):
                tmp = a[r, k]
                a[r, k] = a[r, p]
                a[r, p] = tmp
            result = -result
            if q == k:
                q = p
        if q != k + 1:
            for c in range(n):
                tmp = a[k + 1, c]
                a[k + 1, c] = a[q, c]
                a[q, c] = tmp
            for r in range(n):
                tmp = a[r, k + 1]
                a[r, k + 1] = a[r, q]
                a[r, q] = tmp
            result = -result
        piv = a[k, k + 1]
        result *= piv
        inv = 1.0 / piv
        for i in range(k + 2, n):
            u0 = a[k, i] * inv
            u1 = a[k + 1, i] * inv
            for j in range(i + 1, n):
                v = a[i, j] + u1 * a[k, j] - u0 * a[k + 1, j]
                a[i, j] = v
                a[j, i] = -v
    return result


@njit(cache=True)
def _pfaffian_stack(stack, out):
    work = np.empty(stack.shape[1:], dtype=np.complex128)
    for b in range(stack.shape[0]):
        work[:, :] = stack[b]
        out[b] = _pfaffian_inplace(work)


def pfaffian_fast(x) -> complex:
    """Pfaffian by pivoted 2x2 block Schur elimination.

    Parameters
    ----------
    x : SkewMatrix or array_like
        Even-dimensional antisymmetric matrix.

    Returns
    -------
    complex
        ``Pf(x)``; exactly zero when every remaining pivot falls below
        ``SINGULAR_RTOL`` times the largest entry.
    """
    a = _as_array(x)
    if a.shape[0] % 2:
        raise ValueError(f"Pfaffian undefined for odd dimension {a.shape[0]}")
    return complex(_pfaffian_inplace(np.array(a, dtype=np.complex128)))


def pfaffian_batch(stack: np.ndarray) -> np.ndarray:
    """Pfaffians of a stack of antisymmetric matrices, shape ``(B, d, d)``.

    No skew-symmetry check is made; callers assemble the stack themselves.
    """
    stack = np.ascontiguousarray(stack, dtype=np.complex128)
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise ValueError(f"expected shape (B, d, d), got {stack.shape}")
    if stack.shape[1] % 2:
        raise ValueError(f"Pfaffian undefined for odd dimension {stack.shape[1]}")
    out = np.empty(stack.shape[0], dtype=np.complex128)
    _pfaffian_stack(stack, out)
    return out


def schur_step(x, pivot_pair: tuple[int, int]) -> tuple[complex, SkewMatrix]:
    """One elimination step on the pair ``pivot_pair`` (0-based, p != q).

    Returns the signed factor and the antisymmetric Schur complement on the
    remaining indices, kept in their original relative order, such that
    ``Pf(x) == factor * Pf(remainder)``.
    """
    a = _as_array(x)
    n = a.shape[0]
    p, q = pivot_pair
    if p == q or not (0 <= p < n and 0 <= q < n):
        raise ValueError(f"invalid pivot pair {pivot_pair} for dimension {n}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    piv = a[p, q]
    if abs(piv) <= SINGULAR_RTOL * scale or piv == 0:
        raise SingularPivotError(f"pivot x[{p},{q}] = {piv} is numerically zero")
    rest = [i for i in range(n) if i != p and i != q]
    # moving p then q to the front of the ordering: sign of that permutation
    order = [p, q] + rest
    sign = _permutation_sign(order)
    b = a[np.ix_([p, q], rest)]
    c = a[np.ix_(rest, rest)]
    s = c + (np.outer(b[1], b[0]) - np.outer(b[0], b[1])) / piv
    s = 0.5 * (s - s.T)
    return complex(sign * piv), SkewMatrix(s, check=False)


def _permutation_sign(order) -> int:
    seen = [False] * len(order)
    sign = 1
    for start in range(len(order)):
        if seen[start]:
            continue
        length = 0
        i = start
        while not seen[i]:
            seen[i] = True
            i = order[i]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def pfaffian_reference(x) -> complex:
    """Pfaffian by recursive expansion along the first row.

    Factorial cost, so dimensions above ``REFERENCE_MAX_DIM`` are refused.
    """
    a = _as_array(x)
    n = a.shape[0]
    if n % 2:
        raise ValueError(f"Pfaffian undefined for odd dimension {n}")
    if n > REFERENCE_MAX_DIM:
        raise ValueError(f"reference Pfaffian refused for dim {n} > {REFERENCE_MAX_DIM}")
    return complex(_expand(a, tuple(range(n))))


def _expand(a: np.ndarray, idx: tuple[int, ...]) -> complex:
    if not idx:
        return 1.0 + 0.0j
    first, rest = idx[0], idx[1:]
    total = 0.0 + 0.0j
    for pos, b in enumerate(rest):
        if a[first, b] == 0:
            continue
        sub = rest[:pos] + rest[pos + 1:]
        # (-1)^pos with 0-based position among the remaining indices
        sign = -1.0 if pos % 2 else 1.0
        total += sign * a[first, b] * _expand(a, sub)
    return total
