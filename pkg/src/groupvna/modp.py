"""Dense linear algebra over prime fields F_p on int64 numpy arrays.

Everything here assumes p is prime and all matrix entries fit comfortably in
int64 after one multiply-accumulate (p < 2**31 keeps that safe at the sizes
this package handles).
"""

from __future__ import annotations

import numpy as np


def inv_mod(a: int, p: int) -> int:
    return pow(int(a) % p, p - 2, p)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def matmul_mod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    return (a.astype(np.int64) @ b.astype(np.int64)) % p


def rref_mod(a: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    r = np.array(a, dtype=np.int64) % p
    if r.ndim != 2:
        raise ValueError("matrix expected")
    nrow, ncol = r.shape
    pivots: list[int] = []
    row = 0
    for col in range(ncol):
        if row == nrow:
            break
        nz = np.nonzero(r[row:, col])[0]
        if len(nz) == 0:
            continue
        i = row + int(nz[0])
        if i != row:
            r[[row, i]] = r[[i, row]]
        r[row] = (r[row] * inv_mod(r[row, col], p)) % p
        others = np.nonzero(r[:, col])[0]
        others = others[others != row]
        if len(others):
            r[others] = (r[others] - np.outer(r[others, col], r[row])) % p
        pivots.append(col)
        row += 1
    return r[:row], pivots


def nullspace_mod(a: np.ndarray, p: int) -> np.ndarray:
    """Rows form a basis of the right nullspace of a over F_p."""
    r, pivots = rref_mod(a, p)
    ncol = a.shape[1]
    free = [c for c in range(ncol) if c not in pivots]
    basis = np.zeros((len(free), ncol), dtype=np.int64)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for i, pc in enumerate(pivots):
            basis[k, pc] = (-r[i, fc]) % p
    return basis


def _hessenberg_mod(a: np.ndarray, p: int) -> np.ndarray:
    h = np.array(a, dtype=np.int64) % p
    n = h.shape[0]
    for j in range(n - 2):
        nz = np.nonzero(h[j + 1 :, j])[0]
        if len(nz) == 0:
            continue
        i = j + 1 + int(nz[0])
        if i != j + 1:
            h[[j + 1, i]] = h[[i, j + 1]]
            h[:, [j + 1, i]] = h[:, [i, j + 1]]
        inv = inv_mod(h[j + 1, j], p)
        if j + 2 < n:
            factors = (h[j + 2 :, j] * inv) % p
            h[j + 2 :, :] = (h[j + 2 :, :] - np.outer(factors, h[j + 1, :])) % p
            h[:, j + 1] = (h[:, j + 1] + h[:, j + 2 :] @ factors) % p
    return h


def charpoly_mod(a: np.ndarray, p: int) -> np.ndarray:
    """Coefficients of det(xI - a) over F_p, ascending order, monic."""
    n = a.shape[0]
    if n == 0:
        return np.array([1], dtype=np.int64)
    h = _hessenberg_mod(a, p)
    polys = np.zeros((n + 1, n + 1), dtype=np.int64)
    polys[0, 0] = 1
    for k in range(1, n + 1):
        pk = np.zeros(n + 1, dtype=np.int64)
        pk[1 : k + 1] = polys[k - 1, :k]
        pk = (pk - h[k - 1, k - 1] * polys[k - 1]) % p
        prod = 1
        for i in range(k - 1, 0, -1):
            prod = (prod * h[i, i - 1]) % p
            if prod == 0:
                break
            w = (h[i - 1, k - 1] * prod) % p
            if w:
                pk = (pk - w * polys[i - 1]) % p
        polys[k] = pk
    return polys[n]


def poly_roots_mod(coeffs: np.ndarray, p: int) -> list[int]:
    """All roots in F_p of a nonzero polynomial (ascending coefficients)."""
    xs = np.arange(p, dtype=np.int64)
    acc = np.zeros(p, dtype=np.int64)
    for c in coeffs[::-1]:
        acc = (acc * xs + int(c)) % p
    return [int(x) for x in np.nonzero(acc == 0)[0]]


def primitive_root_mod(p: int) -> int:
    """A generator of the multiplicative group of F_p."""
    n = p - 1
    factors = []
    m = n
    f = 2
    while f * f <= m:
        if m % f == 0:
            factors.append(f)
            while m % f == 0:
                m //= f
        f += 1
    if m > 1:
        factors.append(m)
    for g in range(2, p):
        if all(pow(g, n // q, p) != 1 for q in factors):
            return g
    raise ArithmeticError(f"no primitive root modulo {p}")
