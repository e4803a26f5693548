"""Dense Gauss-Jordan elimination modulo a word-size prime.

These are the hot loops of the probabilistic order probe.  A numba
version is used when numba imports and ``TWISTPF_NUMBA`` is not ``0``;
otherwise a vectorised numpy version runs.  Both follow the same pivot
rule as the exact eliminator so the predicted pivots line up.
"""

from __future__ import annotations

import os

import numpy as np

PRIME = 2147483629  # largest prime below 2^31; products of residues fit in int64

_want = os.environ.get("TWISTPF_NUMBA", "1") not in ("0", "false", "no", "off")
try:
    if not _want:
        raise ImportError
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag
    HAVE_NUMBA = False


def _inv_py(x: int, p: int) -> int:
    return pow(int(x), p - 2, p)


def rref_mod_numpy(A: np.ndarray, pivot_limit: int, p: int = PRIME):
    """Reduce A in place; returns (A, pivot_cols, pivot_rows)."""
    A = np.asarray(A, dtype=np.int64) % p
    m = A.shape[0]
    free = np.ones(m, dtype=bool)
    pcols = []
    prows = []
    for col in range(min(pivot_limit, A.shape[1])):
        cand = np.nonzero(free & (A[:, col] != 0))[0]
        if cand.size == 0:
            continue
        supp = np.count_nonzero(A[cand, :pivot_limit], axis=1)
        r = int(cand[np.argmin(supp)])  # argmin returns the first minimum, i.e. lowest index
        free[r] = False
        A[r] = A[r] * _inv_py(A[r, col], p) % p
        others = np.nonzero(A[:, col])[0]
        others = others[others != r]
        if others.size:
            f = A[others, col][:, None]
            A[others] = (A[others] - f * A[r][None, :]) % p
        pcols.append(col)
        prows.append(r)
    return A, np.array(pcols, dtype=np.int64), np.array(prows, dtype=np.int64)


if HAVE_NUMBA:

    @njit(cache=True)
    def _powmod(x, e, p):
        r = 1
        x = x % p
        while e > 0:
            if e & 1:
                r = r * x % p
            x = x * x % p
            e >>= 1
        return r

    @njit(cache=True)
    def _rref_mod_jit(A, pivot_limit, p):
        m, ncol = A.shape
        free = np.ones(m, dtype=np.bool_)
        pcols = np.empty(min(m, ncol), dtype=np.int64)
        prows = np.empty(min(m, ncol), dtype=np.int64)
        rank = 0
        lim = min(pivot_limit, ncol)
        for col in range(lim):
            best = -1
            bsupp = ncol + 1
            for r in range(m):
                if free[r] and A[r, col] != 0:
                    s = 0
                    for j in range(lim):
                        if A[r, j] != 0:
                            s += 1
                    if s < bsupp:
                        bsupp = s
                        best = r
            if best < 0:
                continue
            free[best] = False
            inv = _powmod(A[best, col], p - 2, p)
            for j in range(ncol):
                A[best, j] = A[best, j] * inv % p
            for r in range(m):
                if r != best and A[r, col] != 0:
                    f = A[r, col]
                    for j in range(ncol):
                        if A[best, j] != 0:
                            A[r, j] = (A[r, j] - f * A[best, j]) % p
            pcols[rank] = col
            prows[rank] = best
            rank += 1
        return pcols[:rank], prows[:rank]

    def rref_mod_numba(A: np.ndarray, pivot_limit: int, p: int = PRIME):
        A = np.ascontiguousarray(np.asarray(A, dtype=np.int64) % p)
        pc, pr = _rref_mod_jit(A, pivot_limit, p)
        return A, pc, pr


def rref_mod(A: np.ndarray, pivot_limit: int, p: int = PRIME):
    if HAVE_NUMBA:
        return rref_mod_numba(A, pivot_limit, p)
    return rref_mod_numpy(A, pivot_limit, p)


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


def nullspace_mod(A: np.ndarray, p: int = PRIME) -> np.ndarray:
    """Right nullspace basis (rows) of A modulo p, reduced echelon form."""
    A = np.asarray(A, dtype=np.int64)
    m, n = A.shape
    R, pc, pr = rref_mod(A, n, p)
    piv = {int(c): int(r) for c, r in zip(pc, pr)}
    out = []
    for f in range(n):
        if f in piv:
            continue
        v = np.zeros(n, dtype=np.int64)
        v[f] = 1
        for c, r in piv.items():
            v[c] = (-R[r, f]) % p
        out.append(v)
    return np.array(out, dtype=np.int64).reshape(len(out), n)


def matmul_mod_numpy(A: np.ndarray, B: np.ndarray, p: int = PRIME) -> np.ndarray:
    """A @ B mod p without int64 overflow: B is split into 16-bit halves."""
    A = np.asarray(A, dtype=np.int64) % p
    B = np.asarray(B, dtype=np.int64) % p
    if A.shape[1] >= 1 << 16:
        raise ValueError("inner dimension too large for the split product")
    lo = B & 0xFFFF
    hi = B >> 16
    return ((A @ hi) % p * 65536 + (A @ lo) % p) % p


if HAVE_NUMBA:

    @njit(cache=True)
    def _matmul_mod_jit(A, B, p):
        m, k = A.shape
        n = B.shape[1]
        # B split into 16-bit halves: a*half < 2^47, so 2^16 terms accumulate without reduction
        out = np.zeros((m, n), dtype=np.int64)
        hi = np.zeros(n, dtype=np.int64)
        lo = np.zeros(n, dtype=np.int64)
        for i in range(m):
            hi[:] = 0
            lo[:] = 0
            for l in range(k):
                a = A[i, l]
                if a == 0:
                    continue
                for j in range(n):
                    b = B[l, j]
                    hi[j] += a * (b >> 16)
                    lo[j] += a * (b & 0xFFFF)
            for j in range(n):
                out[i, j] = ((hi[j] % p) * 65536 + lo[j] % p) % p
        return out


def matmul_mod(A: np.ndarray, B: np.ndarray, p: int = PRIME) -> np.ndarray:
    if HAVE_NUMBA:
        if A.shape[1] >= 1 << 16:
            raise ValueError("inner dimension too large for the split product")
        A = np.ascontiguousarray(np.asarray(A, dtype=np.int64) % p)
        B = np.ascontiguousarray(np.asarray(B, dtype=np.int64) % p)
        return _matmul_mod_jit(A, B, p)
    return matmul_mod_numpy(A, B, p)
