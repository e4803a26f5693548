import os
import subprocess
import sys

import numpy as np
import pytest

from twistpf import kernels
from twistpf.kernels import PRIME, matmul_mod, matmul_mod_numpy, nullspace_mod, rref_mod, rref_mod_numpy

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not available")


def rand_matrix(rng, m, n, rank=None):
    if rank is None:
        return rng.integers(0, PRIME, size=(m, n), dtype=np.int64)
    a = rng.integers(0, PRIME, size=(m, rank), dtype=np.int64)
    b = rng.integers(0, PRIME, size=(rank, n), dtype=np.int64)
    return matmul_mod_numpy(a, b)


def slow_matmul(A, B, p=PRIME):
    return np.array([[sum(int(A[i, k]) * int(B[k, j]) for k in range(A.shape[1])) % p
                      for j in range(B.shape[1])] for i in range(A.shape[0])], dtype=np.int64)


def test_matmul_no_overflow():
    rng = np.random.default_rng(0)
    A, B = rand_matrix(rng, 5, 7), rand_matrix(rng, 7, 4)
    want = slow_matmul(A, B)
    assert np.array_equal(matmul_mod_numpy(A, B), want)
    assert np.array_equal(matmul_mod(A, B), want)


@pytest.mark.parametrize("shape, rank", [((6, 9), 4), ((12, 12), 12), ((15, 10), 3), ((1, 5), None)])
def test_rref_properties(shape, rank):
    rng = np.random.default_rng(sum(shape))
    A = rand_matrix(rng, *shape, rank)
    R, pc, pr = rref_mod(A.copy(), shape[1])
    if rank is not None:
        assert len(pc) == min(rank, *shape)
    for c, r in zip(pc, pr):
        col = R[:, c]
        assert col[r] == 1 and np.count_nonzero(col) == 1


@needs_numba
@pytest.mark.parametrize("seed", range(5))
def test_numba_matches_numpy(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(3, 30, size=2)
    A = rand_matrix(rng, int(m), int(n), int(rng.integers(1, min(m, n) + 1)))
    lim = int(rng.integers(1, n + 1))
    R1, pc1, pr1 = rref_mod_numpy(A.copy(), lim)
    R2, pc2, pr2 = kernels.rref_mod_numba(A.copy(), lim)
    assert np.array_equal(R1, R2)
    assert np.array_equal(pc1, pc2) and np.array_equal(pr1, pr2)
    B = rand_matrix(rng, int(n), 4)
    assert np.array_equal(kernels._matmul_mod_jit(A, B, PRIME), matmul_mod_numpy(A, B))


def test_nullspace():
    rng = np.random.default_rng(4)
    A = rand_matrix(rng, 5, 8, 3)
    N = nullspace_mod(A)
    assert N.shape == (5, 8)
    assert not np.any(matmul_mod(A, N.T))


def test_env_flag_selects_numpy():
    code = "from twistpf import kernels; print(kernels.backend())"
    env = dict(os.environ, TWISTPF_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "numpy"


def test_probe_backends_agree():
    code = ("import sys; sys.path.insert(0, 'tests'); from conftest import sunset_polys;"
            "from twistpf.modular import probe_order; from twistpf.twist import TwistSpec;"
            "pr = probe_order(sunset_polys(4), TwistSpec.uniform(1, 4), 't', 4);"
            "print(pr.backend, pr.order, sorted(pr.residue_ranks.items()))")
    outs = []
    for flag in ("0", "1"):
        env = dict(os.environ, TWISTPF_NUMBA=flag)
        p = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True,
                           cwd=os.path.dirname(os.path.dirname(__file__)))
        outs.append(p.stdout.split(" ", 1))
    assert outs[0][0] == "numpy"
    assert outs[0][1] == outs[1][1]
    assert outs[0][1].startswith("3 ")
