"""The compiled and pure transportation kernels must agree pivot for pivot."""

import numpy as np
import pytest

from rbir import _backend, _transport_py

compiled = pytest.importorskip("rbir._transport", reason="compiled kernel not built")


def balanced_instance(rng, a, b):
    x = rng.random(a) * 10 + 0.01
    y = rng.random(b)
    y *= x.sum() / y.sum()
    y[-1] += x.sum() - y.sum()
    c = rng.random((a, b)) * 3
    return (np.ascontiguousarray(x), np.ascontiguousarray(y),
            np.ascontiguousarray(c))


def test_backend_is_compiled_here():
    assert _backend.BACKEND == "compiled"


def test_solve_balanced_bitwise_parity():
    rng = np.random.default_rng(101)
    for _ in range(300):
        a = int(rng.integers(1, 13))
        b = int(rng.integers(1, 13))
        x, y, c = balanced_instance(rng, a, b)
        f1 = np.empty((a, b))
        f2 = np.empty((a, b))
        c1 = compiled.solve_balanced(x, y, c, f1)
        c2 = _transport_py.solve_balanced(x, y, c, f2)
        assert c1 == c2
        assert np.array_equal(f1, f2)


def test_emd_cost_parity():
    rng = np.random.default_rng(103)
    d = rng.random((16, 16))
    d = (d + d.T) / 2
    np.fill_diagonal(d, 0.0)
    for _ in range(300):
        w1 = np.zeros(16)
        w2 = np.zeros(16)
        k1 = int(rng.integers(1, 9))
        k2 = int(rng.integers(1, 9))
        w1[rng.choice(16, k1, replace=False)] = rng.integers(1, 11, k1) * 10.0
        w2[rng.choice(16, k2, replace=False)] = rng.integers(1, 11, k2) * 10.0
        e1 = compiled.emd_cost(w1, w2, d)
        e2 = _transport_py.emd_cost(w1, w2, d)
        assert e1 == pytest.approx(e2, rel=1e-12, abs=1e-12)


def test_degenerate_instances_terminate():
    # many equal supplies/demands and tied costs force degenerate pivots
    for n in (2, 5, 9):
        x = np.full(n, 5.0)
        y = np.full(n, 5.0)
        c = np.ones((n, n))
        np.fill_diagonal(c, 0.0)
        f1 = np.empty((n, n))
        f2 = np.empty((n, n))
        assert compiled.solve_balanced(x, y, c, f1) == pytest.approx(0.0, abs=1e-12)
        assert _transport_py.solve_balanced(x, y, c, f2) == pytest.approx(0.0, abs=1e-12)


def test_zero_mass_sentinels_match():
    d = np.ones((3, 3)) - np.eye(3)
    z = np.zeros(3)
    w = np.array([1.0, 0.0, 0.0])
    for fn in (compiled.emd_cost, _transport_py.emd_cost):
        assert fn(z, z, d) == 0.0
        assert fn(w, z, d) == float("inf")


def test_env_var_forces_pure_backend():
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-c", "from rbir import _backend; print(_backend.BACKEND)"],
        capture_output=True, text=True,
        env={"RBIR_PURE_TRANSPORT": "1", "PATH": "/usr/bin:/bin",
             "PYTHONPATH": ":".join(sys.path)},
        check=True,
    )
    assert out.stdout.strip() == "python"
