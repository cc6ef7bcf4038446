"""Compiled and numpy lookup-table kernels must agree bit for bit."""

import os
import subprocess
import sys

import numpy as np
import pytest

from nnalign import kernels
from nnalign.kernels import _numpy_impl


def _maybe_core():
    try:
        from nnalign.kernels import _core
        return _core
    except ImportError:
        return None


_core = _maybe_core()
needs_core = pytest.mark.skipif(_core is None,
                                reason="compiled extension not built")


class TestNumpyImpl:
    def test_gather_rows_is_a_copy(self):
        table = np.arange(12.0).reshape(4, 3)
        out = _numpy_impl.gather_rows(table, [2, 0, 2])
        assert np.array_equal(out, table[[2, 0, 2]])
        out[0, 0] = -1.0
        assert table[2, 0] == 6.0

    def test_scatter_add_accumulates_duplicates(self):
        out = np.zeros((3, 2))
        rows = np.array([[1.0, 2.0], [10.0, 20.0], [100.0, 200.0]])
        _numpy_impl.scatter_add_rows(out, [1, 1, 0], rows)
        assert np.array_equal(out, [[100.0, 200.0], [11.0, 22.0], [0.0, 0.0]])


@needs_core
class TestBackendsAgree:
    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    def test_gather_rows(self, dtype):
        rng = np.random.default_rng(0)
        table = rng.normal(size=(50, 7)).astype(dtype)
        for _ in range(20):
            ids = rng.integers(0, 50, size=rng.integers(0, 40))
            a = _core.gather_rows(table, ids)
            b = _numpy_impl.gather_rows(table, ids)
            assert a.dtype == b.dtype == dtype
            assert np.array_equal(a, b)

    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    def test_scatter_add_rows(self, dtype):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n = int(rng.integers(1, 40))
            ids = rng.integers(0, 20, size=n)
            rows = rng.normal(size=(n, 6)).astype(dtype)
            out_a = rng.normal(size=(20, 6)).astype(dtype)
            out_b = out_a.copy()
            _core.scatter_add_rows(out_a, ids, rows)
            _numpy_impl.scatter_add_rows(out_b, ids, rows)
            # Both accumulate in ascending-k order, so results are bit-equal.
            assert np.array_equal(out_a, out_b)

    def test_backend_label(self):
        assert _core.BACKEND == "cython"
        assert _numpy_impl.BACKEND == "numpy"


class TestBackendSelection:
    def test_exported_backend_is_valid(self):
        assert kernels.BACKEND in ("cython", "numpy")
        if _core is not None and not os.environ.get("NNALIGN_PURE_PYTHON"):
            assert kernels.BACKEND == "cython"

    def _backend_in_subprocess(self, env_value):
        env = dict(os.environ)
        env.pop("NNALIGN_PURE_PYTHON", None)
        if env_value is not None:
            env["NNALIGN_PURE_PYTHON"] = env_value
        out = subprocess.run(
            [sys.executable, "-c",
             "from nnalign import kernels; print(kernels.BACKEND)"],
            capture_output=True, text=True, env=env, check=True)
        return out.stdout.strip()

    def test_env_var_forces_numpy(self):
        assert self._backend_in_subprocess("1") == "numpy"

    @needs_core
    def test_default_is_compiled(self):
        assert self._backend_in_subprocess(None) == "cython"
