from __future__ import annotations

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from ecskit import kernels

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "benchmarks"))
from bench_kernels import cases  # noqa: E402


def test_backend_reported():
    assert kernels.BACKEND in kernels.available_backends()
    assert "python" in kernels.available_backends()


@pytest.mark.skipif("cython" not in kernels.available_backends(), reason="compiled kernels not built")
@pytest.mark.parametrize("n", [4, 5, 6])
@pytest.mark.parametrize("name", kernels.NAMES)
def test_backends_agree(name, n):
    py = kernels.backend_module("python")
    cy = kernels.backend_module("cython")
    inputs = cases(py, np.random.default_rng(n), 7, n)[name]
    a, b = getattr(py, name)(*inputs), getattr(cy, name)(*inputs)
    assert a.shape == b.shape
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-11)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.backend_module("fortran")


def test_pure_python_fallback_selected_by_environment():
    code = (
        "import json, numpy as np\n"
        "from ecskit import kernels, chartcalc, d1family\n"
        "d = d1family.sine_example(4)\n"
        "prof = chartcalc.ToleranceProfile(d1family.default_grid(d, per_axis=2))\n"
        "s = chartcalc.survey(d1family.build_metric(d), prof).summary()\n"
        "print(json.dumps({'backend': kernels.BACKEND, 'nw': s['max_nabla_weyl'], 'nr': s['max_nabla_riem']}))\n"
    )
    env = dict(os.environ, ECSKIT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    res = json.loads(out.stdout)
    assert res["backend"] == "python"
    assert res["nw"] < 1e-8
    assert res["nr"] > 1e-3
