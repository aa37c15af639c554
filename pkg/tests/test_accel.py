"""Numba and pure-numpy kernel paths must agree to rounding error."""

import json
import os
import subprocess
import sys

import numpy as np

from hypercauchy.cauchy import cauchy_integral, principal_value_nodes
from hypercauchy.surface import DomainSpec, build_mesh
from hypercauchy._corpus import random_smooth
import hypercauchy._accel as _accel

PATH_AGREEMENT_TOL = 1e-10

_SCRIPT = r"""
import json, sys
import numpy as np
from hypercauchy.surface import DomainSpec, build_mesh
from hypercauchy.cauchy import cauchy_integral, principal_value_nodes
from hypercauchy._corpus import random_smooth
import hypercauchy._accel as _accel

spec = DomainSpec("circle", 1, center=(0.0, 0.0), radius=1.0)
mesh = build_mesh(spec, 3)
f = rand = random_smooth(mesh, 5)
integral = cauchy_integral(mesh, f, np.array([0.3, 0.2])).value.coeffs
pv = principal_value_nodes(mesh, f, indices=[0, 17])
print(json.dumps({
    "numba_active": _accel.HAVE_NUMBA,
    "integral": integral.tolist(),
    "pv": np.asarray(pv).ravel().tolist(),
}))
"""


def _run_fallback():
    env = dict(os.environ, HYPERCAUCHY_NO_NUMBA="1")
    proc = subprocess.run([sys.executable, "-c", _SCRIPT],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout.strip().splitlines()[-1])


def test_fallback_path_matches_inprocess_values():
    fallback = _run_fallback()
    assert fallback["numba_active"] is False

    spec = DomainSpec("circle", 1, center=(0.0, 0.0), radius=1.0)
    mesh = build_mesh(spec, 3)
    f = random_smooth(mesh, 5)
    integral = cauchy_integral(mesh, f, np.array([0.3, 0.2])).value.coeffs
    pv = np.asarray(principal_value_nodes(mesh, f, indices=[0, 17])).ravel()

    assert np.max(np.abs(integral - fallback["integral"])) <= PATH_AGREEMENT_TOL
    assert np.max(np.abs(pv - fallback["pv"])) <= PATH_AGREEMENT_TOL


def test_numpy_accumulators_match_active_path(circle_mesh):
    ctx = circle_mesh.context
    f = random_smooth(circle_mesh, 5)
    g = f.samples * circle_mesh.weights[:, None]
    targets = circle_mesh.nodes[:3] * 1.5
    active_l = _accel.accum_left(ctx, targets, circle_mesh.nodes, g)
    active_r = _accel.accum_right(ctx, targets, circle_mesh.nodes, g)
    out_l = np.zeros_like(active_l)
    out_r = np.zeros_like(active_r)
    excl = np.full(targets.shape[0], -1, dtype=np.int64)
    _accel._accum_left_np(targets, excl, circle_mesh.nodes, g,
                          ctx.para_idx, ctx.para_sign, ctx.n, out_l)
    _accel._accum_right_np(targets, excl, circle_mesh.nodes, g,
                           ctx.para_idx_right, ctx.para_sign_right, ctx.n,
                           out_r)
    assert np.max(np.abs(active_l - out_l)) <= PATH_AGREEMENT_TOL
    assert np.max(np.abs(active_r - out_r)) <= PATH_AGREEMENT_TOL
