"""Smoke test of the Python extension module.

Build and install it first:

    pip install --no-build-isolation -e crates/py
"""

import json
import math
import os
import sys
import tempfile

import triod_lab as tl


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    quartic = tl.TripleWellSpec.scalar_quartic()
    c = tl.solve_connection(quartic, 0, 1)
    assert close(c.action, 2.0 * math.sqrt(2.0) / 3.0, 1e-3), c
    assert c.equipartition_residual <= 1e-3
    assert len(c.values()) == len(c.eta()) == 801

    spec = tl.TripleWellSpec.equilateral()
    assert json.loads(spec.validate())["passed"]
    assert spec.w(spec.minima[0]) == 0.0
    triple = tl.solve_triple(spec, samples=401)
    sigma = [p.action for p in triple]
    assert [p.endpoints for p in triple] == [(0, 1), (1, 2), (2, 0)]
    assert max(sigma) - min(sigma) < 1e-10

    phi = tl.predict_angles(sigma)
    for p in phi:
        assert close(math.degrees(p), 120.0, 1e-9)
    scalene = [0.18, 0.19, 0.12]
    phi = tl.predict_angles(scalene)
    n = tl.conormals_from_angles(0.3, phi)
    assert tl.balance_residual(scalene, n) < 1e-12
    assert tl.sine_spread(phi, scalene) < 1e-12
    report = json.loads(tl.angle_report(n, scalene))
    assert report["max_prediction_error_deg"] < 1e-9

    try:
        tl.predict_angles([1.0, 1.0, 3.0])
    except tl.TriodError:
        pass
    else:
        raise AssertionError("degenerate actions accepted")
    try:
        tl.surgery_angles(100.0)
    except tl.TriodError as e:
        assert "sin psi2" in str(e)
    else:
        raise AssertionError("schedule accepted at R = 100")
    psi1, psi2 = tl.surgery_angles(2000.0)
    assert close(psi1, 2000.0 ** -0.8, 1e-15) and close(psi2, 2000.0 ** -0.75, 1e-15)

    with tempfile.TemporaryDirectory() as tmp:
        cfg = os.path.join(tmp, "config.json")
        with open(cfg, "w") as f:
            json.dump(
                {
                    "name": "smoke",
                    "potential": {"family": "equilateral"},
                    "field": {
                        "spacing": 0.4,
                        "extent": 14.4,
                        "max_steps": 1000,
                        "tolerance": 1e-4,
                        "rays": "predict",
                    },
                },
                f,
            )
        out = os.path.join(tmp, "run")
        assert tl.run(["connect", "--config", cfg, "--out", out]) == 0
        assert os.path.exists(os.path.join(out, "connection_01.csv"))
        assert tl.run(["flux3d", "--config", cfg, "--out", out]) == 1

    print(f"triod_lab {tl.__version__}: python smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
