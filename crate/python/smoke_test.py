#!/usr/bin/env python3
"""Smoke test for the quadfix_py extension module.

Builds the cdylib with cargo if needed, imports it, and exercises the
main entry points on the 1-D demo problem with the closed form
x_n = n / (2(n+1)).
"""

import json
import shutil
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_module() -> Path:
    target = ROOT / "target" / "debug"
    lib = target / "libquadfix_py.so"
    if not lib.exists():
        subprocess.run(
            ["cargo", "build", "-p", "quadfix-py"], cwd=ROOT, check=True
        )
    dest = Path(__file__).resolve().parent / "quadfix_py.so"
    if not dest.exists() or lib.stat().st_mtime > dest.stat().st_mtime:
        shutil.copy2(lib, dest)
    return dest


def main() -> int:
    build_module()
    sys.path.insert(0, str(Path(__file__).resolve().parent))
    import quadfix_py

    config = {
        "space": {"dim": 1, "u": [0.5], "x0": [0.0]},
        "operatorA": {"matrix": [[1.0]]},
        "family": {"maps": [{"kind": "identity"}], "p": [0.0]},
        "schedule": {"kind": "example", "gamma": 1.0, "l": 1},
        "run": {"steps": 1000},
        "oracle": {"kind": "affine", "span": [], "offset": [0.5]},
    }
    inst = quadfix_py.Instance(json.dumps(config))

    k_bound, q, b_a, b_u, b_p, gamma, l = inst.bounds()
    assert (k_bound, q, b_a, gamma, l) == (1, 0, 1, 1.0, 1), inst.bounds()

    # closed form x_n = n / (2(n+1))
    for n in (0, 1, 10, 100):
        (x,) = inst.point(n)
        assert abs(x - n / (2 * (n + 1))) < 1e-12, (n, x)

    r_tilde, r_i, gap = inst.residuals(10)
    assert r_tilde == 0.0 and r_i == [0.0]
    assert abs(gap - 0.5 / (11 * 12)) < 1e-12, gap

    psi_u, psi_l, sigma_gap, phi, phi_tilde = inst.rates(0)
    assert phi == phi_tilde == 55, (phi, phi_tilde)
    assert inst.rates(0, variant="c3c2star")[3] == 46

    assert quadfix_py.closed_form_rates(1, 1, 1, 1, 1.0, 0) == (46, 55)

    f = json.dumps({"kind": "affine", "a": 1, "b": 10})
    assert inst.find_metastable_n(9, f) == 3
    assert inst.omega(0, f) is None  # saturates at the default cap

    passes, failures, skipped = inst.verify_asreg(kmax=5, budget=100_000)
    assert failures == 0 and passes > 0, (passes, failures, skipped)
    passes, failures, skipped = inst.verify_gap(kmax=5, budget=100_000)
    assert failures == 0 and passes > 0, (passes, failures, skipped)

    assert inst.check_embedding(1000) < 1e-12
    checks, violations = inst.run_monitors(steps=2000)
    assert checks > 0 and violations == 0, (checks, violations)

    x_star = inst.oracle_point()
    assert x_star == [0.5], x_star

    for comb in ("sigma0", "sigma0star", "xumeta", "xumetastar"):
        passes, failures, skipped = quadfix_py.xu_lemma_oracle(comb, cases=20)
        assert failures == 0 and passes > 0, (comb, passes, failures)

    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
