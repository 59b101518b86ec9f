"""Smoke test for the pyminentlab extension.

Uses an installed ``pyminentlab`` if one is importable (for example after
``maturin develop``); otherwise loads the shared library that
``cargo build -p minentlab-py`` leaves in ``target/``.
"""

import importlib.util
import json
import math
import os
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load():
    try:
        import pyminentlab

        return pyminentlab
    except ImportError:
        pass
    candidates = [os.environ.get("PYMINENTLAB_LIB")] + [
        str(ROOT / "target" / profile / "libpyminentlab.so") for profile in ("release", "debug")
    ]
    for path in filter(None, candidates):
        if os.path.exists(path):
            spec = importlib.util.spec_from_file_location("pyminentlab", path)
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)
            return module
    sys.exit("pyminentlab not found; run `cargo build -p minentlab-py` first")


def bell():
    h = 0.5
    return [[h, 0, 0, h], [0, 0, 0, 0], [0, 0, 0, 0], [h, 0, 0, h]]


def main():
    m = load()

    assert m.binary_entropy(0.5) == 1.0
    assert abs(m.conditional_shannon([[0.25, 0.25], [0.25, 0.25]]) - 1.0) < 1e-12
    success, hmin = m.classical_hmin_success([[0.375, 0.125], [0.125, 0.375]])
    assert abs(success - 0.75) < 1e-12 and abs(hmin - math.log2(4 / 3)) < 1e-12

    sol = m.solve_hmin([[complex(x) for x in row] for row in bell()], (2, 2))
    assert sol.status == "optimal", sol
    assert abs(sol.primal_value - 2.0) < 1e-6 and sol.gap <= 1e-7
    assert abs(m.conditional_von_neumann(bell(), (2, 2)) + 1.0) < 1e-9

    r = math.sqrt(0.5)
    assert abs(m.singlet_overlap_qk([r, 0, 0, r], (2, 2), 2) - 1.0) < 1e-12

    centers, cells = m.greedy_packing_net([[0.1 * i] for i in range(10)], 0.3, "absolute-difference")
    assert centers == [0, 3, 6, 9], centers
    assert len(cells) == 10 and cells[0] == 0 and cells[9] == 3

    reports = m.verify("thm1", partition_size=2, channel="depolarizing:0.5")
    assert len(reports) == 1 and reports[0].passed
    reports = m.verify("classical", suite="random-tables", n=50, seed=7)
    assert len(reports) == 150 and all(rep.passed for rep in reports)

    doc = m.run_config(json.dumps({"schema": "minentlab/1", "command": "minent", "state": "bell"}))
    assert abs(doc["primal_value"] - 2.0) < 1e-6

    try:
        m.verify("classical", suite="random-tables")
    except ValueError as e:
        assert "seed" in str(e)
    else:
        raise AssertionError("missing seed was accepted")

    print("pyminentlab smoke test passed")


if __name__ == "__main__":
    main()
