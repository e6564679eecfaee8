"""Regenerate the frozen fixtures under fixtures/.

Run from the repository root: python tools/freeze_fixtures.py
"""

import json
import random
from pathlib import Path

from bvmaster.bv_model import build_model
from bvmaster.cli_io import load_model
from bvmaster.laurent import frac_str
from bvmaster.master_solver import solve
from bvmaster.obstruction_tower import (
    build_tower,
    complex_to_json,
    conjugated_complex,
    kappa2_core,
    search_kappa2_fixture,
    tower_report,
    two_dim_complex,
)
from bvmaster.super_algebra import render

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "fixtures"


def dump(name, obj):
    (OUT / name).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def a2_golden():
    # produced with the dense linear backend only, never the Groebner division
    ctx = build_model(load_model(ROOT / "models" / "a2.toml").spec)
    ctx.backend = "linear"
    state = solve(ctx, 6)
    return {
        "model": "models/a2.toml",
        "order": 6,
        "backend": "linear",
        "basis": ctx.basis.names,
        "m": {str(n): {",".join(map(str, mu)): [frac_str(x) for x in v] for mu, v in state.m[n].components()}
              for n in range(2, 7)},
        "theta": {str(n): {",".join(map(str, mu)): render(e) for mu, e in state.theta[n].items()}
                  for n in range(1, 7)},
    }


def main():
    OUT.mkdir(exist_ok=True)
    dump("a2_golden.json", a2_golden())
    dump("two_dim.json", complex_to_json(two_dim_complex()))
    dump("kappa2_core.json", complex_to_json(kappa2_core(3)))
    cx = conjugated_complex(random.Random(7), {-1: 1, 0: 3, 1: 3, 2: 1}, 4)
    obj = complex_to_json(cx)
    obj["seed"] = 7
    dump("conjugated_tower.json", obj)
    seed, cx, tower = search_kappa2_fixture(seed=0, N=3)
    obj = complex_to_json(cx)
    rep = tower_report(tower)
    obj["seed"] = seed
    obj["expected"] = {"kappa": rep["kappa"], "observables": rep["observables"], "invisibles": rep["invisibles"]}
    dump("kappa2_regression.json", obj)


if __name__ == "__main__":
    main()
