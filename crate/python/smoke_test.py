#!/usr/bin/env python3
"""Smoke test for the `_chainrec` extension module.

Builds the module with cargo if needed, imports it, and drives the main
types and operations end to end: the map DSL, grids and cell sets, the
chain recurrent approximation, trapping regions with attractor and basin,
omega-limit cells, and the exact finite-state oracle.

Run from anywhere:

    python3 python/smoke_test.py
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def build_module() -> Path:
    so = REPO / "target" / "release" / "lib_chainrec.so"
    if not so.exists():
        print("building _chainrec with cargo ...")
        subprocess.run(
            ["cargo", "build", "--release", "-p", "chainrec-py"],
            cwd=REPO,
            check=True,
        )
    staging = Path(tempfile.mkdtemp(prefix="chainrec_py_"))
    shutil.copy(so, staging / "_chainrec.so")
    return staging


sys.path.insert(0, str(build_module()))
import _chainrec as chainrec  # noqa: E402

print(f"_chainrec {chainrec.__version__}")

# --- map DSL -----------------------------------------------------------
square = chainrec.MapExpr("z^2")
assert square.eval(0.5 + 0j) == 0.25 + 0j
assert abs(square.eval(1j) - (-1 + 0j)) < 1e-15
printed = str(square)
assert chainrec.MapExpr(printed).eval(0.3 + 0.4j) == square.eval(0.3 + 0.4j)

enclosure = square.eval_box((-0.1, 0.1, -0.1, 0.1))
for k in range(100):
    z = complex(-0.1 + 0.2 * (k % 10) / 9, -0.1 + 0.2 * (k // 10) / 9)
    w = square.eval(z)
    assert enclosure[0] <= w.real <= enclosure[1]
    assert enclosure[2] <= w.imag <= enclosure[3]

try:
    chainrec.MapExpr("z^-2")
    raise AssertionError("negative exponent must be rejected")
except ValueError as e:
    assert "nonnegative" in str(e)
print("map DSL: ok")

# --- grid and cell sets -------------------------------------------------
grid = chainrec.Grid((-1.125, 1.125, -1.125, 1.125), 6, membership="disc")
assert grid.depth == 6
disc = grid.all_cells()
ball = grid.cover_ball(0j, 0.5)
assert 0 < len(ball) < len(disc)
assert ball.is_subset(disc)
assert ball.is_subset(ball.fatten(0.0))
assert ball.union(disc).cells() == disc.cells()
assert abs(ball.hausdorff(ball)) == 0.0
print("grid/box sets: ok")

# --- chain recurrence ----------------------------------------------------
sys_maps = chainrec.GeneratorSystem(["z^2", "z^3"])
assert sys_maps.check_abelian_sampled((-1.0, 1.0, -1.0, 1.0), 500)
p = sys_maps.apply_word([0, 1], 0.9 + 0j)  # g0 o g1 = z^6
assert abs(p - 0.9**6) < 1e-12

cr = chainrec.approx_cr(grid, sys_maps, [[0], [1]], [0.1, 0.05], 2)
assert len(cr) > 0
# the chain recurrent approximation traces the origin and the unit circle
for ix, iy in cr.cells():
    w = 2.25 / 64
    z = complex(-1.125 + (ix + 0.5) * w, -1.125 + (iy + 0.5) * w)
    assert abs(z) < 0.2 or abs(abs(z) - 1.0) < 0.2, f"stray CR cell at {z}"
comps = chainrec.chain_components(grid, sys_maps, cr, [[0], [1]], [0.1, 0.05], 2)
assert len(comps) >= 2
assert sum(len(c) for c in comps) == len(cr)
print(f"chain recurrence: ok ({len(cr)} cells, {len(comps)} components)")

# --- transitivity ---------------------------------------------------------
rot_grid = chainrec.Grid((-1.0, 1.0, -1.0, 1.0), 1)
rotation = chainrec.GeneratorSystem(["i*z"])
transitive, failing = chainrec.is_topologically_transitive(rot_grid, rotation, 3)
assert transitive and failing is None
contraction = chainrec.GeneratorSystem(["0.5*z"])
transitive, failing = chainrec.is_topologically_transitive(grid, contraction, 3)
assert not transitive and failing is not None
print("transitivity: ok")

# --- attractors ------------------------------------------------------------
outcome = chainrec.certify_trapping(grid, sys_maps, ball, [0], 2)
assert outcome["certified"]

annulus_cells = [c for c in disc.cells() if 0.65 < abs(complex(-1.125 + (c[0] + 0.5) * 2.25 / 64, -1.125 + (c[1] + 0.5) * 2.25 / 64)) < 0.75]
annulus = chainrec.BoxSet(grid, annulus_cells)
outcome = chainrec.certify_trapping(grid, sys_maps, annulus, [0], 2)
assert not outcome["certified"]
assert outcome["violating_cell"] is not None

result = chainrec.compute_attractor(grid, sys_maps, ball, [0], 2, 0, 16, 6)
assert result["certified"] and result["stabilized"]
attractor = result["attractor"]
basin = result["basin"]
w = 2.25 / 64
for ix, iy in attractor.cells():
    z = complex(-1.125 + (ix + 0.5) * w, -1.125 + (iy + 0.5) * w)
    assert abs(z) < 3 * w, f"attractor cell far from origin: {z}"
assert ball.is_subset(basin)
assert attractor.is_subset(ball)

omega = chainrec.omega_limit_cells(grid, sys_maps, ball, 0, 6, 2)
assert len(omega.intersect(attractor)) > 0
print(f"attractors: ok (|A|={len(attractor)}, |B(A)|={len(basin)})")

# --- exact finite oracle ----------------------------------------------------
cycle = chainrec.FiniteSystem(
    3,
    [[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]],
    [[1, 2, 0]],
)
assert cycle.exact_cr() == [0, 1, 2]
topological, chain, dense = cycle.exact_transitivity()
assert topological and chain and dense == 0

const = chainrec.FiniteSystem(
    3,
    [[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]],
    [[0, 0, 0]],
)
assert const.exact_cr() == [0]
duality = const.exact_duality()
assert duality["sides_equal"] and duality["abelian"]
assert duality["union_basin_minus_attractor"] == [1, 2]

for seed in range(10):
    system = chainrec.FiniteSystem.random(seed, 6, True)
    assert system.is_abelian()
    d = system.exact_duality()
    assert d["sides_equal"], f"duality failed for seed {seed}"
    conj = system.conjugate(list(reversed(range(system.n))))
    rho = list(reversed(range(system.n)))
    assert sorted(rho[s] for s in system.exact_cr()) == conj.exact_cr()
print("finite oracle: ok")

print("smoke test: all checks passed")
