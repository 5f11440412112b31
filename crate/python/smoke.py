#!/usr/bin/env python3
"""Smoke test for the carnot_py extension module.

Builds nothing itself: expects `cargo build -p carnot-py` to have produced
target/debug/libcarnot_py.so (or a release build), which this script
symlinks next to itself under the importable name carnot_py.so.
"""

import math
import os
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
REPO = os.path.dirname(HERE)


def ensure_module():
    link = os.path.join(HERE, "carnot_py.so")
    candidates = [
        os.path.join(REPO, "target", profile, "libcarnot_py.so")
        for profile in ("debug", "release")
    ]
    built = next((c for c in candidates if os.path.exists(c)), None)
    if built is None:
        sys.exit("libcarnot_py.so not found — run `cargo build -p carnot-py` first")
    if os.path.islink(link) or os.path.exists(link):
        os.remove(link)
    os.symlink(built, link)
    sys.path.insert(0, HERE)


ensure_module()
import carnot_py as cp  # noqa: E402


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


# Group arithmetic in the first Heisenberg group.
h1 = cp.Algebra.fixture("heisenberg1")
assert h1.dim == 3 and h1.step == 2 and h1.hom_dim == 4
prod = h1.multiply([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
assert all(close(a, b) for a, b in zip(prod, [1.0, 1.0, 0.5])), prod
x = [0.3, -0.7, 0.2]
unit = h1.multiply(x, h1.inverse(x))
assert max(abs(c) for c in unit) <= 1e-14, unit
doubled = h1.dilate(2.0, x)
assert all(close(a, b) for a, b in zip(doubled, [0.6, -1.4, 0.8])), doubled

# Resolved fixture: subgroups, couple, projection round-trip.
grp = cp.Group.resolve("heisenberg1")
assert sorted(grp.subgroup_names) == ["horizontal", "vertical"]
couple = grp.couple("vertical", "horizontal")
g = [-1.0, 1.0, 0.5]
w_part, v_part = couple.project(g)
back = h1.multiply(w_part, v_part)
assert max(abs(a - b) for a, b in zip(back, g)) <= 1e-12, back
assert couple.w.off_span_residual(w_part) <= 1e-12

# Intrinsic graph maps and their Jacobians.
lin = cp.Map.by_name(grp.algebra, couple, "linear:1")
assert close(lin.jacobian_at([0.3, -0.2]), math.sqrt(2.0), 1e-9)
par = cp.Map.by_name(grp.algebra, couple, "parabola")
assert close(par.jacobian_at([1.0, 0.4]), math.sqrt(5.0), 1e-9)
assert all(
    close(a, b)
    for a, b in zip(par.graph_point([1.0, 0.0]), [-1.0, 1.0, 0.5])
)

# Centered unit-ball slice of the vertical plane under the box distance.
dist = cp.Distance.d_inf()
assert close(dist.norm(h1, [0.0, 0.0, 4.0]), 2.0, 1e-12)
slc = cp.slice_volume(h1, grp.subgroup("vertical"), dist)
assert slc["method"] == "grid"
assert abs(slc["value"] - 4.0) <= slc["std_error"] + 1e-3, slc

# Spherical factor of the same plane.
sf = cp.spherical_factor(h1, grp.subgroup("vertical"), dist, seed=7)
assert abs(sf["beta"] - 4.0) <= sf["error_bound"] + 1e-3, sf

# Level-set Jacobian ratio f = x + y² along V = span{e1}.
ratio = cp.level_set_ratio(
    h1, "x-plus-ysq", grp.subgroup("horizontal"), grp.subgroup("vertical"), [-1.0, 1.0, 0.4]
)
assert close(ratio, math.sqrt(5.0), 1e-6), ratio

# A small blow-up run end to end.
rep = cp.federer_density(
    h1,
    lin,
    dist,
    point=[0.0, 0.0, 0.0],
    seed=11,
    centers=8,
    samples=300,
    t_schedule=[0.25, 0.125, 0.0625],
)
assert rep["exponent"] == 3
assert len(rep["per_t"]) == 3
assert math.isfinite(rep["relative_gap"]), rep

print("carnot_py smoke: OK")
