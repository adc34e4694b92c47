"""Smoke test for the compiled `mapgroups` extension module.

Build and install first, e.g.

    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/mapgroups-*.whl

then run `python python/smoke_test.py` (or `pytest python/`).
"""

import json
import math

import mapgroups


def test_field_norms():
    a = mapgroups.BandlimitedField.random(1, 8, components=2, seed=3)
    assert (a.dim, a.modes, a.components) == (1, 8, 2)
    norms = [a.hs_norm(s) for s in (0.0, 0.5, 1.0, 2.0)]
    assert all(x <= y + 1e-12 for x, y in zip(norms, norms[1:]))
    c = mapgroups.BandlimitedField.constant(1, 4, [2.0])
    assert abs(c.eval([0.3])[0] - 2.0) < 1e-12
    payload = json.loads(a.to_json())
    assert payload["weight_exponent_convention"] == "paper-s/2"


def test_extension_is_cheaper():
    a = mapgroups.BandlimitedField.random(1, 8, seed=5)
    ext, norm = a.restrict_and_extend(1.0, 2.2, 65, 1.0, 8)
    assert norm <= a.hs_norm(1.0) + 1e-9
    assert abs(ext.eval([1.6])[0] - a.eval([1.6])[0]) < 1e-6


def test_group_section_roundtrip():
    atlas = mapgroups.Atlas("circle2", 33)
    assert len(atlas) == 2 and atlas.dim == 1
    xi = mapgroups.Section.from_field(atlas, mapgroups.BandlimitedField.random(1, 3, components=3, seed=1)).scale(0.3)
    g = mapgroups.GroupSection.exp("SO3", xi)
    assert g.relation_defect() < 1e-12
    ident = mapgroups.GroupSection.identity(atlas, "SO3")
    assert (g * g.inverse()).max_distance(ident) < 1e-12
    back = g.log()
    assert (back + xi.scale(-1.0)).sup_norm() < 1e-10
    m = g.value(0, 0)
    assert len(m) == 3 and len(m[0]) == 3


def test_evolve_constant_curve():
    atlas = mapgroups.Atlas("circle2", 33)
    xi = mapgroups.Section.from_field(atlas, mapgroups.BandlimitedField.random(1, 3, components=3, seed=2)).scale(0.1)
    eta = mapgroups.evolve("SO3", [xi, xi], steps=64)
    assert eta.max_distance(mapgroups.GroupSection.exp("SO3", xi)) < 1e-8


def test_spectrum_and_critical_order():
    sigmas = mapgroups.rellich_spectrum(1.0, 0.0, 1, 16)
    assert sigmas[0] == 1.0
    assert all(x >= y for x, y in zip(sigmas, sigmas[1:]))
    fit = json.loads(mapgroups.critical_order(1.0))
    assert abs(fit["estimate"] - 1.0) < 0.1


def test_shrink_domain():
    cert = json.loads(mapgroups.shrink_domain("disc", 0.1, samples=40))
    assert cert["passed"] and cert["margin"] > 0.0
    assert math.isfinite(cert["k_max_displacement"])


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok {name}")
