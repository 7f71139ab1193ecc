"""Tube-family building blocks: exact identities, spacings, mu-scalings."""

import numpy as np
import pytest

from torusflow import fields, mikado, norms
from torusflow.fields import Field
from torusflow.grid import TWO_PI

MACHINE = 1e-13


@pytest.fixture(scope="module")
def block2d():
    return mikado.build_block((1, 1), 8.0, 128, 2, offset=(0.37, 0.11))


@pytest.fixture(scope="module")
def block3d():
    return mikado.build_block((1, -1, 1), 5.0, 48, 3, offset=(0.1, 0.3, 0.8))


@pytest.mark.parametrize("which", ["block2d", "block3d"])
def test_exact_identities(which, request):
    b = request.getfixturevalue(which)
    assert abs(fields.mean(b.profile)) < MACHINE
    assert np.abs(fields.div(b.w).coeffs).max() < MACHINE
    assert np.abs((fields.div(b.v) - b.w).coeffs).max() < MACHINE
    assert np.abs((b.v + fields.transpose(b.v)).coeffs).max() < MACHINE
    assert abs(fields.parseval_l2(b.profile) - 1.0) < MACHINE


@pytest.mark.parametrize("which", ["block2d", "block3d"])
def test_mean_outer_product_is_direction_dyad(which, request):
    b = request.getfixturevalue(which)
    ww = fields.outer(b.w, b.w)
    got = fields.mean(ww) * TWO_PI ** b.dim
    assert np.abs(got - np.outer(b.unit, b.unit)).max() < MACHINE


@pytest.mark.parametrize("which", ["block2d", "block3d"])
def test_self_product_is_divergence_free(which, request):
    # the profile-squared modes stay inside the longitudinal hyperplane,
    # so even the dealiased product keeps div(w (x) w) = 0
    b = request.getfixturevalue(which)
    ww = fields.outer(b.w, b.w)
    assert np.abs(fields.div(ww).coeffs).max() < MACHINE


def test_fields_constant_along_axis(block2d):
    gpsi = fields.grad(block2d.profile)
    along = np.einsum("i,i...->...", block2d.unit, gpsi.coeffs)
    assert np.abs(along).max() < MACHINE


@pytest.mark.parametrize("direction,expected", [
    ((1, 0), 1.0),
    ((1, -1), np.sqrt(2) / 2),
    ((1, 1, 0), np.sqrt(2) / 2),
    ((1, -1, 1), np.sqrt(6) / 3),
    ((2, 1, 0), np.sqrt(5) / 5),
])
def test_tube_spacing(direction, expected):
    assert mikado.tube_spacing(direction) == pytest.approx(expected, abs=1e-12)


def test_spacing_ignores_common_factor():
    assert mikado.tube_spacing((2, 2, 0)) == mikado.tube_spacing((1, 1, 0))


def _slope(mus, vals):
    return np.polyfit(np.log(mus), np.log(vals), 1)[0]


@pytest.fixture(scope="module")
def mu_sweep():
    mus = [4.0, 8.0, 16.0]
    return mus, [mikado.build_block((1, 0), m, 512, 2, offset=(0.5, 0.5))
                 for m in mus]


def test_lebesgue_scaling_in_mu(mu_sweep):
    # |w|_Lq ~ mu^{(d-1)/2 - (d-1)/q}: mass concentrates on a mu^{-(d-1)}
    # volume fraction while the L2 norm stays pinned at 1
    mus, blocks = mu_sweep
    for q, expect in [(2.0, 0.0), (np.inf, 0.5), (1.0, -0.5)]:
        s = _slope(mus, [norms.lebesgue(b.w, q) for b in blocks])
        assert abs(s - expect) < 0.05, f"L{q} slope {s:+.3f}, expected {expect:+.2f}"


def test_potential_gains_inverse_mu(mu_sweep):
    mus, blocks = mu_sweep
    s = _slope(mus, [norms.lebesgue(b.v, 2) for b in blocks])
    assert abs(s + 1.0) < 0.03, f"potential slope {s:+.3f}"


def test_gradient_costs_mu(mu_sweep):
    mus, blocks = mu_sweep
    s = _slope(mus, [norms.lebesgue(fields.grad(b.w), 2) for b in blocks])
    assert abs(s - 1.0) < 0.03, f"gradient slope {s:+.3f}"


def test_crossing_term_scaling():
    # transversal 2D tubes meet on O(mu^{-d}) cells: |w w'|_L1 ~ mu^{-1}
    mus = [4.0, 8.0, 16.0]
    vals = []
    for m in mus:
        b1 = mikado.build_block((1, 0), m, 512, 2, offset=(0.3, 0.6))
        b2 = mikado.build_block((0, 1), m, 512, 2, offset=(0.8, 0.2))
        vals.append(norms.lebesgue(fields.outer(b1.w, b2.w), 1.0))
    s = _slope(mus, vals)
    assert abs(s + 1.0) < 0.05, f"crossing slope {s:+.3f}"


def test_certified_offsets_cover_full_basis():
    from torusflow.geometry import space_basis
    dirs = [tuple(d) for d in space_basis().directions]
    offsets = mikado.certified_offsets(dirs)
    assert offsets is not None
    gap = mikado._family_gap([np.array(d) for d in dirs], offsets)
    assert gap > 0.1, f"certified table min gap {gap:.4f}"


def test_place_family_uses_table_and_respects_diameter():
    from torusflow.geometry import space_basis
    dirs = [np.array(d) for d in space_basis().directions]
    offsets = mikado.place_family(dirs, 20.0, 3)
    assert mikado._family_gap(dirs, offsets) > 2.0 / 20.0


def test_place_family_halton_fallback():
    dirs = [np.array(d) for d in [(2, 1, 0), (0, 0, 1)]]
    offsets = mikado.place_family(dirs, 16.0, 3)
    gap = mikado.axis_distance(dirs[0], offsets[0], dirs[1], offsets[1])
    assert gap > 2.0 / 16.0


def test_family_supports_disjoint_in_3d():
    fam = mikado.build_family([(1, 1, 1), (1, -1, 0)], 20.0, 96, 3)
    assert mikado.support_overlap_fraction(*fam) == 0.0
    # band-limited leakage outside the tubes, shrinks as walls resolve
    assert mikado.cross_tail(*fam) < 0.1


def test_cross_tail_resolves_spectrally():
    tails = []
    for n in (128, 256, 512):
        b1 = mikado.build_block((1, 0), 16.0, n, 2, offset=(0.30, 0.60))
        b2 = mikado.build_block((1, 0), 16.0, n, 2, offset=(0.30, 0.10))
        tails.append(mikado.cross_tail(b1, b2))
    assert tails[2] < 1e-4 < tails[0]
    assert tails[0] > tails[1] > tails[2]


def test_resolution_guard():
    with pytest.raises(ValueError, match="unresolved"):
        mikado.build_block((1, 0), 200.0, 128, 2)


def test_self_intersection_guard():
    with pytest.raises(ValueError, match="self-intersects"):
        mikado.build_block((1, 1), 2.0, 64, 2)


def test_axis_distance_rejects_parallel():
    with pytest.raises(ValueError, match="parallel"):
        mikado.axis_distance((1, 1, 0), (0, 0, 0), (2, 2, 0), (0.5, 0, 0))


def test_halton_deterministic_and_in_unit_cube():
    pts = np.array([mikado.halton_point(i, 3) for i in range(1, 40)])
    assert ((pts >= 0) & (pts < 1)).all()
    assert np.allclose(mikado.halton_point(7, 3), mikado.halton_point(7, 3))
    assert mikado.halton(1, 2) == 0.5
    assert mikado.halton(2, 3) == pytest.approx(2.0 / 3.0)


def test_family_gap_infinite_for_parallel_only():
    dirs = [np.array((1, 0, 0))]
    assert mikado._family_gap(dirs, [np.zeros(3)]) == np.inf
