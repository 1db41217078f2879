"""Counting functions: winding numbers, preimages, batched counting."""

import math

import numpy as np
import pytest

from comprange.counting import (
    count_batch,
    counting_sample,
    image_radial_features,
    in_image,
    nevanlinna_batch,
    preimages,
    tau_batch,
    winding_count,
)
from comprange.errors import ValidationError
from comprange.symbols import Blaschke, Crescent, Identity, Power, Scaled, build_symbol
from comprange import verify


class TestWindingCount:
    def test_identity(self):
        assert winding_count(Identity(), 0.3, 0.9) == 1

    def test_power_roots_inside(self):
        assert winding_count(Power(2), 0.25, 0.9) == 2

    def test_power_roots_outside(self):
        assert winding_count(Power(2), 0.25, 0.4) == 0

    def test_nudges_through_root_on_contour(self):
        # preimages of 0.25 under z^2 sit exactly on the radius-0.5 circle
        assert winding_count(Power(2), 0.25, 0.5) in (0, 2)

    def test_radius_validation(self):
        with pytest.raises(ValidationError):
            winding_count(Identity(), 0.3, 1.5)

    def test_contour_error_after_nudges_exhaust(self):
        from comprange.errors import ContourError
        from comprange.symbols import SymbolMap

        class Constant(SymbolMap):
            kind = "constant"

            def __call__(self, z):
                return np.full_like(np.asarray(z, dtype=complex), 0.25)

            def deriv(self, z):
                return np.zeros_like(np.asarray(z, dtype=complex))

        with pytest.raises(ContourError):
            winding_count(Constant(), 0.25, 0.9)


class TestPreimages:
    def test_identity(self):
        assert preimages(Identity(), 0.3 + 0.1j, 1e-3) == [(0.3 + 0.1j, 1)]
        assert preimages(Identity(), 0.9995, 1e-3) == []

    def test_power_square(self):
        pts = preimages(Power(2), 0.25, 0.01)
        roots = sorted(z.real for z, _ in pts)
        assert roots == pytest.approx([-0.5, 0.5], abs=1e-12)
        assert all(m == 1 for _, m in pts)

    def test_blaschke_zeros(self):
        pts = preimages(Blaschke([0.5, -0.5]), 0.0, 0.01)
        roots = sorted(z.real for z, _ in pts)
        assert roots == pytest.approx([-0.5, 0.5], abs=1e-10)

    def test_power_multiple_root_at_origin(self):
        pts = preimages(Power(3), 0.0, 1e-3)
        assert pts == [(0.0, 3)]

    def test_eps_validation(self):
        with pytest.raises(ValidationError):
            preimages(Identity(), 0.3, 0.5)

    def test_subdivision_matches_algebraic(self):
        passed, worst, _ = verify.check_argument_principle()
        assert passed, worst

    def test_subdivision_multiplicity(self):
        pts = preimages(Power(2), 0.0, 0.05, method="subdivision")
        assert sum(m for _, m in pts) == 2
        assert all(abs(z) < 1e-6 for z, _ in pts)


class TestCountingSample:
    def test_power_square_quarter(self):
        cs = counting_sample(Power(2), 0.25, 1e-3)
        assert cs.n == 2
        assert cs.nevanlinna == pytest.approx(2 * math.log(2.0), abs=1e-12)
        assert cs.tau == pytest.approx(1.0, abs=1e-12)

    def test_identity_tau_is_one(self):
        for w in (0.3, 0.5 + 0.2j, -0.9):
            cs = counting_sample(Identity(), w, 1e-3)
            assert cs.tau == pytest.approx(1.0, abs=1e-12)

    def test_scaled_empty_outside_image(self):
        cs = counting_sample(Scaled(0.5), 0.75, 1e-3)
        assert cs.n == 0 and cs.nevanlinna == 0.0

    def test_tau_undefined_at_origin(self):
        cs = counting_sample(Power(2), 0.0, 1e-3)
        assert not cs.tau_defined
        assert cs.n == 2  # double root at the origin

    def test_tail_bound_exact_kinds(self):
        cs = counting_sample(Blaschke([0.5, -0.3]), 0.9999, 1e-3)
        assert cs.n == 0
        assert cs.tail_bound == pytest.approx(
            sum(-m * math.log(abs(z))
                for z, m in preimages(Blaschke([0.5, -0.3]), 0.9999, 1e-6)),
            rel=1e-6)

    def test_atomic_monotone_and_tail(self):
        phi = build_symbol({"kind": "atomic_singular"})
        prev_n = -1
        prev_tail = math.inf
        for eps in (1e-1, 1e-2, 1e-3, 1e-4):
            cs = counting_sample(phi, 0.5, eps)
            assert cs.n >= prev_n
            assert cs.tail_bound < prev_tail
            prev_n, prev_tail = cs.n, cs.tail_bound

    def test_atomic_formula_vs_winding(self):
        phi = build_symbol({"kind": "atomic_singular"})
        for w in (0.5, -0.3 + 0.2j, 0.1j):
            eps = 1e-2
            assert counting_sample(phi, w, eps).n \
                == winding_count(phi, w, 1.0 - eps)


class TestInImage:
    def test_identity_interior(self):
        assert in_image(Identity(), 0.5 + 0.2j, 1e-3)

    def test_scaled_misses(self):
        assert not in_image(Scaled(0.5), 0.75, 1e-3)

    def test_crescent_exact_region(self):
        phi = Crescent(1.0, 0.25)
        assert not in_image(phi, 0.9, 1e-3)   # inside the removed disk
        assert in_image(phi, -0.5, 1e-3)      # far side of the lune

    def test_crescent_agreement_off_band(self):
        passed, bad, _ = verify.check_crescent_region_agreement()
        assert passed, bad


class TestBatches:
    def test_count_batch_matches_pointwise(self):
        rng = np.random.default_rng(9)
        w = 0.9 * np.sqrt(rng.random(64)) * np.exp(2j * np.pi * rng.random(64))
        for desc in ({"kind": "identity"}, {"kind": "scaled", "c": 0.5},
                     {"kind": "power", "n": 3},
                     {"kind": "mobius", "a": [0.3, 0.2]},
                     {"kind": "blaschke", "zeros": [[0.5, 0], [-0.3, 0]]},
                     {"kind": "crescent"}, {"kind": "atomic_singular"}):
            phi = build_symbol(desc, validate=False)
            batch = count_batch(phi, w, 1e-3)
            single = [sum(m for _, m in preimages(phi, complex(t), 1e-3)) for t in w]
            np.testing.assert_array_equal(batch, single, err_msg=desc["kind"])

    def test_nevanlinna_batch_matches_pointwise(self):
        rng = np.random.default_rng(10)
        w = 0.8 * np.sqrt(rng.random(32)) * np.exp(2j * np.pi * rng.random(32))
        for desc in ({"kind": "blaschke", "zeros": [[0.5, 0], [-0.3, 0]]},
                     {"kind": "atomic_singular"}, {"kind": "power", "n": 2}):
            phi = build_symbol(desc, validate=False)
            _, nev = nevanlinna_batch(phi, w, 1e-3)
            single = [counting_sample(phi, complex(t), 1e-3).nevanlinna for t in w]
            np.testing.assert_allclose(nev, single, atol=1e-10, err_msg=desc["kind"])

    def test_power_tau_is_one(self):
        _, tau = tau_batch(Power(4), np.array([0.3, 0.5 + 0.1j]), 1e-3)
        np.testing.assert_allclose(tau, 1.0, atol=1e-12)

    def test_monotone_in_eps(self):
        passed, bad, _ = verify.check_count_monotone_in_eps()
        assert passed, bad

    def test_generic_winding_batch_on_chain(self):
        # chain of two Moebius maps has no fast path; compare with the
        # composed closed-form preimage
        phi = build_symbol({"kind": "chain", "parts": [
            {"kind": "mobius", "a": [0.3, 0.0]},
            {"kind": "mobius", "a": [0.0, 0.4]},
        ]})
        rng = np.random.default_rng(12)
        w = 0.7 * np.sqrt(rng.random(20)) * np.exp(2j * np.pi * rng.random(20))
        n = count_batch(phi, w, 1e-2)
        assert set(np.unique(n)) <= {0, 1}
        assert n.sum() > 0


class TestChangeOfVariablesPushforward:
    def test_constant_count_symbols(self):
        passed, worst, _ = verify.check_pushforward_change_of_variables()
        assert passed, worst


class TestImageFeatures:
    def test_radial_jumps(self):
        eps = 1e-3
        assert image_radial_features(Identity(), eps)["jump_radii"] == [1 - eps]
        assert image_radial_features(Scaled(0.5), eps)["jump_radii"] == [0.5 * (1 - eps)]
        assert image_radial_features(Power(2), eps)["jump_radii"] == [(1 - eps) ** 2]

    def test_blaschke_band(self):
        band = image_radial_features(Blaschke([0.5, -0.3]), 1e-3)["band"]
        assert band is not None and 0.99 < band[0] < band[1] < 1.0
