"""Symbol construction, evaluation, derivatives, and the crescent map."""

import math

import numpy as np
import pytest

from comprange.errors import DomainError, EvaluationError, ValidationError
from comprange.symbols import (
    Blaschke,
    Chain,
    Crescent,
    CrescentRegion,
    Mobius,
    Power,
    build_symbol,
    crescent_map,
    eval_with_derivative,
    verify_self_map,
)
from comprange.counting import count_batch, winding_count
from comprange import verify


class TestBuildSymbol:
    def test_identity(self):
        phi = build_symbol({"kind": "identity"})
        assert phi(0.3 + 0.1j) == 0.3 + 0.1j
        assert phi.deriv(0.2) == 1.0

    def test_power_square(self):
        phi = build_symbol({"kind": "power", "n": 2})
        assert phi(0.3 + 0.4j) == pytest.approx(-0.07 + 0.24j)

    def test_scaled(self):
        phi = build_symbol({"kind": "scaled", "c": 0.5})
        assert phi(0.8) == pytest.approx(0.4)

    def test_descriptor_roundtrip(self):
        descs = [
            {"kind": "identity"},
            {"kind": "scaled", "c": 0.5},
            {"kind": "power", "n": 3},
            {"kind": "mobius", "a": [0.3, 0.2], "phase": 0.1},
            {"kind": "blaschke", "zeros": [[0.5, 0.0], [-0.3, 0.0]], "phase": 0.0},
            {"kind": "crescent", "tangent_point": [1.0, 0.0], "inner_radius": 0.25},
            {"kind": "atomic_singular"},
        ]
        for desc in descs:
            assert build_symbol(desc).describe() == desc

    def test_validation_errors(self):
        for desc in [
            {"kind": "scaled", "c": 1.5},
            {"kind": "power", "n": 0},
            {"kind": "blaschke", "zeros": [[1.0, 0.0]]},
            {"kind": "crescent", "inner_radius": 0.7},
            {"kind": "mobius", "a": [1.2, 0.0]},
            {"kind": "nope"},
            {"kind": "identity", "extra": 1},
        ]:
            with pytest.raises(ValidationError):
                build_symbol(desc)


class TestEvalWithDerivative:
    def test_identity(self):
        v, d = eval_with_derivative(build_symbol({"kind": "identity"}), 0.7j)
        assert v == 0.7j and d == 1.0

    def test_mobius_at_fixed_zero(self):
        phi = Mobius(0.5, 0.0)
        v, d = eval_with_derivative(phi, 0.5)
        assert abs(v) < 1e-15
        assert d == pytest.approx(-4.0 / 3.0)

    def test_atomic_at_origin(self):
        phi = build_symbol({"kind": "atomic_singular"})
        v, d = eval_with_derivative(phi, 0.0)
        assert v == pytest.approx(math.exp(-1.0))
        assert abs(d) == pytest.approx(2.0 * math.exp(-1.0))

    def test_boundary_guard(self):
        with pytest.raises(DomainError):
            eval_with_derivative(build_symbol({"kind": "identity"}), 1.0 - 1e-14)

    def test_atomic_singularity_guard(self):
        phi = build_symbol({"kind": "atomic_singular"})
        with pytest.raises(EvaluationError):
            phi(1.0 - 1e-12)


class TestSelfMapCheck:
    def test_identity_margin(self):
        assert verify_self_map(build_symbol({"kind": "identity"})) == pytest.approx(
            1e-6, abs=1e-9)

    def test_scaled_margin(self):
        assert verify_self_map(build_symbol({"kind": "scaled", "c": 0.5})) \
            == pytest.approx(0.5, abs=1e-5)

    def test_blaschke_inner_margin(self):
        m = verify_self_map(Blaschke([0.5, -0.3]))
        assert 0 < m < 1e-5  # inner function: boundary modulus 1


class TestDerivatives:
    def test_chain_rule(self):
        passed, worst, _ = verify.check_chain_rule()
        assert passed, worst

    def test_finite_differences_all_kinds(self):
        passed, worst, _ = verify.check_derivative_fd()
        assert passed, worst

    def test_chain_evaluation_order(self):
        # parts apply left to right: chain([p2, m])(z) = m(z^2)
        p2, m = Power(2), Mobius(0.4)
        chain = Chain([p2, m])
        z = 0.3 + 0.2j
        assert chain(z) == pytest.approx(m(p2(z)))


class TestCrescent:
    def test_region_invariants(self):
        reg = CrescentRegion(1.0, 0.25)
        assert abs(reg.inner_center) + reg.rho0 == pytest.approx(1.0)
        assert reg.inner_center == pytest.approx(0.75)

    def test_region_validation(self):
        with pytest.raises(ValidationError):
            CrescentRegion(1.0, 0.6)
        with pytest.raises(ValidationError):
            CrescentRegion(0.9, 0.25)

    def test_normalization(self):
        phi = Crescent(1.0, 0.25)
        assert phi(0.0) == pytest.approx(-0.25, abs=1e-12)

    def test_image_inside_lune(self):
        phi = crescent_map(CrescentRegion(1.0, 0.25))
        rng = np.random.default_rng(3)
        z = 0.999 * np.sqrt(rng.random(2000)) * np.exp(2j * np.pi * rng.random(2000))
        w = np.asarray(phi(z))
        assert np.all(np.abs(w) < 1.0)
        assert np.all(np.abs(w - 0.75) > 0.25)

    def test_univalent_by_counting(self):
        phi = Crescent(1.0, 0.25)
        rng = np.random.default_rng(4)
        w = 0.95 * np.sqrt(rng.random(1000)) * np.exp(2j * np.pi * rng.random(1000))
        n = count_batch(phi, w, 1e-3)
        assert set(np.unique(n)) <= {0, 1}

    def test_far_side_target_covered(self):
        # winding-count oracle at the far side of the lune
        assert winding_count(Crescent(1.0, 0.25), -0.5, 0.999) == 1

    def test_inverse_roundtrip(self):
        passed, worst, _ = verify.check_crescent_inverse_identity()
        assert passed, worst

    def test_boundary_approach_both_circles(self):
        phi = Crescent(1.0, 0.25)
        th = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
        w = np.asarray(phi((1 - 1e-8) * np.exp(1j * th)))
        assert np.min(1 - np.abs(w)) < 1e-6           # hugs the unit circle
        assert np.min(np.abs(w - 0.75) - 0.25) < 1e-6  # hugs the inner circle

    def test_rotated_tangent_point(self):
        zeta = np.exp(0.7j)
        phi = Crescent(zeta, 0.3)
        assert phi(0.0) == pytest.approx(-0.3 * zeta, abs=1e-12)
        w = np.asarray(phi(0.9 * np.exp(1j * np.linspace(0, 6, 50))))
        assert np.all(np.abs(w - 0.7 * zeta) > 0.3)


class TestBlaschkeDegree:
    def test_every_target_attained_with_degree(self):
        passed, bad, _ = verify.check_blaschke_degree()
        assert passed, bad
