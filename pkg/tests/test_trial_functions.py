from weakcoupling import (
    CapPacket,
    GaussianRadial,
    KineticSymbol,
    PlacementFailed,
    ScaleTooLarge,
    UnsupportedDimension,
    assemble_vs,
    build_sphere_quadrature,
    knapp_packet,
    knapp_quadratic_form,
    knapp_sweep,
    multi_cap_certificate,
    radial_trial_value,
    vs_spectrum
)
from weakcoupling.trial_functions import main_term, place_caps, transverse_frame
import numpy as np
import pytest


def test_radial_trial_value_gaussian():
    symbol = KineticSymbol(3)
    V = GaussianRadial(3)
    value = radial_trial_value(V, symbol)
    assert value == pytest.approx(4 * np.pi * (1 - np.exp(-4 * np.pi)), rel=1e-8)

    quad = build_sphere_quadrature(3, 16)
    sqrt_w = np.sqrt(quad.weights)
    form = np.real(sqrt_w @ assemble_vs(V, quad, symbol).matrix @ sqrt_w)
    assert value == pytest.approx(form, rel=1e-6)


def test_transverse_frame():
    direction = np.array([1.0, 2.0, 2.0]) / 3
    basis = transverse_frame(direction)
    assert basis.shape == (3, 2)
    assert np.allclose(basis.T @ basis, np.eye(2))
    assert np.allclose(direction @ basis, 0.0)


class TestCapPacket:
    @classmethod
    def setup_class(cls):
        cls.packet = knapp_packet(64)
        cls.plain = knapp_packet(16, dimension=2, symmetrized=False)

    def test_attributes(self):
        assert self.packet.dimension == 3
        assert np.allclose(self.packet.direction, [1.0, 0.0, 0.0])
        assert self.packet.to_dict()["R"] == 64.0
        assert repr(self.packet).startswith("CapPacket(")

    def test_invalid(self):
        with pytest.raises(ValueError):
            CapPacket(2, [1.0, 0.0, 0.0])
        with pytest.raises(ValueError):
            CapPacket(16, [0.0, 0.0, 0.0])
        with pytest.raises(UnsupportedDimension):
            CapPacket(16, [1.0, 0.0, 0.0, 0.0])

    def test_norm_stable_in_R(self):
        norms = [knapp_packet(R).norm_squared for R in (16, 64, 256)]
        assert max(norms) / min(norms) <= 3
        assert knapp_packet(16, symmetrized=False).norm_squared == pytest.approx(2 * norms[0])

    def test_symmetrized_extension_is_real(self):
        x = np.array([[0.0, 0.0, 0.0], [3.0, 1.0, -2.0], [-10.0, 4.0, 0.5]])
        plain = knapp_packet(64, symmetrized=False).extension(x)
        value = self.packet.extension(x)
        assert np.isrealobj(value)
        assert np.allclose(value, plain.real)

    def test_transverse_decay(self):
        R = self.packet.R
        center = abs(self.packet.extension(np.zeros((1, 3)))[0])
        off_tube = abs(self.packet.extension(np.array([[0.0, 4 * np.sqrt(R), 0.0]]))[0])
        assert center > 0
        assert off_tube <= 0.1 * center

    def test_extension_matches_cap_integral(self):
        nodes, weights = self.plain.cap_rule()
        x = np.array([[0.0, 0.0], [3.0, 1.0], [-5.0, 2.0], [12.0, -3.0]])
        direct = np.exp(2j * np.pi * x @ nodes.T) @ (weights * self.plain.sphere_values(nodes))
        value = self.plain.extension(x)
        assert np.allclose(value, direct, atol=1e-8 * np.max(np.abs(direct)))

    def test_cap_rule_norm(self):
        nodes, weights = self.plain.cap_rule()
        assert np.sum(weights * self.plain.sphere_values(nodes)**2) == pytest.approx(self.plain.norm_squared, rel=1e-6)


def test_main_term_matches_sphere_form():
    symbol = KineticSymbol(2)
    V = GaussianRadial(2)
    packet = knapp_packet(4, dimension=2)
    quad = build_sphere_quadrature(2, 128)
    f = np.sqrt(quad.weights) * packet.sphere_values(quad.nodes)
    form = np.real(f @ assemble_vs(V, quad, symbol).matrix @ f)
    assert form > 0
    assert main_term(V, packet, 2) == pytest.approx(form, rel=1e-2)


def test_main_term_scale_limit():
    with pytest.raises(ScaleTooLarge, match=r"R <= 2048 at M=2"):
        main_term(GaussianRadial(2), knapp_packet(1e5, dimension=2), 2)
    with pytest.raises(ScaleTooLarge, match=r"R <= 1024 at M=4"):
        main_term(GaussianRadial(2), knapp_packet(1e4, dimension=2), 4)


class TestQuadraticForm:
    @classmethod
    def setup_class(cls):
        cls.V = GaussianRadial(3)
        cls.result = knapp_quadratic_form(cls.V, knapp_packet(16), 2, amalgam=1.0)

    def test_keys(self):
        assert set(self.result) == {
            "R", "M", "main_term", "tail_bound", "total", "tail_extrapolated", "C_N", "N"
        }

    def test_lower_bound(self):
        assert self.result["main_term"] > 0
        assert self.result["tail_bound"] >= 0
        assert self.result["total"] == pytest.approx(self.result["main_term"] - self.result["tail_bound"])
        assert self.result["total"] > 0
        assert np.isfinite(self.result["C_N"])

    def test_invalid(self):
        with pytest.raises(ValueError):
            knapp_quadratic_form(self.V, knapp_packet(16), 1.5)
        with pytest.raises(ScaleTooLarge):
            knapp_quadratic_form(GaussianRadial(2), knapp_packet(1e5, dimension=2), 2)


def test_knapp_sweep():
    result = knapp_sweep(GaussianRadial(2), [4, 16, 1e5], 0.1)
    table = result["table"]
    assert len(table) == 3
    assert list(table["certified"]) == [True, True, False]
    assert "ScaleTooLarge" in table["error"].iloc[2]
    assert result["R0"] == 4.0


def test_place_caps():
    directions = place_caps(3, 16, 4)
    assert directions.shape == (4, 3)
    assert np.allclose(directions[0], [1.0, 0.0, 0.0])
    assert np.allclose(np.linalg.norm(directions, axis=1), 1.0)
    separation = 3 / np.sqrt(16)
    for a in range(4):
        for b in range(a + 1, 4):
            assert np.arccos(min(abs(directions[a] @ directions[b]), 1.0)) >= separation
    with pytest.raises(PlacementFailed):
        place_caps(2, 16, 10)


def test_multi_cap_certificate():
    V = GaussianRadial(3)
    spectrum = vs_spectrum(assemble_vs(V, build_sphere_quadrature(3, 16), KineticSymbol(3)))
    result = multi_cap_certificate(V, 16, 3, 2, spectrum=spectrum)
    assert result["K_requested"] == 3
    assert result["K_achieved"] == 3
    assert len(result["forms"]) == 3
    assert "direction" in result["forms"].columns
    assert result["overlaps"].shape == (3, 3)
    assert result["max_overlap"] < 1e-8
    assert result["positive_eigenvalues"] >= 3
    assert result["consistent"] is True
