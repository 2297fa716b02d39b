from weakcoupling import (
    KineticSymbol,
    UnsupportedDimension,
    build_sphere_quadrature,
    gauss_panels,
    gegenbauer_rule,
    shell_grid
)
import numpy as np
import pandas as pd
import pytest


def test_gauss_panels():
    x, w = gauss_panels([0.0, 1.0, 2.0, 3.0], 3)
    assert len(x) == len(w) == 9
    assert np.sum(w * x**5) == pytest.approx(3**6 / 6, rel=1e-13)


def test_circle_rule():
    quad = build_sphere_quadrature(2, 8)
    assert quad.size == 16
    assert quad.exactness_degree == 15
    assert quad.integrate(np.ones(quad.size)) == pytest.approx(2 * np.pi)
    phi = np.arctan2(quad.nodes[:, 1], quad.nodes[:, 0])
    for k in range(1, 16):
        assert abs(quad.integrate(np.cos(k * phi))) < 1e-12


def test_sphere_rule_moments():
    quad = build_sphere_quadrature(3, 10)
    x, y, z = quad.nodes.T
    assert np.allclose(np.linalg.norm(quad.nodes, axis=1), 1.0)
    assert quad.integrate(np.ones(quad.size)) == pytest.approx(4 * np.pi, rel=1e-13)
    assert quad.integrate(z**2) == pytest.approx(4 * np.pi / 3, rel=1e-13)
    assert quad.integrate(x**4) == pytest.approx(4 * np.pi / 5, rel=1e-13)
    assert quad.integrate(x**2 * y**2) == pytest.approx(4 * np.pi / 15, rel=1e-13)
    assert abs(quad.integrate(x * y * z)) < 1e-13


def test_sphere_rule_frame():
    quad = build_sphere_quadrature(3, 6)
    frame = quad.to_frame()
    assert isinstance(frame, pd.DataFrame)
    assert list(frame.columns) == ["x1", "x2", "x3", "weight"]
    assert len(frame) == len(quad)
    with pytest.raises(ValueError):
        quad.nodes[0, 0] = 2.0


def test_sphere_rule_errors():
    with pytest.raises(UnsupportedDimension):
        build_sphere_quadrature(4, 8)
    with pytest.raises(ValueError):
        build_sphere_quadrature(3, 2)


def test_gegenbauer_rule():
    t, w = gegenbauer_rule(3, 6)
    assert np.sum(w) == pytest.approx(2.0)
    assert np.sum(w * t**10) == pytest.approx(2 / 11)
    t, w = gegenbauer_rule(2, 6)
    assert np.sum(w) == pytest.approx(np.pi)


class TestShellGrid:
    @classmethod
    def setup_class(cls):
        cls.symbol = KineticSymbol(3, tau=0.5)
        cls.shells = shell_grid(cls.symbol, 16, e=1e-3)

    def test_grading(self):
        grading = self.shells.grading
        assert grading["ratio"] == 1.35
        assert grading["points_per_panel"] == 16
        assert grading["t_min"] <= 1e-4 + 1e-18
        assert self.shells.size == 16 * grading["panels"]

    def test_nodes(self):
        t = self.shells.t_nodes
        assert np.all((t > 0) & (t < 0.5))
        assert np.allclose(self.shells.radii("+")**2, 1 + t, rtol=1e-13)
        assert np.allclose(self.shells.radii("-")**2, 1 - t, rtol=1e-12)

    def test_integrals(self):
        assert self.shells.integrate(np.ones(self.shells.size)) == pytest.approx(0.5, rel=1e-13)
        assert self.shells.log_integral() == pytest.approx(np.log1p(0.5 / 1e-3), rel=1e-8)
        assert self.shells.log_integral(1e-2) == pytest.approx(np.log1p(0.5 / 1e-2), rel=1e-8)

    def test_frame(self):
        frame = self.shells.to_frame()
        assert list(frame.columns) == ["t", "weight", "r_plus", "r_minus"]

    def test_invalid(self):
        with pytest.raises(ValueError):
            shell_grid(self.symbol, 4)
        with pytest.raises(ValueError):
            shell_grid(self.symbol, 16, e=-1.0)


@pytest.mark.parametrize("e", [1e-4, 1e-6, 1e-9])
def test_shell_grid_resolves_energy(e):
    symbol = KineticSymbol(3, tau=0.5)
    shells = shell_grid(symbol, 16, e=e)
    t = shells.t_nodes
    assert shells.grading["t_min"] <= e / 10
    assert np.min(t) < e / 10
    assert np.count_nonzero((t >= e / 10) & (t <= 10 * e)) >= 10 * 16
    assert shells.log_integral() == pytest.approx(np.log1p(0.5 / e), rel=1e-8)
