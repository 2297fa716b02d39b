from weakcoupling import (
    BallIndicator,
    DimensionMismatch,
    GaussianRadial,
    GridSampled,
    KineticSymbol,
    OperatorMatrix,
    SpectralResult,
    assemble_vs,
    build_sphere_quadrature,
    funk_hecke_spectrum,
    mollified_limit_check,
    predicted_energy,
    schatten_norm,
    vs_spectrum
)
from weakcoupling.vs_operator import harmonic_multiplicity
import numpy as np
import pandas as pd
import pytest
from scipy import special


class TestGaussianSphere:
    @classmethod
    def setup_class(cls):
        cls.V = GaussianRadial(3)
        cls.symbol = KineticSymbol(3)
        cls.quad = build_sphere_quadrature(3, 24)
        cls.M = assemble_vs(cls.V, cls.quad, cls.symbol)
        cls.spectrum = vs_spectrum(cls.M)

    def test_matrix(self):
        assert isinstance(self.M, OperatorMatrix)
        assert self.M.is_hermitian is True
        assert self.M.size == self.quad.size
        assert not np.iscomplexobj(self.M.matrix)
        with pytest.raises(ValueError):
            self.M.matrix[0, 0] = 0.0

    def test_funk_hecke_closed_form(self):
        table = funk_hecke_spectrum(self.V, self.symbol, 6)
        assert list(table.columns) == ["degree", "eigenvalue", "multiplicity"]
        exact = 4 * np.pi * np.exp(-2 * np.pi) * special.spherical_in(np.arange(7), 2 * np.pi)
        assert np.allclose(table["eigenvalue"].values, exact, rtol=1e-10)
        assert table["eigenvalue"].iloc[0] == pytest.approx(1 - np.exp(-4 * np.pi), abs=1e-8)
        assert list(table["multiplicity"]) == [2 * l + 1 for l in range(7)]

    def test_dense_against_funk_hecke(self):
        table = funk_hecke_spectrum(self.V, self.symbol, 6)
        expected = np.sort(np.repeat(table["eigenvalue"].values, table["multiplicity"].values))[::-1]
        computed = np.real(self.spectrum.eigenvalues[:len(expected)])
        assert np.max(np.abs(computed - expected)) <= 1e-6
        assert computed[0] == pytest.approx(1 - np.exp(-4 * np.pi), abs=1e-8)

    def test_spectral_result(self):
        assert isinstance(self.spectrum, SpectralResult)
        values = np.real(self.spectrum.eigenvalues)
        assert np.all(np.diff(values) <= 0)
        assert self.spectrum.schatten_norm(2) == pytest.approx(np.linalg.norm(self.M.matrix), rel=1e-10)
        assert schatten_norm(self.M, np.inf) == pytest.approx(self.spectrum.spectral_radius, rel=1e-10)
        assert set(self.spectrum.schatten) == {1, 2, 3, 4, np.inf}
        frame = self.spectrum.to_frame()
        assert list(frame.columns) == ["index", "real", "imag"]

    def test_measure_convention_covariance(self):
        weighted = KineticSymbol(3, convention="weighted")
        a_weighted = np.real(vs_spectrum(assemble_vs(self.V, self.quad, weighted)).eigenvalues[0])
        a = np.real(self.spectrum.eigenvalues[0])
        assert a_weighted == pytest.approx(a / 2, rel=1e-12)
        for lam in (0.05, 0.1, 0.2):
            assert predicted_energy(a, lam, self.symbol) == pytest.approx(
                predicted_energy(a_weighted, lam, weighted), rel=1e-10
            )

    def test_to_frame(self):
        small = assemble_vs(self.V, build_sphere_quadrature(3, 4), self.symbol)
        frame = small.to_frame()
        assert list(frame.columns) == ["row", "col", "real", "imag"]
        assert len(frame) == small.size**2


def test_circle_funk_hecke():
    V = GaussianRadial(2)
    symbol = KineticSymbol(2)
    table = funk_hecke_spectrum(V, symbol, 3)
    expected = np.sort(np.repeat(table["eigenvalue"].values, table["multiplicity"].values))[::-1]
    spectrum = vs_spectrum(assemble_vs(V, build_sphere_quadrature(2, 16), symbol))
    assert np.allclose(np.real(spectrum.eigenvalues[:len(expected)]), expected, atol=1e-10)
    exact = 2 * np.pi * np.exp(-2 * np.pi) * special.iv(np.arange(4), 2 * np.pi)
    assert np.allclose(table["eigenvalue"].values, exact, rtol=1e-10)


def test_gram_route():
    V = GaussianRadial(2)
    symbol = KineticSymbol(2)
    quad = build_sphere_quadrature(2, 8)
    sampled = GridSampled.from_potential(V, 8.0, 64)
    exact = assemble_vs(V, quad, symbol).matrix
    gram = assemble_vs(sampled, quad, symbol).matrix
    assert np.max(np.abs(gram - exact)) < 1e-10


def test_complex_potential():
    V = GaussianRadial(3, amplitude=1 + 0.5j)
    M = assemble_vs(V, build_sphere_quadrature(3, 8), KineticSymbol(3))
    assert M.symmetry == "general"
    values = vs_spectrum(M).eigenvalues
    assert np.iscomplexobj(values)


def test_non_hermitian_rejected():
    with pytest.raises(ValueError):
        OperatorMatrix(np.array([[0.0, 1.0], [0.0, 0.0]]), "hermitian")
    with pytest.raises(DimensionMismatch):
        OperatorMatrix(np.zeros((2, 3)))


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        assemble_vs(GaussianRadial(2), build_sphere_quadrature(3, 8), KineticSymbol(3))


def test_harmonic_multiplicity():
    assert [harmonic_multiplicity(3, l) for l in range(4)] == [1, 3, 5, 7]
    assert [harmonic_multiplicity(2, l) for l in range(3)] == [1, 2, 2]
    assert harmonic_multiplicity(4, 2) == 9


def test_predicted_energy_nonpositive():
    values = predicted_energy(np.array([-1.0, 0.0, 1.0]), 0.5, KineticSymbol(3))
    assert np.isnan(values[0]) and np.isnan(values[1])
    assert values[2] == pytest.approx(np.exp(-2.0))


def test_mollified_limit():
    V = GaussianRadial(3)
    table = mollified_limit_check(V, build_sphere_quadrature(3, 8), KineticSymbol(3), 5)
    assert isinstance(table, pd.DataFrame)
    assert list(table.columns) == ["step", "width", "distance"]
    assert np.all(np.diff(table["distance"].values) < 0)
    assert table["distance"].iloc[-1] < 2e-2


def test_spectrum_stable_under_refinement():
    V = GaussianRadial(3)
    symbol = KineticSymbol(3)
    coarse = np.real(vs_spectrum(assemble_vs(V, build_sphere_quadrature(3, 24), symbol)).eigenvalues[:16])
    fine = np.real(vs_spectrum(assemble_vs(V, build_sphere_quadrature(3, 48), symbol)).eigenvalues[:16])
    assert np.max(np.abs(coarse - fine)) <= 1e-6


@pytest.mark.parametrize(
    "V",
    [GaussianRadial(3), BallIndicator(3), BallIndicator(3, radius=2.5)],
    ids=["gaussian", "ball", "wide_ball"]
)
def test_nonnegative_potential_gives_nonnegative_spectrum(V):
    symbol = KineticSymbol(3)
    quad = build_sphere_quadrature(3, 16)
    values = np.real(vs_spectrum(assemble_vs(V, quad, symbol)).eigenvalues)
    assert values[0] > 0
    assert values[-1] >= -1e-10 * values[0]
    flipped = np.real(vs_spectrum(assemble_vs(V.scaled(-1), quad, symbol)).eigenvalues)
    assert np.allclose(np.sort(flipped), np.sort(-values), atol=1e-12 * values[0])
