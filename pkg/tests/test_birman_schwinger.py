from weakcoupling import (
    BallIndicator,
    BoxGrid,
    BsComponents,
    GaussianRadial,
    GridSampled,
    KineticSymbol,
    NonPositiveShift,
    OperatorMatrix,
    OscillatingSlab,
    ResolutionExceeded,
    SizeExceeded,
    assemble_vs,
    bs_apply,
    bs_dense_oracle,
    bs_eigs_iterative,
    bs_lambda_operator,
    bs_operator_norm,
    bs_split,
    build_sphere_quadrature,
    log_weight_integrals,
    shell_grid,
    spectral_measure_check,
    vs_spectrum,
    ws_matrix
)
from weakcoupling.birman_schwinger import bump_cutoff, sqrt_parts
import numpy as np
import pandas as pd
import pytest


class TestBoxGrid:
    @classmethod
    def setup_class(cls):
        cls.grid = BoxGrid(2, 16.0, 32)

    def test_attributes(self):
        assert self.grid.spacing == 0.5
        assert self.grid.dual_spacing == 1 / 16
        assert self.grid.shape == (32, 32)
        assert self.grid.size == 1024
        assert self.grid.positions().shape == (32, 32, 2)
        assert self.grid.frequencies().shape == (32, 32, 2)
        assert self.grid.axis[0] == -8.0

    def test_kinetic_zero_on_lattice(self):
        kinetic = self.grid.kinetic(KineticSymbol(2))
        assert kinetic.min() == 0.0
        assert np.sum(kinetic == 0.0) == 2

    def test_multiply_identity(self):
        psi = np.random.default_rng(1).normal(size=self.grid.shape)
        assert np.allclose(self.grid.multiply(np.ones(self.grid.shape), psi), psi)

    def test_transform_at(self):
        grid = BoxGrid(2, 8.0, 64)
        f = np.exp(-np.pi * np.sum(grid.positions()**2, axis=-1))
        xi = np.array([[0.0, 0.0], [0.3, 0.4]])
        assert np.allclose(grid.transform_at(f, xi), np.exp(-np.pi * np.sum(xi**2, axis=-1)), atol=1e-10)

    def test_invalid(self):
        with pytest.raises(ValueError):
            BoxGrid(2, 16.0, 24)
        with pytest.raises(ValueError):
            BoxGrid(2, 64.0, 16)


def test_sqrt_parts():
    magnitude, root = sqrt_parts(np.array([4.0, 0.0, -9.0]))
    assert np.allclose(magnitude, [2.0, 0.0, 3.0])
    assert np.allclose(root, [2.0, 0.0, -3.0])
    assert np.allclose(magnitude * root, [4.0, 0.0, -9.0])


def test_bump_cutoff():
    u = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 3.0])
    chi = bump_cutoff(u)
    assert np.allclose(chi[:3], 1.0)
    assert chi[3] == pytest.approx(0.5)
    assert np.allclose(chi[4:], 0.0)
    assert np.all(np.diff(bump_cutoff(np.linspace(0, 3, 301))) <= 0)


def test_shift_errors():
    grid = BoxGrid(2, 12.0, 16)
    V = GaussianRadial(2)
    with pytest.raises(NonPositiveShift):
        bs_apply(V, KineticSymbol(2), 0.0, grid, np.ones(grid.shape))
    with pytest.raises(ResolutionExceeded):
        bs_apply(V, KineticSymbol(2), 1e-12, grid, np.ones(grid.shape))


@pytest.mark.parametrize(
    "V",
    [GaussianRadial(2), BallIndicator(2), OscillatingSlab(2, eps=0.5)],
    ids=["gaussian", "ball", "slab"]
)
def test_oracle_equivalence(V):
    grid = BoxGrid(2, 12.0, 16)
    symbol = KineticSymbol(2)
    dense = bs_dense_oracle(V, symbol, 1e-2, grid)
    assert isinstance(dense, OperatorMatrix)
    assert dense.is_hermitian is True
    matrix = np.asarray(dense.matrix)
    assert np.max(np.abs(matrix - matrix.conj().T)) <= 1e-10 * np.max(np.abs(matrix))
    exact = np.real(vs_spectrum(dense).eigenvalues[:3])
    table = bs_eigs_iterative(V, symbol, 1e-2, grid, k=3)
    assert list(table.columns) == ["e", "index", "value", "residual"]
    assert np.max(np.abs(np.real(table["value"].values) - exact)) <= 1e-6


def test_literal_form_matches_symmetric():
    grid = BoxGrid(2, 12.0, 16)
    symbol = KineticSymbol(2)
    V = GaussianRadial(2)
    symmetric = np.real(vs_spectrum(bs_dense_oracle(V, symbol, 1e-2, grid, "symmetric")).eigenvalues[:3])
    literal = vs_spectrum(bs_dense_oracle(V, symbol, 1e-2, grid, "literal")).eigenvalues[:3]
    assert np.allclose(np.real(literal), symmetric, rtol=1e-9)
    assert np.allclose(np.imag(literal), 0.0, atol=1e-9)


def test_dense_size_limit():
    with pytest.raises(SizeExceeded):
        bs_dense_oracle(GaussianRadial(2), KineticSymbol(2), 1e-2, BoxGrid(2, 32.0, 128))


def test_constant_potential():
    grid = BoxGrid(2, 16.0, 32)
    V = GridSampled(2, 16.0, np.ones(grid.shape))
    for e in (1e-2, 1e-4):
        table = bs_eigs_iterative(V, KineticSymbol(2), e, grid, k=1)
        assert np.real(table["value"].iloc[0]) == pytest.approx(1 / e, rel=1e-10)


def test_monotonicity():
    grid = BoxGrid(2, 16.0, 32)
    symbol = KineticSymbol(2)
    V = GaussianRadial(2)
    top = [np.real(bs_eigs_iterative(V, symbol, e, grid, k=1)["value"].iloc[0]) for e in (1e-1, 1e-2, 1e-3)]
    assert top[0] < top[1] < top[2]


def test_operator_norm():
    grid = BoxGrid(2, 16.0, 32)
    result = bs_operator_norm(GaussianRadial(2), KineticSymbol(2), 1e-2, grid)
    assert set(result) == {"e", "norm", "log_ratio"}
    top = np.real(bs_eigs_iterative(GaussianRadial(2), KineticSymbol(2), 1e-2, grid, k=1)["value"].iloc[0])
    assert result["norm"] >= top * (1 - 1e-8)
    assert result["log_ratio"] == pytest.approx(result["norm"] / np.log(100.0))


def test_norm_sweep():
    grid = BoxGrid(2, 12.5, 32)
    energies = 10.0**-np.arange(2, 8)
    results = [bs_operator_norm(GaussianRadial(2), KineticSymbol(2), e, grid) for e in energies]
    norms = np.array([result["norm"] for result in results])
    ratios = np.array([result["log_ratio"] for result in results])
    assert np.all(np.diff(norms) > 0)
    assert np.allclose(ratios, norms / np.log(1 / energies))
    assert np.max(ratios) <= 2 * ratios[0]
    assert ratios[-1] < ratios[0]


class TestSplitting:
    @classmethod
    def setup_class(cls):
        cls.grid = BoxGrid(2, 12.0, 32)
        cls.symbol = KineticSymbol(2)
        cls.quad = build_sphere_quadrature(2, 16)
        cls.V = GaussianRadial(2)
        cls.components = bs_split(cls.V, cls.symbol, 1e-3, cls.grid, cls.quad)

    def test_type(self):
        assert isinstance(self.components, BsComponents)
        with pytest.raises(ValueError):
            self.components.apply("middle", np.ones(self.grid.shape))

    def test_identities(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            psi = rng.normal(size=self.grid.shape) + 1j * rng.normal(size=self.grid.shape)
            full = self.components.apply("full", psi)
            pieces = sum(self.components.apply(name, psi) for name in ("sing", "reg", "high"))
            assert np.linalg.norm(pieces - full) <= 1e-8 * np.linalg.norm(full)

    def test_full_matches_oracle(self):
        dense = self.components.dense("full").matrix
        oracle = bs_dense_oracle(self.V, self.symbol, 1e-3, self.grid, "literal").matrix
        assert np.allclose(dense, oracle, atol=1e-10 * np.max(np.abs(oracle)))

    def test_adjoint(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=self.grid.shape) + 1j * rng.normal(size=self.grid.shape)
        y = rng.normal(size=self.grid.shape) + 1j * rng.normal(size=self.grid.shape)
        for name in ("sing", "low"):
            left = np.vdot(y, self.components.apply(name, x))
            right = np.vdot(self.components.apply(name, y, adjoint=True), x)
            assert left == pytest.approx(right, rel=1e-10)

    def test_norms(self):
        assert self.components.norm("full") >= self.components.norm("high")
        assert self.components.norm("sing") > 0

    def test_singular_part_spectrum(self):
        values = np.linalg.eigvals(self.components.dense("sing").matrix)
        values = np.sort(np.real(values))[::-1][:self.quad.size]
        sampled = GridSampled.from_potential(self.V, self.grid.box_size, self.grid.points)
        expected = self.components.sing_factor * vs_spectrum(assemble_vs(sampled, self.quad, self.symbol)).eigenvalues
        expected = np.real(expected)
        assert np.allclose(values, expected, atol=1e-8 * expected[0])
        assert self.components.sing_factor == pytest.approx(np.log1p(0.5 / 1e-3))


class TestSecondOrderOperator:
    @classmethod
    def setup_class(cls):
        cls.symbol = KineticSymbol(2)
        cls.quad = build_sphere_quadrature(2, 8)
        cls.shells = shell_grid(cls.symbol, 8)
        cls.grid = BoxGrid(2, 16.0, 64)
        cls.V = GaussianRadial(2)
        cls.ws = ws_matrix(cls.V, cls.symbol, 0.0, cls.quad, cls.shells, cls.grid)

    def test_ws_matrix(self):
        assert self.ws.is_hermitian is True
        assert self.ws.size == self.quad.size
        assert np.all(np.isfinite(self.ws.matrix))
        assert self.ws.params["e"] == 0.0

    def test_lambda_operator(self):
        vs = assemble_vs(self.V, self.quad, self.symbol)
        B0 = bs_lambda_operator(self.V, self.symbol, 0.0, self.quad, self.shells, self.grid, ws=self.ws)
        assert np.allclose(B0.matrix, vs.matrix)
        B = bs_lambda_operator(self.V, self.symbol, 0.1, self.quad, self.shells, self.grid, ws=self.ws)
        assert np.allclose(B.matrix, vs.matrix - 0.1 * self.ws.matrix)
        assert B.is_hermitian is True

    def test_negative_shift(self):
        with pytest.raises(NonPositiveShift):
            ws_matrix(self.V, self.symbol, -1.0, self.quad, self.shells, self.grid)

    def test_convergence_to_zero_energy(self):
        energies = (1e-2, 1e-4, 1e-6)
        matrices = [ws_matrix(self.V, self.symbol, e, self.quad, self.shells, self.grid).matrix for e in energies]
        gaps = [np.linalg.norm(matrix - self.ws.matrix, 2) for matrix in matrices]
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] <= 1e-3 * np.linalg.norm(self.ws.matrix, 2)
        ratios = [np.linalg.norm(matrix, 2) / np.log(1 / e) for matrix, e in zip(matrices, energies)]
        assert ratios[0] > ratios[1] > ratios[2]
        assert ratios[2] < 0.5 * ratios[0]


def test_high_part_bounded():
    grid = BoxGrid(2, 12.5, 32)
    symbol = KineticSymbol(2)
    V = GaussianRadial(2)
    quad = build_sphere_quadrature(2, 16)
    norms = np.array([bs_split(V, symbol, e, grid, quad).norm("high") for e in (1e-2, 1e-4, 1e-6, 1e-8)])
    assert np.all(norms <= np.max(grid.samples(V)) / symbol.tau * (1 + 1e-8))
    assert np.max(norms) <= 1.02 * np.min(norms)


def test_regular_part_is_lower_order():
    grid = BoxGrid(2, 128.0, 512)
    symbol = KineticSymbol(2)
    V = GaussianRadial(2)
    quad = build_sphere_quadrature(2, 32)
    scaled = []
    for e in (1e-1, 1e-3):
        components = bs_split(V, symbol, e, grid, quad)
        scaled.append(components.norm("reg") / np.log(1 / e))
    assert scaled[1] <= 0.7 * scaled[0]


def test_spectral_measure_identity():
    symbol = KineticSymbol(2, tau=0.8)
    grid = BoxGrid(2, 256.0, 1024)
    quad = build_sphere_quadrature(2, 8)
    shells = shell_grid(symbol, 48)
    f = np.exp(-np.pi * np.sum(grid.positions()**2, axis=-1))
    tau = symbol.tau

    def h(t):
        t = np.asarray(t, dtype=float)
        inside = (t > tau / 4) & (t < tau / 2)
        return np.where(inside, np.exp(-((t - 3 * tau / 8) / (tau / 48))**2 / 2), 0.0)

    result = spectral_measure_check(f, f, h, symbol, grid, quad, shells)
    assert set(result) == {"lhs", "rhs", "gap"}
    assert abs(result["lhs"]) > 0
    assert result["gap"] <= 1e-6


def test_log_weight_integrals():
    symbol = KineticSymbol(3)
    ratios = []
    for e in np.geomspace(1e-8, 1e-2, 7):
        result = log_weight_integrals(symbol, e)
        assert set(result) >= {"e", "p", "g", "g_mt"}
        ratios.append(result["g_mt"] / max(np.log(1 / e), 1.0))
    assert 0.5 <= min(ratios) <= max(ratios) <= 2.0
    with pytest.raises(NonPositiveShift):
        log_weight_integrals(symbol, 0.0)
