import logging
import numpy as np
import pandas as pd
import scipy.fft
from scipy.integrate import quad as adaptive_quad
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigs, eigsh, svds
from . import utils
from .harmonic import KineticSymbol
from .potentials import Potential
from .quadrature import ShellFamily, SphereQuadrature, shell_grid
from .vs_operator import OperatorMatrix, assemble_vs, cross_kernel, fermi_nodes, node_weights

logger = logging.getLogger(__name__)


class BoxGrid:
    def __init__(self, dimension, box_size, points) -> None:
        """
        dimension : int
            dimension d

        box_size : float
            side L of the periodic box [-L/2, L/2)^d

        points : int
            samples N per side, a power of two with N pi / L > 3
        """
        if points < 2 or points & (points - 1):
            raise ValueError(f"points has to be a power of two, got {points}")
        if not box_size > 0:
            raise ValueError(f"box_size has to be positive, got {box_size}")
        if not points * np.pi / box_size > 3:
            raise ValueError(
                f"dual grid too coarse: N pi / L = {points * np.pi / box_size:.3f} has to exceed 3"
            )
        self.dimension = int(dimension)
        self.box_size = float(box_size)
        self.points = int(points)
        self._frequencies = None

    def __repr__(self) -> str:
        return f"BoxGrid(dimension={self.dimension}, box_size={self.box_size}, points={self.points})"

    @property
    def spacing(self) -> float:
        return self.box_size / self.points

    @property
    def dual_spacing(self) -> float:
        return 1.0 / self.box_size

    @property
    def shape(self) -> tuple:
        return (self.points,) * self.dimension

    @property
    def size(self) -> int:
        return self.points**self.dimension

    @property
    def axes(self) -> tuple:
        return tuple(range(-self.dimension, 0))

    @property
    def axis(self):
        return -self.box_size / 2 + self.spacing * np.arange(self.points)

    def positions(self):
        """Grid points as an array of shape (N, ..., N, d)."""
        return np.stack(np.meshgrid(*[self.axis] * self.dimension, indexing="ij"), axis=-1)

    def frequencies(self):
        """Dual lattice k / L in FFT order, shape (N, ..., N, d)."""
        if self._frequencies is None:
            dual = scipy.fft.fftfreq(self.points, self.spacing)
            self._frequencies = np.stack(np.meshgrid(*[dual] * self.dimension, indexing="ij"), axis=-1)
        return self._frequencies

    def kinetic(self, symbol: KineticSymbol):
        return symbol.kinetic(self.frequencies())

    def samples(self, V: Potential):
        if V.dimension != self.dimension:
            raise utils.DimensionMismatch(f"potential has d={V.dimension}, grid has d={self.dimension}")
        if self.box_size < 4 * V.support_radius:
            logger.warning(
                f"box size {self.box_size} is below 4x the support radius {V.support_radius:.3g} of {V!r}"
            )
        return V.evaluate(self.positions())

    def multiply(self, multiplier, psi):
        """Fourier multiplier applied over the last d axes of psi."""
        return scipy.fft.ifftn(multiplier * scipy.fft.fftn(psi, axes=self.axes), axes=self.axes)

    def plane_waves(self, xi):
        """P[n, i] = exp(2 pi i x_n . xi_i) for the flattened grid points x_n."""
        x = self.positions().reshape(-1, self.dimension)
        return np.exp(2j * np.pi * x @ np.asarray(xi).T)

    def transform_at(self, f, xi, threshold=0.0):
        """Continuum Fourier transform h^d sum_n f(x_n) exp(-2 pi i x_n . xi) of a grid function."""
        x = self.positions().reshape(-1, self.dimension)
        values = np.asarray(f).reshape(-1)
        keep = np.abs(values) > threshold * np.max(np.abs(values), initial=0.0)
        x, values = x[keep], values[keep]
        xi = np.asarray(xi)
        out = np.empty(len(xi), dtype=complex)
        chunk = max(1, 2**22 // max(len(x), 1))
        for start in range(0, len(xi), chunk):
            phase = np.exp(-2j * np.pi * xi[start:start + chunk] @ x.T)
            out[start:start + chunk] = phase @ values
        return self.spacing**self.dimension * out


def _check_shift(e) -> None:
    if not e > 0:
        raise utils.NonPositiveShift(f"e has to be positive, got {e}")
    if e < utils.E_FLOOR:
        raise utils.ResolutionExceeded(f"e = {e:.3e} is below the resolvable floor {utils.E_FLOOR:.1e}", {"e": e})


def sqrt_parts(values) -> tuple:
    """(|V|^1/2, V^1/2 = |V|^1/2 sgn V) with sgn(0) = 1."""
    magnitude = np.abs(values)
    sign = np.ones_like(values, dtype=complex if np.iscomplexobj(values) else float)
    nonzero = magnitude > 0
    sign[nonzero] = values[nonzero] / magnitude[nonzero]
    root = np.sqrt(magnitude)
    return root, root * sign


class BsOperator:
    """
    BS(e) on a BoxGrid, either in the symmetrized form (T+e)^-1/2 V (T+e)^-1/2
    ("symmetric", real V) or literally as |V|^1/2 (T+e)^-1 V^1/2 ("literal").
    Both have the nonzero spectrum of BS(e).
    """

    def __init__(self, V: Potential, symbol: KineticSymbol, e, grid: BoxGrid, form="auto") -> None:
        _check_shift(e)
        if form == "auto":
            form = "symmetric" if V.is_real else "literal"
        if form not in ("symmetric", "literal"):
            raise ValueError(f'form has to be "auto", "symmetric" or "literal", got {form!r}')
        if form == "symmetric" and not V.is_real:
            raise ValueError("the symmetric form needs a real potential")
        self.V = V
        self.symbol = symbol
        self.e = e
        self.grid = grid
        self.form = form
        self.values = grid.samples(V)
        self.kinetic = grid.kinetic(symbol)
        if form == "symmetric":
            self.root_resolvent = (self.kinetic + e)**-0.5
        else:
            self.sqrt_abs, self.sqrt_v = sqrt_parts(self.values)
            self.resolvent = 1.0 / (self.kinetic + e)

    def __repr__(self) -> str:
        return f"BsOperator(V={self.V!r}, e={self.e}, grid={self.grid!r}, form={self.form!r})"

    @property
    def is_hermitian(self) -> bool:
        return self.form == "symmetric"

    @property
    def dtype(self):
        return np.float64 if self.is_hermitian else np.complex128

    def apply(self, psi):
        psi = np.asarray(psi)
        grid = self.grid
        if self.form == "symmetric":
            out = grid.multiply(self.root_resolvent, self.values * grid.multiply(self.root_resolvent, psi))
            return out.real if np.isrealobj(psi) else out
        return self.sqrt_abs * grid.multiply(self.resolvent, self.sqrt_v * psi)

    def apply_adjoint(self, psi):
        if self.form == "symmetric":
            return self.apply(psi)
        return np.conj(self.sqrt_v) * self.grid.multiply(self.resolvent, self.sqrt_abs * np.asarray(psi))

    def linear_operator(self) -> LinearOperator:
        shape = self.grid.shape
        n = self.grid.size
        return LinearOperator(
            (n, n),
            matvec=lambda v: self.apply(v.reshape(shape)).reshape(-1),
            rmatvec=lambda v: self.apply_adjoint(v.reshape(shape)).reshape(-1),
            dtype=self.dtype
        )


def bs_apply(V: Potential, symbol: KineticSymbol, e, grid: BoxGrid, psi, form="auto"):
    return BsOperator(V, symbol, e, grid, form).apply(psi)


def bs_eigs_iterative(V: Potential, symbol: KineticSymbol, e, grid: BoxGrid, k=3, form="auto") -> pd.DataFrame:
    """
    Top k eigenvalues (by real part) of BS(e) by ARPACK on the FFT operator, each
    certified by its relative residual |A x - mu x| / |mu| <= RESIDUAL_TOL.
    """
    operator = BsOperator(V, symbol, e, grid, form)
    A = operator.linear_operator()
    n = grid.size
    if not 0 < k < n - 1:
        raise ValueError(f"k has to lie in (0, {n - 1}), got {k}")
    try:
        if operator.is_hermitian:
            values, vectors = eigsh(A, k=k, which="LA")
        else:
            values, vectors = eigs(A, k=k, which="LR")
    except ArpackNoConvergence as exc:
        raise utils.NoConvergence(
            f"ARPACK did not converge for e={e:.3e}",
            {"e": e, "converged": len(exc.eigenvalues), "requested": k}
        ) from exc
    order = np.argsort(-np.real(values), kind="stable")
    values, vectors = values[order], vectors[:, order]
    residuals = np.array([
        np.linalg.norm(A.matvec(vectors[:, j]) - values[j] * vectors[:, j])
        / (abs(values[j]) * np.linalg.norm(vectors[:, j]))
        for j in range(k)
    ])
    if np.any(residuals > utils.RESIDUAL_TOL):
        raise utils.NoConvergence(
            f"eigenpairs of BS(e={e:.3e}) fail the residual test",
            {"e": e, "residuals": residuals.tolist()}
        )
    logger.debug(f"BS(e={e:.3e}): top eigenvalue {values[0]:.10g}, max residual {residuals.max():.2e}")
    return pd.DataFrame({"e": e, "index": np.arange(k), "value": values, "residual": residuals})


def bs_dense_oracle(V: Potential, symbol: KineticSymbol, e, grid: BoxGrid, form="auto") -> OperatorMatrix:
    n = grid.size
    if n > utils.DENSE_MAX_POINTS:
        raise utils.SizeExceeded(f"dense oracle needs at most {utils.DENSE_MAX_POINTS} grid points, got {n}")
    operator = BsOperator(V, symbol, e, grid, form)
    matrix = np.empty((n, n), dtype=operator.dtype)
    for start in range(0, n, 256):
        stop = min(start + 256, n)
        basis = np.zeros((stop - start, n))
        basis[np.arange(stop - start), np.arange(start, stop)] = 1.0
        matrix[:, start:stop] = operator.apply(basis.reshape((-1,) + grid.shape)).reshape(stop - start, n).T
    symmetry = "hermitian" if operator.is_hermitian else "general"
    return OperatorMatrix(matrix, symmetry, "BS(e)", {"e": e, "points": grid.points, "form": operator.form})


def bump_cutoff(u):
    """Smooth chi with chi = 1 on [0, 1], chi = 0 on [2, inf)."""
    u = np.asarray(u, dtype=float)

    def f(x):
        with np.errstate(divide="ignore"):
            return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)

    left, right = f(2.0 - u), f(u - 1.0)
    return left / (left + right)


class BsComponents:
    """
    Splitting BS(e) = BS^high + BS^low, BS^low = BS^low_sing + BS^low_reg in the
    literal form |V|^1/2 m(T) V^1/2, with the cutoff chi(T / tau).
    """

    names = ("full", "high", "low", "sing", "reg")

    def __init__(self, V: Potential, symbol: KineticSymbol, e, grid: BoxGrid, quad: SphereQuadrature) -> None:
        _check_shift(e)
        self.V = V
        self.symbol = symbol
        self.e = e
        self.grid = grid
        self.quad = quad
        self.tau = symbol.tau
        self.sqrt_abs, self.sqrt_v = sqrt_parts(grid.samples(V))
        kinetic = grid.kinetic(symbol)
        chi = bump_cutoff(kinetic / self.tau)
        resolvent = 1.0 / (kinetic + e)
        self.multipliers = {"full": resolvent, "high": (1.0 - chi) * resolvent, "low": chi * resolvent}
        k0 = symbol.fermi_radius
        self.sing_factor = 2.0 / abs(float(symbol.dp(k0))) * np.log1p(self.tau / e)
        self.plane_waves = grid.plane_waves(k0 * quad.nodes)
        self.weights = quad.weights * k0**(symbol.dimension - 1)

    def __repr__(self) -> str:
        return f"BsComponents(V={self.V!r}, e={self.e}, tau={self.tau}, grid={self.grid!r})"

    def _sing(self, psi, adjoint=False):
        h_d = self.grid.spacing**self.grid.dimension
        left, right = (np.conj(self.sqrt_v), self.sqrt_abs) if adjoint else (self.sqrt_abs, self.sqrt_v)
        weighted = right * psi
        flat = weighted.reshape(-1, self.grid.size)
        coefficients = self.weights * h_d * (flat @ self.plane_waves.conj())
        return self.sing_factor * left * (coefficients @ self.plane_waves.T).reshape(weighted.shape)

    def apply(self, name, psi, adjoint=False):
        if name not in self.names:
            raise ValueError(f"component has to be one of {self.names}, got {name!r}")
        psi = np.asarray(psi)
        if name == "sing":
            return self._sing(psi, adjoint)
        if name == "reg":
            return self.apply("low", psi, adjoint) - self._sing(psi, adjoint)
        left, right = (np.conj(self.sqrt_v), self.sqrt_abs) if adjoint else (self.sqrt_abs, self.sqrt_v)
        return left * self.grid.multiply(self.multipliers[name], right * psi)

    def linear_operator(self, name) -> LinearOperator:
        shape = self.grid.shape
        n = self.grid.size
        return LinearOperator(
            (n, n),
            matvec=lambda v: self.apply(name, v.reshape(shape)).reshape(-1),
            rmatvec=lambda v: self.apply(name, v.reshape(shape), adjoint=True).reshape(-1),
            dtype=np.complex128
        )

    def dense(self, name) -> OperatorMatrix:
        n = self.grid.size
        if n > utils.DENSE_MAX_POINTS:
            raise utils.SizeExceeded(f"dense components need at most {utils.DENSE_MAX_POINTS} grid points, got {n}")
        basis = np.eye(n).reshape((n,) + self.grid.shape)
        matrix = self.apply(name, basis).reshape(n, n).T
        return OperatorMatrix(matrix, "general", f"BS_{name}(e)", {"e": self.e, "tau": self.tau})

    def norm(self, name) -> float:
        """Operator norm of one component (largest singular value)."""
        value = svds(self.linear_operator(name), k=1, return_singular_vectors=False)
        return float(value[0])


def bs_split(V: Potential, symbol: KineticSymbol, e, grid: BoxGrid, quad: SphereQuadrature) -> BsComponents:
    return BsComponents(V, symbol, e, grid, quad)


def bs_operator_norm(V: Potential, symbol: KineticSymbol, e, grid: BoxGrid) -> dict:
    operator = BsOperator(V, symbol, e, grid, form="literal")
    value = float(svds(operator.linear_operator(), k=1, return_singular_vectors=False)[0])
    return {"e": e, "norm": value, "log_ratio": value / max(np.log(1.0 / e), 1.0)}


def _low_regular_part(V, symbol, quad, shells: ShellFamily, e):
    """
    sum_+- int_0^tau [r^{d-1} K(t) K'(t) / |p'(r)| - K(0) K'(0) / |p'(k_0)|] / (t + e) dt
    with K(t)[i, j] = sqrt(w_i) V^(xi_i - r xi_j) sqrt(w_j) on the sphere nodes.
    """
    d = symbol.dimension
    k0 = symbol.fermi_radius
    xi = fermi_nodes(quad, symbol)
    outer = np.sqrt(node_weights(quad, symbol))
    inner = np.sqrt(quad.weights)
    K0 = cross_kernel(V, xi, outer, k0 * quad.nodes, inner)
    K0p = cross_kernel(V, k0 * quad.nodes, inner, xi, outer)
    reference = k0**(d - 1) * (K0 @ K0p) / abs(float(symbol.dp(k0)))
    total = np.zeros_like(reference, dtype=complex)
    for branch in ("+", "-"):
        for t, weight, r in zip(shells.t_nodes, shells.t_weights, shells.radii(branch)):
            K = cross_kernel(V, xi, outer, r * quad.nodes, inner)
            Kp = cross_kernel(V, r * quad.nodes, inner, xi, outer)
            term = r**(d - 1) * (K @ Kp) / abs(float(symbol.dp(r))) - reference
            total += weight * term / (t + e)
    return total


def _high_part(V, symbol, quad, grid: BoxGrid, e):
    values = grid.samples(V).reshape(-1)
    xi = fermi_nodes(quad, symbol)
    sqrt_w = np.sqrt(node_weights(quad, symbol))
    P = grid.plane_waves(xi)
    kinetic = grid.kinetic(symbol)
    with np.errstate(divide="ignore"):
        multiplier = np.where(kinetic >= symbol.tau, 1.0 / (kinetic + e), 0.0)
    columns = (values[:, None] * P).T.reshape((len(xi),) + grid.shape)
    resolved = grid.multiply(multiplier, columns).reshape(len(xi), -1).T
    h_d = grid.spacing**grid.dimension
    return sqrt_w[:, None] * (P.conj().T @ (h_d * values[:, None] * resolved)) * sqrt_w[None, :]


def ws_matrix(
    V: Potential,
    symbol: KineticSymbol,
    e,
    quad: SphereQuadrature,
    shells: ShellFamily,
    grid: BoxGrid,
    self_test=True
) -> OperatorMatrix:
    """
    W_S(e) = F_S V [(T+e)^-1 - (2/|p'(k_0)|) ln(1 + tau/e) F_S^* F_S] V F_S^* on the sphere nodes.

    The window {T < tau} is integrated over the shells S_t^+- with the singular part
    subtracted inside the t-integrand; the rest {T >= tau} is applied on the box.

    e : float
        energy, e = 0 allowed

    shells : ShellFamily
        graded t-grid resolving 1/(t + e)

    self_test : bool
        If True, the shell integral is repeated with twice as many points per panel and
        the refined value is returned; GradingInsufficient if the two differ by more
        than WS_REFINEMENT_TOL
        default : True
    """
    if e < 0:
        raise utils.NonPositiveShift(f"e has to be >= 0, got {e}")
    low = _low_regular_part(V, symbol, quad, shells, e)
    if self_test:
        finer = shell_grid(
            symbol, 2 * shells.grading["points_per_panel"], shells.e, t_min=shells.grading["t_min"]
        )
        refined = _low_regular_part(V, symbol, quad, finer, e)
        gap = np.max(np.abs(refined - low))
        scale = max(np.max(np.abs(refined)), 1.0)
        if gap > utils.WS_REFINEMENT_TOL * scale:
            raise utils.GradingInsufficient(
                f"t-refinement changes W_S({e:.3e}) by {gap:.3e}",
                {"gap": float(gap), "points_per_panel": shells.grading["points_per_panel"]}
            )
        low = refined
    high = _high_part(V, symbol, quad, grid, e)
    matrix = low + high
    symmetry = "hermitian" if V.is_real else "general"
    return OperatorMatrix(matrix, symmetry, "W_S(e)", {"e": e, "tau": symbol.tau, "shells": shells.size})


def bs_lambda_operator(
    V: Potential,
    symbol: KineticSymbol,
    lam,
    quad: SphereQuadrature,
    shells: ShellFamily,
    grid: BoxGrid,
    ws=None
) -> OperatorMatrix:
    """B_S(lam) = V_S - lam W_S(0); pass a precomputed W_S(0) as ws to reuse it across lam."""
    vs = assemble_vs(V, quad, symbol)
    ws = ws_matrix(V, symbol, 0.0, quad, shells, grid) if ws is None else ws
    matrix = vs.matrix - lam * ws.matrix
    symmetry = "hermitian" if vs.is_hermitian and ws.is_hermitian else "general"
    return OperatorMatrix(matrix, symmetry, "B_S(lambda)", {"lambda": lam, **ws.params})


def spectral_measure_check(f, g, h, symbol: KineticSymbol, grid: BoxGrid, quad: SphereQuadrature, shells: ShellFamily) -> dict:
    """
    <f, h(T) g> once as a Fourier multiplier on the box (lhs) and once as the shell
    integral sum_+- int h(t) <F_t f, F_t g> dt / |p'(r_+-(t))| (rhs).
    """
    f = np.asarray(f)
    g = np.asarray(g)
    d = grid.dimension
    h_d = grid.spacing**d
    f_hat = h_d * scipy.fft.fftn(f)
    g_hat = h_d * scipy.fft.fftn(g)
    lhs = complex(np.sum(np.conj(f_hat) * h(grid.kinetic(symbol)) * g_hat) / grid.box_size**d)

    rhs = 0.0 + 0.0j
    for branch in ("+", "-"):
        radii = shells.radii(branch)
        h_values = h(shells.t_nodes)
        active = np.nonzero(h_values)[0]
        if len(active) == 0:
            continue
        nodes = (radii[active, None, None] * quad.nodes[None, :, :]).reshape(-1, d)
        f_shell = grid.transform_at(f, nodes, threshold=1e-16).reshape(len(active), -1)
        g_shell = grid.transform_at(g, nodes, threshold=1e-16).reshape(len(active), -1)
        pairing = (np.conj(f_shell) * g_shell) @ quad.weights * radii[active]**(d - 1)
        density = shells.t_weights[active] * h_values[active] / np.abs(symbol.dp(radii[active]))
        rhs += complex(np.sum(density * pairing))

    gap = abs(lhs - rhs) / abs(lhs) if lhs != 0 else abs(rhs)
    return {"lhs": lhs, "rhs": rhs, "gap": float(gap)}


def log_weight_integrals(symbol: KineticSymbol, e, p=2.0) -> dict:
    """
    g(e) = int_{1/2}^{3/2} k^{d(1/p - 1/p') - 1} / (T(k) + e) dk and
    g_MT(e) = int_{1/2}^{3/2} dk / (T(k) + e).
    """
    _check_shift(e)
    if p < 1:
        raise utils.InvalidExponents(f"p has to be >= 1, got {p}")
    d = symbol.dimension
    exponent = d * (1 / p - (1 - 1 / p)) - 1
    k0 = symbol.fermi_radius
    steps = e * 10.0**np.arange(0, 12)
    points_left = [k0 - s for s in steps if k0 - s > 0.5]
    points_right = [k0 + s for s in steps if k0 + s < 1.5]

    def integral(weight):
        f = lambda k: weight(k) / (symbol.kinetic_radial(k) + e)
        left = adaptive_quad(f, 0.5, k0, points=points_left or None, limit=200, epsabs=1e-14, epsrel=1e-12)[0]
        right = adaptive_quad(f, k0, 1.5, points=points_right or None, limit=200, epsabs=1e-14, epsrel=1e-12)[0]
        return left + right

    return {
        "e": e,
        "p": p,
        "exponent": exponent,
        "g": integral(lambda k: k**exponent),
        "g_mt": integral(lambda k: 1.0),
    }
