import logging
import numpy as np
import pandas as pd
import scipy.linalg
from scipy import special
from . import utils
from .harmonic import KineticSymbol, sphere_area
from .potentials import GridSampled, Mollified, Potential
from .quadrature import SphereQuadrature, gegenbauer_rule

logger = logging.getLogger(__name__)


class OperatorMatrix:
    def __init__(self, matrix, symmetry="general", label="", params=None) -> None:
        """
        matrix : np.ndarray
            square matrix of the discretized operator

        symmetry : str
            possible values: "hermitian", "general"
            a hermitian matrix is checked against max|A - A^*| <= HERMITIAN_TOL * max|A|
            and then symmetrized exactly
            default : "general"

        label : str
            name of the operator the matrix discretizes
            default : ""

        params : dict
            parameters the matrix was assembled with
            default : None
        """
        matrix = np.array(matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise utils.DimensionMismatch(f"operator matrix has to be square, got shape {matrix.shape}")
        if symmetry not in ("hermitian", "general"):
            raise ValueError(f'symmetry has to be "hermitian" or "general", got {symmetry!r}')
        if symmetry == "hermitian":
            scale = np.max(np.abs(matrix)) if matrix.size else 0.0
            defect = np.max(np.abs(matrix - matrix.conj().T)) if matrix.size else 0.0
            if defect > utils.HERMITIAN_TOL * max(scale, np.finfo(float).tiny):
                raise ValueError(f"{label or 'matrix'} is not hermitian (defect {defect:.3e}, scale {scale:.3e})")
            matrix = (matrix + matrix.conj().T) / 2
            if np.iscomplexobj(matrix) and not np.any(matrix.imag):
                matrix = matrix.real
        self.matrix = matrix
        self.matrix.setflags(write=False)
        self.symmetry = symmetry
        self.label = label
        self.params = params or {}

    def __repr__(self) -> str:
        return f"OperatorMatrix(label={self.label!r}, size={self.size}, symmetry={self.symmetry!r})"

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_hermitian(self) -> bool:
        return self.symmetry == "hermitian"

    def norm(self) -> float:
        """Spectral norm."""
        return float(scipy.linalg.norm(self.matrix, 2)) if self.size else 0.0

    def __sub__(self, other) -> "OperatorMatrix":
        symmetry = "hermitian" if self.is_hermitian and other.is_hermitian else "general"
        return OperatorMatrix(self.matrix - other.matrix, symmetry, f"{self.label} - {other.label}")

    def to_frame(self) -> pd.DataFrame:
        rows, cols = np.indices(self.matrix.shape)
        return pd.DataFrame({
            "row": rows.ravel(),
            "col": cols.ravel(),
            "real": np.real(self.matrix).ravel(),
            "imag": np.imag(self.matrix).ravel(),
        })

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)


class SpectralResult:
    def __init__(self, eigenvalues, singular_values, vectors=None, label="", params=None) -> None:
        self.eigenvalues = eigenvalues
        self.singular_values = singular_values
        self.vectors = vectors
        self.label = label
        self.params = params or {}

    def __repr__(self) -> str:
        top = ", ".join(f"{value:.6g}" for value in self.eigenvalues[:3])
        return f"SpectralResult(label={self.label!r}, size={len(self.eigenvalues)}, top=[{top}])"

    def schatten_norm(self, p) -> float:
        if np.isinf(p):
            return float(np.max(self.singular_values, initial=0.0))
        if p < 1:
            raise utils.InvalidExponents(f"Schatten exponent has to be >= 1, got {p}")
        return float(np.sum(self.singular_values**p)**(1 / p))

    @property
    def schatten(self) -> dict:
        return {p: self.schatten_norm(p) for p in (1, 2, 3, 4, np.inf)}

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.eigenvalues), initial=0.0))

    @property
    def positive(self):
        """Eigenvalues with positive real part, in descending order."""
        return self.eigenvalues[np.real(self.eigenvalues) > 0]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "index": np.arange(len(self.eigenvalues)),
            "real": np.real(self.eigenvalues),
            "imag": np.imag(self.eigenvalues),
        })


def node_weights(quad: SphereQuadrature, symbol: KineticSymbol):
    """Quadrature weights of d omega (or d sigma) on the Fermi sphere of radius k_0."""
    k0 = symbol.fermi_radius
    return quad.weights * k0**(symbol.dimension - 1) * symbol.measure_factor


def fermi_nodes(quad: SphereQuadrature, symbol: KineticSymbol):
    return symbol.fermi_radius * quad.nodes


def _gram_kernel(V: GridSampled, xi_a, sqrt_wa, xi_b, sqrt_wb):
    """(sqrt(wa) E_a) diag(V h^d) (sqrt(wb) E_b)^*, E[i, n] = exp(-2 pi i xi_i . x_n)."""
    points = V.grid_points()
    values = V.samples.ravel() * V.spacing**V.dimension
    matrix = np.zeros((len(xi_a), len(xi_b)), dtype=complex)
    chunk = max(1, 2**22 // max(len(xi_a), len(xi_b)))
    for start in range(0, len(points), chunk):
        block = slice(start, start + chunk)
        Ea = sqrt_wa[:, None] * np.exp(-2j * np.pi * xi_a @ points[block].T)
        Eb = sqrt_wb[:, None] * np.exp(-2j * np.pi * xi_b @ points[block].T)
        matrix += (Ea * values[None, block]) @ Eb.conj().T
    return matrix


def cross_kernel(V: Potential, xi_a, sqrt_wa, xi_b, sqrt_wb):
    """K[i, j] = sqrt(wa_i) V^(xi_a_i - xi_b_j) sqrt(wb_j)."""
    if isinstance(V, GridSampled):
        return _gram_kernel(V, xi_a, sqrt_wa, xi_b, sqrt_wb)
    difference = xi_a[:, None, :] - xi_b[None, :, :]
    if isinstance(V, Mollified) and isinstance(V.base, GridSampled):
        damping = np.exp(-np.pi * V.width**2 * np.sum(difference**2, axis=-1))
        return _gram_kernel(V.base, xi_a, sqrt_wa, xi_b, sqrt_wb) * damping
    return sqrt_wa[:, None] * V.fourier_transform(difference) * sqrt_wb[None, :]


def assemble_vs(V: Potential, quad: SphereQuadrature, symbol: KineticSymbol) -> OperatorMatrix:
    """
    M[i, j] = sqrt(w_i) V^(xi_i - xi_j) sqrt(w_j) on the nodes xi_i of the Fermi sphere.
    Grid-sampled potentials go through the physical-space Gram factorization.
    """
    if quad.dimension != V.dimension or symbol.dimension != V.dimension:
        raise utils.DimensionMismatch(
            f"potential (d={V.dimension}), quadrature (d={quad.dimension}) and symbol "
            f"(d={symbol.dimension}) have to share the dimension"
        )
    xi = fermi_nodes(quad, symbol)
    sqrt_w = np.sqrt(node_weights(quad, symbol))
    matrix = cross_kernel(V, xi, sqrt_w, xi, sqrt_w)

    if V.is_real and np.iscomplexobj(matrix) and V.is_radial:
        matrix = matrix.real
    symmetry = "hermitian" if V.is_real else "general"
    params = {"order": quad.order, "nodes": quad.size, "convention": symbol.convention}
    logger.debug(f"assembled V_S on {quad.size} nodes ({symmetry})")
    return OperatorMatrix(matrix, symmetry, "V_S", params)


def harmonic_multiplicity(d, degree) -> int:
    if d == 2:
        return 1 if degree == 0 else 2
    count = special.comb(degree + d - 1, d - 1, exact=True)
    if degree >= 2:
        count -= special.comb(degree + d - 3, d - 1, exact=True)
    return int(count)


def _normalized_gegenbauer(d, degree, t):
    if d == 2:
        return special.eval_chebyt(degree, t)
    if d == 3:
        return special.eval_legendre(degree, t)
    alpha = (d - 2) / 2
    return special.eval_gegenbauer(degree, alpha, t) / special.eval_gegenbauer(degree, alpha, 1.0)


def funk_hecke_spectrum(V: Potential, symbol: KineticSymbol, l_max, n=None) -> pd.DataFrame:
    """
    Eigenvalues of V_S for radial V by degree of spherical harmonics:
    a_l = k_0^{d-1} |S^{d-2}| int_{-1}^1 V^(k_0 sqrt(2 - 2t)) C_l(t) (1 - t^2)^{(d-3)/2} dt.

    V : Potential
        radial model with a Fourier transform

    symbol : KineticSymbol
        Fermi radius and measure convention

    l_max : int
        largest degree, >= 0

    n : int
        number of Gegenbauer nodes
        default : max(64, l_max + 32)
    """
    if not V.is_radial:
        raise utils.NotRadial(f"{type(V).__name__} is not radial, use assemble_vs")
    if l_max < 0:
        raise ValueError(f"l_max has to be >= 0, got {l_max}")
    d = V.dimension
    n = max(64, l_max + 32) if n is None else n
    t, w = gegenbauer_rule(d, n)
    k0 = symbol.fermi_radius
    xi = np.zeros((len(t), d))
    xi[:, 0] = k0 * np.sqrt(np.maximum(2 - 2 * t, 0.0))
    kernel = V.fourier_transform(xi)
    factor = k0**(d - 1) * sphere_area(d - 1) * symbol.measure_factor

    degrees = np.arange(l_max + 1)
    eigenvalues = np.array([factor * np.sum(w * kernel * _normalized_gegenbauer(d, l, t)) for l in degrees])
    if V.is_real:
        eigenvalues = np.real(eigenvalues)
    return pd.DataFrame({
        "degree": degrees,
        "eigenvalue": eigenvalues,
        "multiplicity": [harmonic_multiplicity(d, l) for l in degrees],
    })


def vs_spectrum(M: OperatorMatrix, k=None, vectors=False) -> SpectralResult:
    """
    Dense spectrum of an operator matrix, eigenvalues sorted by descending real part.
    k limits the number of returned eigenvectors.
    """
    n = M.size
    k = n if k is None else k
    if not 0 <= k <= n:
        raise ValueError(f"k has to lie in [0, {n}], got {k}")
    try:
        if M.is_hermitian:
            values, vecs = scipy.linalg.eigh(M.matrix)
        else:
            values, vecs = scipy.linalg.eig(M.matrix)
        singular = scipy.linalg.svdvals(M.matrix)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise utils.ConvergenceFailure(f"eigendecomposition of {M.label} failed: {exc}", {"size": n}) from exc
    order = np.argsort(-np.real(values), kind="stable")
    values, vecs = values[order], vecs[:, order]
    return SpectralResult(values, singular, vecs[:, :k] if vectors else None, M.label, M.params)


def schatten_norm(M, p) -> float:
    result = M if isinstance(M, SpectralResult) else vs_spectrum(M)
    return result.schatten_norm(p)


def predicted_energy(a, lam, symbol: KineticSymbol):
    """Leading weak-coupling energy exp(-1 / (lam * c * a)); nan where a <= 0."""
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.exp(-1.0 / (lam * symbol.coupling_factor * a))
    return np.where(a > 0, value, np.nan)


def mollified_limit_check(V: Potential, quad: SphereQuadrature, symbol: KineticSymbol, n_steps) -> pd.DataFrame:
    """Spectral-norm distances between V_S and V_S of V mollified at widths 2^-n, n = 1..n_steps."""
    reference = assemble_vs(V, quad, symbol)
    rows = []
    for n in range(1, n_steps + 1):
        width = 2.0**-n
        mollified = assemble_vs(Mollified(V, width), quad, symbol)
        distance = float(scipy.linalg.norm(mollified.matrix - reference.matrix, 2))
        logger.debug(f"mollifier width {width:.3e}: distance {distance:.3e}")
        rows.append({"step": n, "width": width, "distance": distance})
    return pd.DataFrame(rows)
