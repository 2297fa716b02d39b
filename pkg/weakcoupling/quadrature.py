import logging
import numpy as np
import pandas as pd
from scipy import special
from . import utils
from .harmonic import KineticSymbol, sphere_area

logger = logging.getLogger(__name__)


def gauss_panels(edges, n) -> tuple:
    """
    Composite Gauss-Legendre rule with n points on every panel [edges[i], edges[i+1]].
    Returns (nodes, weights).
    """
    x, w = special.roots_legendre(n)
    edges = np.asarray(edges, dtype=float)
    left, right = edges[:-1, None], edges[1:, None]
    half = (right - left) / 2
    nodes = (left + right) / 2 + half * x[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


class SphereQuadrature:
    def __init__(self, dimension, nodes, weights, exactness_degree, order) -> None:
        self.dimension = dimension
        self.nodes = np.asarray(nodes, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.exactness_degree = exactness_degree
        self.order = order
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __repr__(self) -> str:
        return (
            f"SphereQuadrature(dimension={self.dimension}, order={self.order}, "
            f"size={self.size}, exactness_degree={self.exactness_degree})"
        )

    def __len__(self) -> int:
        return self.size

    @property
    def size(self) -> int:
        return len(self.weights)

    def integrate(self, values):
        return np.asarray(values) @ self.weights

    def to_frame(self) -> pd.DataFrame:
        columns = [f"x{i + 1}" for i in range(self.dimension)]
        frame = pd.DataFrame(self.nodes, columns=columns)
        frame["weight"] = self.weights
        return frame


def build_sphere_quadrature(d, order) -> SphereQuadrature:
    """
    d : int
        2 (trapezoid rule on the circle) or 3 (Gauss-Legendre in cos(theta) times
        trapezoid in phi, polar axis e_3)

    order : int
        harmonic degree integrated exactly, >= 4
    """
    if d not in (2, 3):
        raise utils.UnsupportedDimension(
            f"sphere quadrature is available for d = 2, 3 only, got d={d}; radial potentials in "
            "other dimensions go through funk_hecke_spectrum"
        )
    if order < 4:
        raise ValueError(f"order has to be >= 4, got {order}")

    if d == 2:
        n = 2 * order
        phi = 2 * np.pi * np.arange(n) / n
        nodes = np.column_stack([np.cos(phi), np.sin(phi)])
        weights = np.full(n, 2 * np.pi / n)
        return SphereQuadrature(2, nodes, weights, 2 * order - 1, order)

    n_theta = order // 2 + 1
    n_phi = 2 * n_theta
    z, w_z = special.roots_legendre(n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    zz, pp = np.meshgrid(z, phi, indexing="ij")
    sin_theta = np.sqrt(1 - zz**2)
    nodes = np.column_stack([
        (sin_theta * np.cos(pp)).ravel(),
        (sin_theta * np.sin(pp)).ravel(),
        zz.ravel(),
    ])
    weights = (w_z[:, None] * np.full(n_phi, 2 * np.pi / n_phi)[None, :]).ravel()
    logger.debug(f"sphere rule d=3: {n_theta} polar x {n_phi} azimuthal nodes")
    return SphereQuadrature(3, nodes, weights, order, order)


def gegenbauer_rule(d, n) -> tuple:
    """Gauss rule on [-1, 1] for the weight (1 - t^2)^{(d-3)/2}, exact up to degree 2n - 1."""
    if d < 2:
        raise ValueError(f"d has to be >= 2, got {d}")
    if n < 2:
        raise ValueError(f"n has to be >= 2, got {n}")
    alpha = (d - 3) / 2
    nodes, weights = special.roots_jacobi(n, alpha, alpha)
    return nodes, weights


class ShellFamily:
    def __init__(self, symbol, t_nodes, t_weights, r_plus, r_minus, e, grading) -> None:
        self.symbol = symbol
        self.t_nodes = t_nodes
        self.t_weights = t_weights
        self.r_plus = r_plus
        self.r_minus = r_minus
        self.e = e
        self.grading = grading

    def __repr__(self) -> str:
        return (
            f"ShellFamily(size={self.size}, tau={self.symbol.tau}, e={self.e}, "
            f"t_min={self.t_nodes[0]:.3e}, ratio={self.grading['ratio']})"
        )

    @property
    def size(self) -> int:
        return len(self.t_nodes)

    def radii(self, branch):
        return self.r_plus if branch == "+" else self.r_minus

    def integrate(self, values):
        """Integral over (0, tau] of a function sampled at t_nodes (last axis)."""
        return np.asarray(values) @ self.t_weights

    def log_integral(self, e=None):
        e = self.e if e is None else e
        return float(np.sum(self.t_weights / (self.t_nodes + e)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.t_nodes,
            "weight": self.t_weights,
            "r_plus": self.r_plus,
            "r_minus": self.r_minus,
        })


def shell_grid(symbol: KineticSymbol, n_t, e=0.0, t_min=None) -> ShellFamily:
    """
    Graded Gauss-Legendre grid on (0, tau].

    symbol : KineticSymbol
        symbol whose shells S_t^+- = {|p| = t} are sampled

    n_t : int
        Gauss-Legendre points per panel, >= 8

    e : float
        energy the 1/(t+e) weighted integrals are resolved for
        default : 0.0

    t_min : float
        smallest panel edge above 0
        default : max(e, 1e-12) / 10
    """
    if n_t < 8:
        raise ValueError(f"n_t has to be >= 8, got {n_t}")
    if e < 0:
        raise ValueError(f"e has to be >= 0, got {e}")
    tau = symbol.tau
    t_floor = max(e, 1e-12) / 10 if t_min is None else t_min
    ratio = utils.GRADING_RATIO
    n_panels = max(1, int(np.ceil(np.log(tau / t_floor) / np.log(ratio))))
    edges = np.concatenate([[0.0], tau * ratio**-np.arange(n_panels, -1, -1.0)])
    t_nodes, t_weights = gauss_panels(edges, n_t)
    r_plus = symbol.shell_radius(t_nodes, "+")
    r_minus = symbol.shell_radius(t_nodes, "-")
    logger.debug(f"shell grid: {n_panels + 1} panels, {len(t_nodes)} nodes, smallest edge {edges[1]:.3e}")
    grading = {"ratio": ratio, "panels": n_panels + 1, "points_per_panel": n_t, "t_min": float(edges[1])}
    return ShellFamily(symbol, t_nodes, t_weights, r_plus, r_minus, e, grading)
