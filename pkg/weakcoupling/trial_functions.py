import logging
import numpy as np
import pandas as pd
import scipy.linalg
from . import utils
from .harmonic import KineticSymbol, sphere_area, surface_measure_ft, unit_sphere_ft
from .potentials import Potential
from .quadrature import build_sphere_quadrature, gauss_panels

logger = logging.getLogger(__name__)

# chi^ below 1e-16 of its maximum beyond this cap radius (in units of R^-1/2)
CAP_CUTOFF = 1.72


def radial_trial_value(V: Potential, symbol: KineticSymbol, r_max=None, max_shells=None) -> float:
    """
    <1, V_S 1> = int_0^inf r^{d-1} |(d sigma)^(r)|^2 (int_S V(r w) dw) dr, integrated over
    unit shells [k, k+1) of 16 Gauss panels each and summed until the tail is negligible.
    """
    d = symbol.dimension
    if V.dimension != d:
        raise utils.DimensionMismatch(f"potential has d={V.dimension}, symbol has d={d}")
    k0 = symbol.fermi_radius
    if V.is_radial:
        average = lambda r: sphere_area(d) * V.radial(r)
    else:
        quad = build_sphere_quadrature(d, 32)
        average = lambda r: V.evaluate(r[:, None, None] * quad.nodes[None, :, :]) @ quad.weights

    panel_edges = np.linspace(0.0, 1.0, 17)

    def shell(k):
        upper = k + 1.0 if r_max is None else min(k + 1.0, r_max)
        if upper <= k:
            return 0.0
        r, w = gauss_panels(k + panel_edges * (upper - k), 8)
        kernel = np.abs(surface_measure_ft(symbol, k0, r))**2
        return float(np.real(np.sum(w * r**(d - 1) * kernel * average(r))))

    if r_max is not None:
        return float(sum(shell(k) for k in range(int(np.ceil(r_max)))))
    value, shells, extrapolated = utils.truncated_sum(
        shell, max_terms=max_shells, label="radial trial form"
    )
    logger.debug(f"radial trial form: {shells} unit shells, extrapolated={extrapolated}")
    return float(value)


def transverse_frame(direction):
    """Orthonormal basis of the complement of direction, shape (d, d-1)."""
    return scipy.linalg.null_space(np.asarray(direction, dtype=float)[None, :])


def transverse_directions(direction, n_theta=None):
    """Nodes and weights on the unit sphere S^{d-2} of the complement of direction."""
    basis = transverse_frame(direction)
    d = len(direction)
    if d == 2:
        return np.stack([basis[:, 0], -basis[:, 0]]), np.ones(2)
    if d != 3:
        raise utils.UnsupportedDimension(f"Knapp packets are available for d = 2, 3, got d={d}")
    n_theta = utils.ANGULAR_NODES if n_theta is None else n_theta
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    nodes = np.cos(theta)[:, None] * basis[:, 0] + np.sin(theta)[:, None] * basis[:, 1]
    return nodes, np.full(n_theta, 2 * np.pi / n_theta)


class CapPacket:
    def __init__(self, R, direction, symmetrized=True, A=None) -> None:
        """
        R : float
            scale of the packet, >= 4: cap of angular size R^-1/2 around direction,
            extension concentrated on a tube of length R and radius R^1/2

        direction : array-like
            unit vector in R^d, d = 2 or 3

        symmetrized : bool
            If True, the real packet psi(xi) = [phi(xi) + phi(-xi)] / 2 is used
            default : True

        A : float
            width of the Gaussian bump chi^(zeta) = e^{pi/A^2} A^d exp(-pi A^2 |zeta|^2),
            whose inverse transform is >= 1 on the unit ball
            default : KNAPP_A
        """
        if R < 4:
            raise ValueError(f"R has to be >= 4, got {R}")
        direction = np.asarray(direction, dtype=float)
        norm = np.linalg.norm(direction)
        if not norm > 0:
            raise ValueError("direction has to be non-zero")
        self.R = float(R)
        self.direction = direction / norm
        self.dimension = len(direction)
        if self.dimension not in (2, 3):
            raise utils.UnsupportedDimension(f"Knapp packets are available for d = 2, 3, got d={self.dimension}")
        self.symmetrized = symmetrized
        self.A = utils.KNAPP_A if A is None else float(A)
        self.v_max = CAP_CUTOFF * 2.0 / self.A

    def __repr__(self) -> str:
        return (
            f"CapPacket(R={self.R}, direction={np.round(self.direction, 6).tolist()}, "
            f"symmetrized={self.symmetrized})"
        )

    def bump_hat(self, zeta1, v):
        A, d = self.A, self.dimension
        return np.exp(np.pi / A**2) * A**d * np.exp(-np.pi * A**2 * (zeta1**2 + v**2))

    def _cap_coordinates(self, v):
        """(R (xi_1 - 1), xi_1) at transverse cap coordinate v = R^1/2 |xi'|."""
        ratio = v**2 / self.R
        xi1 = np.sqrt(1.0 - ratio)
        return -v**2 / (1.0 + xi1), xi1

    def _plus_cap(self, xi1):
        transverse = np.sqrt(np.maximum(1.0 - xi1**2, 0.0))
        zeta1 = np.where(xi1 > 0, -transverse**2 / (1.0 + np.abs(xi1)), -2.0) * self.R
        return self.R**((self.dimension - 1) / 4) * self.bump_hat(zeta1, np.sqrt(self.R) * transverse)

    def sphere_values(self, nodes):
        """phi (or psi) at points of the unit sphere."""
        xi1 = np.asarray(nodes) @ self.direction
        if self.symmetrized:
            return (self._plus_cap(xi1) + self._plus_cap(-xi1)) / 2
        return self._plus_cap(xi1)

    @property
    def norm_squared(self) -> float:
        """||phi||^2 = |S^{d-2}| int chi^(R(xi_1 - 1), v)^2 v^{d-2} dv / xi_1, halved for psi."""
        v, w = gauss_panels(np.linspace(0.0, self.v_max, 9), 16)
        zeta1, xi1 = self._cap_coordinates(v)
        value = sphere_area(self.dimension - 1) * np.sum(w * self.bump_hat(zeta1, v)**2 * v**(self.dimension - 2) / xi1)
        return float(value / 2 if self.symmetrized else value)

    def _v_rule(self, sigma_max, eta_max):
        n_v = 64 + int(np.ceil(6 * (sigma_max * self.v_max**2 + eta_max * self.v_max)))
        if n_v > utils.KNAPP_MAX_NODES:
            raise utils.ScaleTooLarge(
                f"cap quadrature needs {n_v} nodes at sigma={sigma_max:.3g}, eta={eta_max:.3g} "
                f"(limit {utils.KNAPP_MAX_NODES})"
            )
        panels = int(np.ceil(n_v / 16))
        v, w = gauss_panels(np.linspace(0.0, self.v_max, panels + 1), 16)
        zeta1, xi1 = self._cap_coordinates(v)
        density = w * self.bump_hat(zeta1, v) * v**(self.dimension - 2) / xi1
        return v, zeta1, density

    def profile_grid(self, sigma, eta):
        """Psi(sigma_a, eta_b) on a tensor grid, shape (len(sigma), len(eta))."""
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        v, zeta1, density = self._v_rule(np.max(np.abs(sigma)), np.max(np.abs(eta)))
        phase = np.exp(2j * np.pi * sigma[:, None] * zeta1[None, :]) * density[None, :]
        transverse = unit_sphere_ft(self.dimension - 1, v[:, None] * eta[None, :])
        return phase @ transverse

    def profile(self, sigma, eta):
        """Psi(sigma_i, eta_i) elementwise."""
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        v, zeta1, density = self._v_rule(np.max(np.abs(sigma)), np.max(np.abs(eta)))
        out = np.empty(len(sigma), dtype=complex)
        chunk = max(1, 2**20 // len(v))
        for start in range(0, len(sigma), chunk):
            s, e = sigma[start:start + chunk], eta[start:start + chunk]
            kernel = np.exp(2j * np.pi * s[:, None] * zeta1[None, :]) * unit_sphere_ft(
                self.dimension - 1, e[:, None] * v[None, :]
            )
            out[start:start + chunk] = kernel @ density
        return out

    def packet_coordinates(self, x):
        x = np.asarray(x, dtype=float)
        s = x @ self.direction
        rho = np.linalg.norm(x - s[..., None] * self.direction, axis=-1)
        return s, rho

    def extension(self, x):
        """(phi d omega)^ at points x (complex), or the real (psi d omega)^ if symmetrized."""
        x = np.asarray(x, dtype=float)
        s, rho = self.packet_coordinates(x)
        shape = s.shape
        s, rho = s.reshape(-1), rho.reshape(-1)
        amplitude = self.R**(-(self.dimension - 1) / 4) * self.profile(s / self.R, rho / np.sqrt(self.R))
        value = np.exp(2j * np.pi * s) * amplitude
        return (value.real if self.symmetrized else value).reshape(shape)

    def cap_rule(self, n_v=48, n_theta=None) -> tuple:
        """Nodes and d omega weights on the cap around direction (upper cap only)."""
        directions, angle_weights = transverse_directions(self.direction, n_theta)
        v, w = gauss_panels(np.linspace(0.0, self.v_max, 4), n_v // 3)
        _, xi1 = self._cap_coordinates(v)
        d = self.dimension
        nodes = (xi1[:, None, None] * self.direction + (v / np.sqrt(self.R))[:, None, None] * directions[None, :, :])
        weights = (w * v**(d - 2) / xi1)[:, None] * angle_weights[None, :] * self.R**(-(d - 1) / 2)
        return nodes.reshape(-1, d), weights.ravel()

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "direction": self.direction.tolist(),
            "symmetrized": self.symmetrized,
            "A": self.A,
        }


def knapp_packet(R, direction=None, symmetrized=True, dimension=3) -> CapPacket:
    if direction is None:
        direction = np.eye(dimension)[0]
    return CapPacket(R, direction, symmetrized)


def main_term(V: Potential, packet: CapPacket, M, n_theta=None) -> float:
    """
    int over the enlarged tube {|s| <= M R, rho <= M R^1/2} of V |E|^2, E the packet
    extension, by Gauss panels of unit length (8 points in s, 4 points in rho).
    """
    R, d = packet.R, packet.dimension
    s_half, rho_max = M * R, M * np.sqrt(R)
    n_s = 8 * int(np.ceil(2 * s_half))
    if n_s > utils.KNAPP_MAX_NODES:
        R_max = (utils.KNAPP_MAX_NODES // 8) / (2 * M)
        raise utils.ScaleTooLarge(
            f"tube quadrature needs {n_s} nodes along the packet (R={R}, M={M}), limit {utils.KNAPP_MAX_NODES}; "
            f"use R <= {R_max:.6g} at M={M}"
        )
    s, w_s = gauss_panels(np.linspace(-s_half, s_half, int(np.ceil(2 * s_half)) + 1), 8)
    rho, w_rho = gauss_panels(np.linspace(0.0, rho_max, int(np.ceil(rho_max)) + 1), 4)
    directions, w_theta = transverse_directions(packet.direction, n_theta)

    Psi = packet.profile_grid(s / R, rho / np.sqrt(R))
    Phi = R**(-(d - 1) / 4) * np.exp(2j * np.pi * s)[:, None] * Psi
    density = (Phi.real if packet.symmetrized else np.abs(Phi))**2
    density *= w_s[:, None] * (w_rho * rho**(d - 2))[None, :]

    total = 0.0
    chunk = max(1, 2**20 // (len(rho) * len(w_theta)))
    transverse = rho[:, None, None] * directions[None, :, :]
    for start in range(0, len(s), chunk):
        block = slice(start, start + chunk)
        points = s[block, None, None, None] * packet.direction + transverse[None, :, :, :]
        values = np.real(V.evaluate(points)) @ w_theta
        total += float(np.sum(values * density[block]))
    return total


def _tail_annulus(V: Potential, packet: CapPacket, M, k, n_theta=None) -> float:
    """
    R int env |Psi(sigma, eta)|^2 eta^{d-2} over the scaled annulus
    2^{k+1} M box minus 2^k M box, env the envelope of |V|.
    """
    R, d = packet.R, packet.dimension
    inner, outer = 2.0**k * M, 2.0**(k + 1) * M
    directions, w_theta = transverse_directions(packet.direction, n_theta)

    def geometric(low, high):
        edges = [low]
        while edges[-1] < high:
            edges.append(min(high, max(2 * edges[-1], edges[-1] + 1.0)))
        return np.array(edges)

    def rectangle(sigma_edges, eta_edges):
        sigma, w_sigma = gauss_panels(sigma_edges, 8)
        eta, w_eta = gauss_panels(eta_edges, 8)
        Psi2 = np.abs(packet.profile_grid(sigma, eta))**2
        s, rho = R * sigma, np.sqrt(R) * eta
        points = (
            s[:, None, None, None] * packet.direction
            + rho[None, :, None, None] * directions[None, None, :, :]
        )
        envelope = V.envelope(points) @ w_theta
        weights = w_sigma[:, None] * (w_eta * eta**(d - 2))[None, :]
        return R * float(np.sum(envelope * Psi2 * weights))

    side = np.linspace(inner, outer, 9)
    eta_full = np.concatenate([[0.0], geometric(1.0, outer)]) if outer > 1 else np.array([0.0, outer])
    total = rectangle(side, eta_full) + rectangle(-side[::-1], eta_full)
    sigma_mid = np.linspace(-inner, inner, 17)
    total += rectangle(sigma_mid, side)
    return total


def knapp_quadratic_form(V: Potential, packet: CapPacket, M, amalgam=None, tail_order=None, n_theta=None) -> dict:
    """
    Lower bound main_term - tail_bound for <phi, V_S phi> = int V |(phi d omega)^|^2.

    V : Potential
        potential with pointwise values and an envelope

    packet : CapPacket

    M : float
        enlargement of the tube, >= 2

    amalgam : float
        amalgam norm of V; if given, the fitted constant C_N = tail M^N / amalgam is reported
        default : None

    tail_order : int
        N in C_N M^-N
        default : TAIL_ORDER
    """
    if M < 2:
        raise ValueError(f"M has to be >= 2, got {M}")
    tail_order = utils.TAIL_ORDER if tail_order is None else tail_order
    main = main_term(V, packet, M, n_theta)
    tail, shells, extrapolated = utils.truncated_sum(
        lambda k: _tail_annulus(V, packet, M, k, n_theta), max_terms=6, label="Knapp tail"
    )
    c_n = tail * M**tail_order / amalgam if amalgam else np.nan
    logger.debug(f"R={packet.R}, M={M}: main {main:.4e}, tail {tail:.4e} ({shells} annuli)")
    return {
        "R": packet.R,
        "M": float(M),
        "main_term": main,
        "tail_bound": float(tail),
        "total": main - float(tail),
        "tail_extrapolated": extrapolated,
        "C_N": float(c_n),
        "N": tail_order,
    }


def knapp_sweep(V: Potential, R_values, eps, direction=None, amalgam=None) -> dict:
    """Certificates over R with M = R^eps; R_0 is the first R with a positive lower bound."""
    rows = []
    for R in R_values:
        packet = knapp_packet(R, direction, True, V.dimension)
        M = max(2.0, R**eps)
        try:
            row = knapp_quadratic_form(V, packet, M, amalgam)
            row["normalized"] = row["main_term"] / (M * R**-eps)
            row["certified"] = row["total"] > 0
            row["error"] = None
        except (utils.ScaleTooLarge, utils.NumericalError) as exc:
            logger.warning(f"R={R}: {exc}")
            row = {"R": float(R), "M": M, "certified": False, "error": f"{type(exc).__name__}: {exc}"}
        rows.append(row)
    table = pd.DataFrame(rows)
    certified = table[table["certified"]]
    R0 = float(certified["R"].iloc[0]) if len(certified) else None
    return {"table": table, "R0": R0}


def _fibonacci_directions(d, n):
    if d == 2:
        angle = np.pi * np.arange(n) / n
        return np.column_stack([np.cos(angle), np.sin(angle)])
    index = np.arange(n) + 0.5
    z = 1 - 2 * index / n
    phi = np.pi * (1 + 5**0.5) * index
    r = np.sqrt(1 - z**2)
    return np.column_stack([z, r * np.cos(phi), r * np.sin(phi)])


def place_caps(d, R, K, first=None):
    """
    K directions, starting at first (default e_1) and added greedily by proximity to it,
    with pairwise line angle arccos|u . u'| >= 3 R^-1/2.
    """
    first = np.eye(d)[0] if first is None else np.asarray(first, dtype=float) / np.linalg.norm(first)
    separation = 3.0 / np.sqrt(R)
    n = max(256, int(np.ceil(4 * np.pi * R))) if d == 3 else max(256, int(np.ceil(2 * np.pi * np.sqrt(R))))
    candidates = _fibonacci_directions(d, n)
    candidates = candidates[np.argsort(-np.abs(candidates @ first), kind="stable")]
    accepted = [first]
    for u in candidates:
        if len(accepted) == K:
            break
        angles = np.arccos(np.clip(np.abs(np.array(accepted) @ u), 0.0, 1.0))
        if np.all(angles >= separation):
            accepted.append(u)
    if len(accepted) < K:
        raise utils.PlacementFailed(
            f"only {len(accepted)} of {K} caps fit with separation {separation:.4f}",
            {"placed": len(accepted), "requested": K}
        )
    return np.array(accepted[:K])


def multi_cap_certificate(V: Potential, R, K, M, spectrum=None, amalgam=None) -> dict:
    """
    K symmetrized packets on separated caps; every packet with a positive lower bound
    certifies one positive eigenvalue of V_S (min-max), since the packets are orthogonal.

    spectrum : SpectralResult
        spectrum of the assembled V_S, for the min-max cross-check
        default : None
    """
    d = V.dimension
    directions = place_caps(d, R, K)
    packets = [CapPacket(R, u, True) for u in directions]
    forms = [knapp_quadratic_form(V, packet, M, amalgam) for packet in packets]

    overlaps = np.eye(K)
    for a, packet in enumerate(packets):
        nodes, weights = packet.cap_rule()
        own = packet.sphere_values(nodes)
        norm_a = np.sqrt(packet.norm_squared)
        for b in range(a + 1, K):
            other = packets[b]
            pairing = 2 * np.sum(weights * own * other.sphere_values(nodes))
            overlaps[a, b] = overlaps[b, a] = pairing / (norm_a * np.sqrt(other.norm_squared))

    achieved = int(sum(form["total"] > 0 for form in forms))
    positive = None if spectrum is None else int(np.sum(np.real(spectrum.eigenvalues) > 0))
    if positive is not None and achieved > positive:
        logger.warning(f"{achieved} certified caps exceed the {positive} positive eigenvalues of the assembled V_S")
    return {
        "R": float(R),
        "M": float(M),
        "K_requested": K,
        "K_achieved": achieved,
        "forms": pd.DataFrame(forms).assign(direction=[u.tolist() for u in directions]),
        "overlaps": overlaps,
        "max_overlap": float(np.max(np.abs(overlaps - np.eye(K)), initial=0.0)),
        "positive_eigenvalues": positive,
        "consistent": None if positive is None else achieved <= positive,
    }
