import logging
import numpy as np
import pandas as pd
from scipy import special
from scipy.optimize import root_scalar
from . import utils

logger = logging.getLogger(__name__)


class KineticSymbol:
    _profiles = ("bcs", "power")
    _conventions = ("lebesgue", "weighted")

    def __init__(
        self,
        dimension,
        profile="bcs",
        s=2.0,
        tau=0.5,
        convention="lebesgue"
    ) -> None:
        """
        dimension : int
            dimension d of the ambient space, d >= 2

        profile : str
            radial profile p of the symbol T(xi) = |p(|xi|)|
            possible values: "bcs" (p(k) = k^2 - 1), "power" (p(k) = k^s - 1)
            default : "bcs"

        s : float
            ellipticity exponent of the "power" profile, 2d/(d+1) <= s < d
            ignored for "bcs"
            default : 2.0

        tau : float
            width of the low-energy window {T < tau}, 0 < tau < 1
            default : 0.5

        convention : str
            surface measure on the Fermi sphere
            possible values: "lebesgue" (d omega), "weighted" (d sigma = |p'|^-1 d omega)
            default : "lebesgue"
        """
        if int(dimension) != dimension or dimension < 2:
            raise ValueError(f"dimension has to be an integer >= 2, got {dimension}")
        if profile not in self._profiles:
            raise ValueError(f"profile has to be one of {self._profiles}, got {profile!r}")
        if convention not in self._conventions:
            raise ValueError(f"convention has to be one of {self._conventions}, got {convention!r}")
        if not 0 < tau < 1:
            raise ValueError(f"tau has to lie in (0, 1), got {tau}")
        self.dimension = int(dimension)
        self.profile = profile
        if profile == "bcs":
            self.s = 2.0
        else:
            lower = 2 * self.dimension / (self.dimension + 1)
            if not lower <= s < self.dimension:
                raise ValueError(
                    f"s has to satisfy {lower:.4f} <= s < {self.dimension} for d={self.dimension}, got {s}"
                )
            self.s = float(s)
        self.tau = float(tau)
        self.convention = convention
        self.fermi_radius = 1.0

    def __repr__(self) -> str:
        return (
            f"KineticSymbol(dimension={self.dimension}, profile={self.profile!r}, s={self.s}, "
            f"tau={self.tau}, convention={self.convention!r})"
        )

    def p(self, k):
        k = np.asarray(k, dtype=float)
        return k**self.s - 1.0

    def dp(self, k):
        k = np.asarray(k, dtype=float)
        return self.s * k**(self.s - 1.0)

    def kinetic(self, xi):
        """T(xi) = |p(|xi|)| for points xi of shape (..., d)"""
        xi = np.asarray(xi, dtype=float)
        return np.abs(self.p(np.linalg.norm(xi, axis=-1)))

    def kinetic_radial(self, k):
        return np.abs(self.p(k))

    @property
    def measure_factor(self) -> float:
        if self.convention == "weighted":
            return 1.0 / abs(float(self.dp(self.fermi_radius)))
        return 1.0

    @property
    def coupling_factor(self) -> float:
        # ln(1/e) ~ 1 / (lambda * coupling_factor * a) for an eigenvalue a of the
        # surface operator assembled in this convention
        if self.convention == "weighted":
            return 2.0
        return 2.0 / abs(float(self.dp(self.fermi_radius)))

    @property
    def tomas_stein(self) -> float:
        return 2 * (self.dimension + 1) / (self.dimension + 3)

    @property
    def tomas_stein_dual(self) -> float:
        return 2 * (self.dimension + 1) / (self.dimension - 1)

    def shell_radius(self, t, branch):
        """Radius r with p(r) = +t (branch "+") or p(r) = -t (branch "-")."""
        if branch not in ("+", "-"):
            raise ValueError(f'branch has to be "+" or "-", got {branch!r}')
        t_values = np.atleast_1d(np.asarray(t, dtype=float))
        k0 = self.fermi_radius
        if branch == "+":
            bracket = (k0, utils.ROOT_BRACKET[1] * k0)
            sign = 1.0
        else:
            bracket = (utils.ROOT_BRACKET[0] * k0, k0)
            sign = -1.0
        radii = np.empty_like(t_values)
        for n, t_value in enumerate(t_values):
            if t_value == 0:
                radii[n] = k0
                continue
            target = sign * t_value
            low, high = (self.p(bracket[0]) - target), (self.p(bracket[1]) - target)
            if low * high > 0:
                raise utils.RootNotFound(
                    f"no radius with p(r) = {target} in [{bracket[0]}, {bracket[1]}]",
                    {"t": float(t_value), "branch": branch}
                )
            result = root_scalar(
                lambda k: float(self.p(k)) - target,
                bracket=bracket,
                fprime=lambda k: float(self.dp(k)),
                method="brentq",
                xtol=1e-15,
                rtol=4 * np.finfo(float).eps
            )
            if not result.converged:
                raise utils.RootNotFound(f"root finder failed for t={t_value}", {"flag": result.flag})
            radii[n] = result.root
        return radii if np.ndim(t) else radii[0]

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "profile": self.profile,
            "s": self.s,
            "tau": self.tau,
            "convention": self.convention,
        }


def sphere_area(d) -> float:
    """|S^{d-1}|, with |S^0| = 2."""
    return float(2 * np.pi**(d / 2) / special.gamma(d / 2))


def bessel_j(nu, z):
    nu = np.asarray(nu, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(nu < 0):
        raise ValueError("order nu has to be non-negative")
    if np.any(~np.isfinite(z)) or np.any(z < 0):
        raise ValueError("argument z has to be finite and non-negative")
    return special.jv(nu, z)


def unit_sphere_ft(d, r):
    """
    Inverse Fourier transform of the surface measure of the unit sphere S^{d-1}
    at radius r: 2 pi r^{-(d-2)/2} J_{(d-2)/2}(2 pi r). Valid for d >= 1.
    """
    r = np.abs(np.asarray(r, dtype=float))
    nu = (d - 2) / 2
    small = r < 1e-6
    safe = np.where(small, 1.0, r)
    value = 2 * np.pi * safe**(-nu) * special.jv(nu, 2 * np.pi * safe)
    series = sphere_area(d) * (1.0 - (np.pi * r)**2 / (nu + 1))
    return np.where(small, series, value)


def surface_measure_ft(symbol: KineticSymbol, rho, r):
    rho = np.asarray(rho, dtype=float)
    value = rho**(symbol.dimension - 1) * unit_sphere_ft(symbol.dimension, rho * np.asarray(r, dtype=float))
    if symbol.convention == "weighted":
        value = value / np.abs(symbol.dp(rho))
    return value


def kernel_difference_bound(symbol: KineticSymbol, alpha, rho_samples, r_samples) -> dict:
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha has to lie in (0, 1], got {alpha}")
    rho = np.asarray(rho_samples, dtype=float)
    r = np.asarray(r_samples, dtype=float)
    low, high = np.sqrt(1 - symbol.tau), np.sqrt(1 + symbol.tau)
    if np.any((rho < low - 1e-12) | (rho > high + 1e-12)):
        logger.warning(f"rho samples outside [{low:.4f}, {high:.4f}] are evaluated anyway")

    rr, pp = np.meshgrid(r, rho)
    difference = np.abs(surface_measure_ft(symbol, pp, rr) - surface_measure_ft(symbol, 1.0, rr))
    d = symbol.dimension
    envelope = np.abs(pp - 1.0)**alpha * (1.0 + rr)**(alpha - (d - 1) / 2)
    ratio = np.divide(difference, envelope, out=np.zeros_like(difference), where=envelope > 0)

    table = pd.DataFrame({
        "rho": pp.ravel(),
        "r": rr.ravel(),
        "difference": difference.ravel(),
        "envelope": envelope.ravel(),
        "ratio": ratio.ravel(),
    })
    argmax = int(np.argmax(table["ratio"].values))
    return {
        "alpha": float(alpha),
        "max_ratio": float(table["ratio"].iloc[argmax]),
        "rho": float(table["rho"].iloc[argmax]),
        "r": float(table["r"].iloc[argmax]),
        "table": table,
    }


def uniform_decay_bound(symbol: KineticSymbol, t_samples, r_samples) -> dict:
    """
    Sampled sup over t and both shells of |(d sigma_{S_t})^(r)| (1+r)^{(d-1)/2},
    d sigma = |p'|^{-1} d omega on each shell.
    """
    t = np.asarray(t_samples, dtype=float)
    r = np.asarray(r_samples, dtype=float)
    d = symbol.dimension
    weighted = KineticSymbol(d, symbol.profile, symbol.s, symbol.tau, "weighted")
    rows = []
    for branch in ("+", "-"):
        radii = np.atleast_1d(symbol.shell_radius(t, branch))
        for t_value, rho in zip(t, radii):
            decay = np.abs(surface_measure_ft(weighted, rho, r)) * (1.0 + r)**((d - 1) / 2)
            rows.append(pd.DataFrame({"t": t_value, "branch": branch, "rho": rho, "r": r, "scaled": decay}))
    table = pd.concat(rows, ignore_index=True)
    return {"sup": float(table["scaled"].max()), "table": table}
