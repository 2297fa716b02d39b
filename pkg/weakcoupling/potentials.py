import copy
import logging
import numpy as np
import pandas as pd
from scipy import special
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import minimize_scalar
from . import utils
from .harmonic import sphere_area
from .quadrature import build_sphere_quadrature, gauss_panels

logger = logging.getLogger(__name__)

RADIAL_ORDER = 32


class Potential:
    """
    Base class of the potential models. A model is a profile v evaluated at x / scale
    and multiplied by a (possibly complex) amplitude: V(x) = amplitude * v(x / scale).
    """

    model = "potential"
    is_radial = False
    has_transform = False

    def __init__(self, dimension, amplitude=1.0, scale=1.0) -> None:
        if int(dimension) != dimension or dimension < 2:
            raise ValueError(f"dimension has to be an integer >= 2, got {dimension}")
        if not scale > 0:
            raise ValueError(f"scale has to be positive, got {scale}")
        self.dimension = int(dimension)
        if np.imag(amplitude) != 0:
            self.amplitude = complex(amplitude)
        else:
            self.amplitude = float(np.real(amplitude))
        self.scale = float(scale)

    def __repr__(self) -> str:
        fields = ", ".join(f"{key}={value!r}" for key, value in self.to_dict().items() if key != "model")
        return f"{type(self).__name__}({fields})"

    @property
    def is_real(self) -> bool:
        return not isinstance(self.amplitude, complex)

    @property
    def support_radius(self) -> float:
        return np.inf

    @property
    def breakpoints(self) -> list:
        """Radii at which the radial profile is not smooth."""
        return []

    def _points(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension:
            raise utils.DimensionMismatch(
                f"points have to have {self.dimension} coordinates, got shape {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise ValueError("points have to be finite")
        return x

    def evaluate(self, x):
        x = self._points(x)
        if self.is_radial:
            return self.radial(np.linalg.norm(x, axis=-1))
        return self.amplitude * self._profile(x / self.scale)

    def radial(self, r):
        if not self.is_radial:
            raise utils.NotRadial(f"{type(self).__name__} is not a radial model")
        return self.amplitude * self._radial_profile(np.abs(np.asarray(r, dtype=float)) / self.scale)

    def envelope(self, x):
        """Non-negative majorant of |V| used for tail estimates."""
        return np.abs(self.evaluate(x))

    def angular_sup(self, r):
        """H(r) = sup over |x| = r of |V(x)|."""
        r = np.asarray(r, dtype=float)
        if self.is_radial:
            return np.abs(self.radial(r))
        if self.dimension not in (2, 3):
            raise utils.UnsupportedDimension(f"angular sampling needs d = 2 or 3, got d={self.dimension}")
        nodes = build_sphere_quadrature(self.dimension, 32).nodes
        flat = np.atleast_1d(r).ravel()
        values = np.abs(self.evaluate(flat[:, None, None] * nodes[None, :, :])).max(axis=1)
        return values.reshape(r.shape)

    def fourier_transform(self, xi):
        raise utils.UnsupportedModel(
            f"{type(self).__name__} has no analytic Fourier transform; sample it with GridSampled.from_potential"
        )

    def scaled(self, c) -> "Potential":
        """Copy of the potential multiplied by the scalar c."""
        other = copy.copy(self)
        amplitude = self.amplitude * c
        other.amplitude = complex(amplitude) if np.imag(amplitude) != 0 else float(np.real(amplitude))
        return other

    def dilated(self, k) -> "Potential":
        """Copy of the potential x -> V(x / k)."""
        if not k > 0:
            raise ValueError(f"dilation factor has to be positive, got {k}")
        other = copy.copy(self)
        other.scale = self.scale * k
        return other

    def _amplitude_dict(self) -> dict:
        if isinstance(self.amplitude, complex):
            return {"amplitude": self.amplitude.real, "amplitude_imag": self.amplitude.imag}
        return {"amplitude": self.amplitude}

    def to_dict(self) -> dict:
        return {"model": self.model, "dimension": self.dimension, **self._amplitude_dict(), "scale": self.scale}


class GaussianRadial(Potential):
    """V(x) = A exp(-pi |x / scale|^2), self-dual at scale 1."""

    model = "gaussian"
    is_radial = True
    has_transform = True

    def _radial_profile(self, r):
        return np.exp(-np.pi * r**2)

    def fourier_transform(self, xi):
        xi = self._points(xi)
        k2 = np.sum(xi**2, axis=-1)
        s = self.scale
        return self.amplitude * s**self.dimension * np.exp(-np.pi * s**2 * k2)


class BallIndicator(Potential):
    model = "ball"
    is_radial = True
    has_transform = True

    def __init__(self, dimension, radius=1.0, amplitude=1.0, scale=1.0) -> None:
        """
        dimension : int
            dimension d >= 2

        radius : float
            radius rho_0 of the ball at scale 1
            default : 1.0

        amplitude : float or complex
            value inside the ball
            default : 1.0

        scale : float
            dilation, the effective radius is radius * scale
            default : 1.0
        """
        super().__init__(dimension, amplitude, scale)
        if not radius > 0:
            raise ValueError(f"radius has to be positive, got {radius}")
        self.radius = float(radius)

    @property
    def effective_radius(self) -> float:
        return self.radius * self.scale

    @property
    def support_radius(self) -> float:
        return self.effective_radius

    @property
    def breakpoints(self) -> list:
        return [self.effective_radius]

    def _radial_profile(self, r):
        return (r < self.radius).astype(float)

    def fourier_transform(self, xi):
        xi = self._points(xi)
        k = np.linalg.norm(xi, axis=-1)
        rho = self.effective_radius
        nu = self.dimension / 2
        z = 2 * np.pi * rho * k
        small = z < 1e-4
        safe = np.where(small, 1.0, k)
        value = rho**nu * safe**(-nu) * special.jv(nu, 2 * np.pi * rho * safe)
        at_zero = np.pi**nu * rho**self.dimension / special.gamma(nu + 1)
        series = at_zero * (1.0 - (z / 2)**2 / (nu + 1))
        return self.amplitude * np.where(small, series, value)

    def to_dict(self) -> dict:
        return {**super().to_dict(), "radius": self.radius}


class RadialPowerLaw(Potential):
    """V(x) = A (r^-a 1_{r<1} + r^-b 1_{r>=1}), r = |x| / scale."""

    model = "power_law"
    is_radial = True

    def __init__(self, dimension, a, b, amplitude=1.0, scale=1.0) -> None:
        super().__init__(dimension, amplitude, scale)
        if not 0 <= a < dimension:
            raise ValueError(f"a has to lie in [0, {dimension}), got {a}")
        if not b > 0:
            raise ValueError(f"b has to be positive, got {b}")
        self.a = float(a)
        self.b = float(b)

    @property
    def breakpoints(self) -> list:
        return [self.scale]

    def _radial_profile(self, r):
        with np.errstate(divide="ignore"):
            return np.where(r < 1, r**-self.a, r**-self.b)

    def to_dict(self) -> dict:
        return {**super().to_dict(), "a": self.a, "b": self.b}


class LogDecay(Potential):
    """V(x) = A r^-1 (1 + |log r|)^-b, r = |x| / scale."""

    model = "log_decay"
    is_radial = True

    def __init__(self, dimension, b, amplitude=1.0, scale=1.0) -> None:
        super().__init__(dimension, amplitude, scale)
        if not b > 0:
            raise ValueError(f"b has to be positive, got {b}")
        self.b = float(b)

    @property
    def breakpoints(self) -> list:
        return [self.scale]

    def _radial_profile(self, r):
        with np.errstate(divide="ignore"):
            return 1.0 / (r * (1.0 + np.abs(np.log(r)))**self.b)

    def to_dict(self) -> dict:
        return {**super().to_dict(), "b": self.b}


class OscillatingSlab(Potential):
    """V(x) = A cos(4 pi x_1) / (1 + |x_1| + |x'|^2)^(1 + eps), x in units of scale."""

    model = "oscillating_slab"

    def __init__(self, dimension, eps, amplitude=1.0, scale=1.0) -> None:
        super().__init__(dimension, amplitude, scale)
        if not eps > 0:
            raise ValueError(f"eps has to be positive, got {eps}")
        self.eps = float(eps)

    def _weight(self, y):
        return (1.0 + np.abs(y[..., 0]) + np.sum(y[..., 1:]**2, axis=-1))**-(1.0 + self.eps)

    def _profile(self, y):
        return np.cos(4 * np.pi * y[..., 0]) * self._weight(y)

    def envelope(self, x):
        x = self._points(x)
        return abs(self.amplitude) * self._weight(x / self.scale)

    def angular_sup(self, r):
        # min of |x_1| + |x'|^2 on the sphere of radius r is min(r, r^2)
        r = np.abs(np.asarray(r, dtype=float)) / self.scale
        return abs(self.amplitude) * (1.0 + np.minimum(r, r**2))**-(1.0 + self.eps)

    def to_dict(self) -> dict:
        return {**super().to_dict(), "eps": self.eps}


class GridSampled(Potential):
    model = "grid"
    has_transform = True

    def __init__(self, dimension, box_size, samples, source=None) -> None:
        """
        dimension : int
            dimension d >= 2

        box_size : float
            side L of the box [-L/2, L/2)^d, samples sit at x_n = -L/2 + n L / N

        samples : np.ndarray
            array of shape (N,) * d, real or complex, finite

        source : dict
            descriptor of the model the samples were taken from, kept for to_dict
            default : None
        """
        super().__init__(dimension)
        samples = np.asarray(samples)
        if samples.ndim != self.dimension or len(set(samples.shape)) != 1:
            raise utils.DimensionMismatch(
                f"samples have to form a cubic array with {self.dimension} axes, got shape {samples.shape}"
            )
        if not np.all(np.isfinite(samples)):
            raise ValueError("grid samples have to be finite")
        if not box_size > 0:
            raise ValueError(f"box_size has to be positive, got {box_size}")
        self.box_size = float(box_size)
        self.samples = samples if np.iscomplexobj(samples) and np.any(samples.imag) else samples.real.astype(float)
        self.source = source
        self._interpolator = None

    @classmethod
    def from_potential(cls, potential: Potential, box_size, points) -> "GridSampled":
        axis = -box_size / 2 + box_size * np.arange(points) / points
        mesh = np.stack(np.meshgrid(*[axis] * potential.dimension, indexing="ij"), axis=-1)
        samples = potential.evaluate(mesh)
        return cls(potential.dimension, box_size, samples, source=potential.to_dict())

    @property
    def points(self) -> int:
        return self.samples.shape[0]

    @property
    def spacing(self) -> float:
        return self.box_size / self.points

    @property
    def axis(self):
        return -self.box_size / 2 + self.spacing * np.arange(self.points)

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.samples)

    @property
    def support_radius(self) -> float:
        return self.box_size / 2 * np.sqrt(self.dimension)

    def grid_points(self):
        mesh = np.meshgrid(*[self.axis] * self.dimension, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def evaluate(self, x):
        x = self._points(x)
        if self._interpolator is None:
            self._interpolator = RegularGridInterpolator(
                (self.axis,) * self.dimension,
                self.samples,
                method="linear",
                bounds_error=False,
                fill_value=0.0
            )
        shape = x.shape[:-1]
        return self._interpolator(x.reshape(-1, self.dimension)).reshape(shape)

    def fourier_transform(self, xi):
        """Riemann sum h^d sum_n V(x_n) exp(-2 pi i x_n . xi)."""
        xi = self._points(xi)
        shape = xi.shape[:-1]
        flat = xi.reshape(-1, self.dimension)
        points = self.grid_points()
        values = self.samples.ravel()
        chunk = max(1, 2**22 // len(points))
        out = np.empty(len(flat), dtype=complex)
        for start in range(0, len(flat), chunk):
            phase = np.exp(-2j * np.pi * flat[start:start + chunk] @ points.T)
            out[start:start + chunk] = phase @ values
        return (self.spacing**self.dimension * out).reshape(shape)

    def scaled(self, c) -> "GridSampled":
        return GridSampled(self.dimension, self.box_size, self.samples * c, self.source)

    def dilated(self, k) -> "GridSampled":
        if not k > 0:
            raise ValueError(f"dilation factor has to be positive, got {k}")
        return GridSampled(self.dimension, self.box_size * k, self.samples, self.source)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "dimension": self.dimension,
            "box_size": self.box_size,
            "points": self.points,
            "source": self.source,
        }


class Mollified(Potential):
    """Convolution of a potential with the Gaussian w^-d exp(-pi |x / w|^2)."""

    model = "mollified"
    has_transform = True

    def __init__(self, base: Potential, width) -> None:
        if not width > 0:
            raise ValueError(f"width has to be positive, got {width}")
        self.base = base
        self.width = float(width)
        self.dimension = base.dimension
        self.amplitude = 1.0
        self.scale = 1.0

    @property
    def is_radial(self) -> bool:
        return self.base.is_radial

    @property
    def is_real(self) -> bool:
        return self.base.is_real

    def evaluate(self, x):
        raise utils.UnsupportedModel("mollified potentials are only available through their Fourier transform")

    def fourier_transform(self, xi):
        xi = self._points(xi)
        damping = np.exp(-np.pi * self.width**2 * np.sum(xi**2, axis=-1))
        return self.base.fourier_transform(xi) * damping

    def to_dict(self) -> dict:
        return {"model": self.model, "width": self.width, "base": self.base.to_dict()}


_MODELS = {
    cls.model: cls for cls in (GaussianRadial, BallIndicator, RadialPowerLaw, LogDecay, OscillatingSlab)
}


def potential_from_dict(descriptor) -> Potential:
    """Rebuilds a potential from the output of to_dict (or a config section)."""
    descriptor = dict(descriptor)
    model = descriptor.pop("model", None)
    if model == "grid":
        source = descriptor.get("source")
        if source is None:
            raise utils.ConfigError("grid potentials need a source model to be rebuilt")
        return GridSampled.from_potential(
            potential_from_dict(source), float(descriptor["box_size"]), int(descriptor["points"])
        )
    if model == "mollified":
        return Mollified(potential_from_dict(descriptor["base"]), float(descriptor["width"]))
    if model not in _MODELS:
        raise utils.ConfigError(f"unknown potential model {model!r}, possible values: {sorted(_MODELS)} or 'grid'")
    amplitude = float(descriptor.pop("amplitude", 1.0)) + 1j * float(descriptor.pop("amplitude_imag", 0.0))
    kwargs = {key: float(value) for key, value in descriptor.items()}
    kwargs["dimension"] = int(kwargs["dimension"])
    try:
        return _MODELS[model](amplitude=amplitude, **kwargs)
    except TypeError as exc:
        raise utils.ConfigError(f"invalid parameters for model {model!r}: {exc}") from exc


def _dyadic_shell(g, j, breaks) -> float:
    low, high = 2.0**j, 2.0**(j + 1)
    edges = np.array([low, *sorted(b for b in breaks if low < b < high), high])
    r, w = gauss_panels(edges, RADIAL_ORDER)
    return float(np.real(np.sum(w * g(r))))


def _dyadic_sum(shell, label) -> tuple:
    """Sum of shell(j) over all integers j, split into j >= 0 and j < 0."""
    upper = utils.truncated_sum(shell, max_terms=utils.MAX_DYADIC, label=f"{label} (r >= 1)")
    lower = utils.truncated_sum(lambda k: shell(-1 - k), max_terms=utils.MAX_DYADIC, label=f"{label} (r < 1)")
    return upper[0] + lower[0], max(upper[1], lower[1]), upper[2] or lower[2]


def radial_integral(g, breaks=()) -> tuple:
    """int_0^inf g(r) dr over dyadic shells; returns (value, shells, extrapolated)."""
    return _dyadic_sum(lambda j: _dyadic_shell(g, j, breaks), "radial integral")


def lp_norm(V: Potential, p) -> float:
    if p < 1:
        raise utils.InvalidExponents(f"exponent has to be >= 1, got {p}")
    if V.is_radial:
        if np.isinf(p):
            r = np.geomspace(1e-6, 1e6, 4001) * V.scale
            return float(np.max(np.abs(V.radial(r))))
        area = sphere_area(V.dimension)
        d = V.dimension
        value, _, _ = radial_integral(lambda r: np.abs(V.radial(r))**p * r**(d - 1), V.breakpoints)
        return float((area * value)**(1 / p))
    return amalgam_norm(V, p, p)


def _cube_rule(d) -> tuple:
    x, w = gauss_panels(np.linspace(-0.5, 0.5, utils.CUBE_SPLIT + 1), utils.CUBE_ORDER)
    mesh = np.meshgrid(*[x] * d, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=-1)
    weights = np.prod(np.meshgrid(*[w] * d, indexing="ij"), axis=0).ravel()
    return nodes, weights


def _lattice_shell(d, k):
    side = np.arange(-k, k + 1)
    mesh = np.stack(np.meshgrid(*[side] * d, indexing="ij"), axis=-1).reshape(-1, d)
    return mesh[np.max(np.abs(mesh), axis=1) == k].astype(float)


def _amalgam(V: Potential, outer_p, inner_q) -> tuple:
    d = V.dimension
    nodes, weights = _cube_rule(d)
    chunk = max(1, 2**21 // len(nodes))

    def shell(k):
        centers = _lattice_shell(d, k)
        nearest = np.linalg.norm(np.maximum(np.abs(centers) - 0.5, 0.0), axis=1)
        centers = centers[nearest < V.support_radius]
        total = 0.0
        for start in range(0, len(centers), chunk):
            block = centers[start:start + chunk]
            values = np.abs(V.evaluate(block[:, None, :] + nodes[None, :, :]))
            if np.isinf(inner_q):
                local = values.max(axis=1)
            else:
                local = (values**inner_q @ weights)**(1 / inner_q)
            total += float(np.sum(local**outer_p))
        return total

    total, shells, extrapolated = utils.truncated_sum(shell, label="amalgam lattice sum")
    logger.debug(f"amalgam sum truncated at max-norm radius {shells - 1}")
    return total**(1 / outer_p), shells - 1, extrapolated


def amalgam_norm(V: Potential, outer_p=None, inner_q=None, symbol=None) -> float:
    """
    [sum_s ||V||_{L^inner_q(Q_s)}^outer_p]^(1/outer_p) over the unit cubes Q_s centred
    at s in Z^d.

    V : Potential

    outer_p : float
        default : (d + 1) / 2

    inner_q : float
        default : d / 2, or d / s for a KineticSymbol of ellipticity s

    symbol : KineticSymbol
        only used for the default inner exponent
        default : None
    """
    d = V.dimension
    outer_p = (d + 1) / 2 if outer_p is None else outer_p
    if inner_q is None:
        inner_q = d / symbol.s if symbol is not None else d / 2
    if outer_p < 1 or inner_q < 1:
        raise utils.InvalidExponents(f"outer_p and inner_q have to be >= 1, got {outer_p}, {inner_q}")
    return _amalgam(V, outer_p, inner_q)[0]


def mt_integral(V: Potential, mu) -> float:
    """int_mu^inf H(r) r (r^2 - mu^2)^-1/2 dr, computed as int_0^inf H(sqrt(mu^2 + u^2)) du."""
    breaks = [np.sqrt(b**2 - mu**2) for b in V.breakpoints if b > mu]
    shell = lambda j: _dyadic_shell(lambda u: V.angular_sup(np.sqrt(mu**2 + u**2)), j, breaks)
    return _dyadic_sum(shell, f"MT integral (mu={mu:.3e})")[0]


def mt_norm(V: Potential) -> float:
    low, high, n = utils.MT_GRID
    grid = np.concatenate([[0.0], np.geomspace(low, high, n)]) * V.scale
    try:
        values = np.array([mt_integral(V, mu) for mu in grid])
    except utils.Divergent as exc:
        logger.info(f"MT norm is infinite: {exc}")
        return np.inf
    best = int(np.argmax(values))
    left = grid[max(best - 1, 0)]
    right = grid[min(best + 1, len(grid) - 1)]
    refined = minimize_scalar(
        lambda mu: -mt_integral(V, mu), bounds=(left, right), method="bounded", options={"xatol": 1e-10 * V.scale}
    )
    value = max(values[best], -refined.fun)
    logger.debug(f"MT supremum {value:.6e} near mu={refined.x if -refined.fun > values[best] else grid[best]:.4e}")
    return float(value)


def dp_norm(V: Potential, p) -> float:
    if not V.is_radial:
        raise utils.NotRadial(f"{type(V).__name__} is not radial")
    if not p > 2:
        raise utils.InvalidExponents(f"p has to be > 2, got {p}")

    def shell(j):
        integral = _dyadic_shell(lambda r: np.abs(V.radial(r))**p * r**(p - 1), j, V.breakpoints)
        return integral**(1 / p)

    try:
        return float(_dyadic_sum(shell, f"D_{p} dyadic sum")[0])
    except utils.Divergent as exc:
        logger.info(f"D_p norm is infinite: {exc}")
        return np.inf


def check_mixed_exponents(d, p, sigma) -> None:
    if not 1 <= p < 2 * d / (d + 1):
        raise utils.InvalidExponents(f"p has to lie in [1, {2 * d / (d + 1):.4f}) for d={d}, got {p}")
    if not 1 <= sigma <= 2:
        raise utils.InvalidExponents(f"sigma has to lie in [1, 2], got {sigma}")
    dual_p = 1 - 1 / p
    dual_sigma = 1 - 1 / sigma
    lower = dual_p if d == 2 else max(dual_p, dual_p * 2 * d / (d - 2) - 0.5)
    if not lower - 1e-12 <= dual_sigma <= 0.5:
        raise utils.InvalidExponents(
            f"(p, sigma) = ({p}, {sigma}) violates {lower:.4f} <= 1/sigma' <= 1/2 in d={d}"
        )


def mixed_norm(V: Potential, p, sigma, order=32) -> float:
    d = V.dimension
    check_mixed_exponents(d, p, sigma)
    inner_q = np.inf if sigma == 2 else sigma / (2 - sigma)
    outer_q = p / (2 - p)

    if V.is_radial:
        factor = 1.0 if np.isinf(inner_q) else sphere_area(d)**(1 / inner_q)
        inner = lambda r: factor * np.abs(V.radial(r))
    else:
        quad = build_sphere_quadrature(d, order)

        def inner(r):
            values = np.abs(V.evaluate(r[:, None, None] * quad.nodes[None, :, :]))
            if np.isinf(inner_q):
                return values.max(axis=1)
            return (values**inner_q @ quad.weights)**(1 / inner_q)

    value, _, _ = radial_integral(lambda r: inner(r)**outer_q * r**(d - 1), V.breakpoints)
    return float(value**(1 / outer_q))


class NormReport:
    def __init__(
        self,
        amalgam_norm,
        lp_norms,
        mt_norm,
        dp_norm,
        dp_p,
        mixed_norm,
        mixed_p,
        mixed_sigma,
        truncation_radius=None,
        extrapolated=False
    ) -> None:
        self.amalgam_norm = amalgam_norm
        self.lp_norms = lp_norms
        self.mt_norm = mt_norm
        self.dp_norm = dp_norm
        self.dp_p = dp_p
        self.mixed_norm = mixed_norm
        self.mixed_p = mixed_p
        self.mixed_sigma = mixed_sigma
        self.truncation_radius = truncation_radius
        self.extrapolated = extrapolated

    def __repr__(self) -> str:
        return (
            f"NormReport(amalgam_norm={self.amalgam_norm}, lp_norms={self.lp_norms}, mt_norm={self.mt_norm}, "
            f"dp_norm={self.dp_norm}, mixed_norm={self.mixed_norm})"
        )

    def to_dict(self) -> dict:
        return {
            "amalgam_norm": self.amalgam_norm,
            "lp_norms": {str(key): value for key, value in self.lp_norms.items()},
            "mt_norm": self.mt_norm,
            "dp_norm": {"value": self.dp_norm, "p": self.dp_p},
            "mixed_norm": {"value": self.mixed_norm, "p": self.mixed_p, "sigma": self.mixed_sigma},
            "truncation_radius": self.truncation_radius,
            "extrapolated": self.extrapolated,
        }

    def to_frame(self) -> pd.DataFrame:
        rows = [("amalgam", self.amalgam_norm)]
        rows += [(f"L^{key}", value) for key, value in self.lp_norms.items()]
        rows += [("MT", self.mt_norm), (f"D_{self.dp_p}", self.dp_norm)]
        rows += [(f"mixed(p={self.mixed_p}, sigma={self.mixed_sigma})", self.mixed_norm)]
        return pd.DataFrame(rows, columns=["norm", "value"])


def norm_report(V: Potential, lp_exponents=(1, 2), dp_p=3.0, mixed=(1.1, 2.0), symbol=None) -> NormReport:
    """All potential norms at once; divergent quantities are reported as inf."""
    d = V.dimension
    inner_q = d / symbol.s if symbol is not None else d / 2

    def guarded(func, *args):
        try:
            return func(*args)
        except utils.Divergent as exc:
            logger.warning(f"{func.__name__}: {exc}")
            return np.inf
        except (utils.NotRadial, utils.UnsupportedDimension, utils.InvalidExponents) as exc:
            logger.info(f"{func.__name__} skipped: {exc}")
            return np.nan

    try:
        amalgam, radius, extrapolated = _amalgam(V, (d + 1) / 2, inner_q)
    except utils.Divergent as exc:
        logger.warning(f"amalgam norm: {exc}")
        amalgam, radius, extrapolated = np.inf, None, False

    return NormReport(
        amalgam_norm=amalgam,
        lp_norms={p: guarded(lp_norm, V, p) for p in lp_exponents},
        mt_norm=guarded(mt_norm, V),
        dp_norm=guarded(dp_norm, V, dp_p),
        dp_p=dp_p,
        mixed_norm=guarded(mixed_norm, V, mixed[0], mixed[1]),
        mixed_p=mixed[0],
        mixed_sigma=mixed[1],
        truncation_radius=radius,
        extrapolated=extrapolated
    )
