import logging
from concurrent.futures import ThreadPoolExecutor
import numpy as np
import pandas as pd
import scipy.linalg
from scipy.optimize import brentq
from . import utils
from .birman_schwinger import BoxGrid, bs_eigs_iterative, bs_lambda_operator, ws_matrix
from .harmonic import KineticSymbol
from .potentials import Potential
from .quadrature import ShellFamily, SphereQuadrature
from .vs_operator import OperatorMatrix, assemble_vs, vs_spectrum

logger = logging.getLogger(__name__)


class EigenCurve:
    def __init__(self, index, samples, convention="lebesgue", coupling_factor=1.0) -> None:
        """
        index : int
            branch j (0 = largest eigenvalue of BS(e))

        samples : pd.DataFrame
            columns lambda, e, residual, evaluations, spectrum, error; lambda strictly decreasing

        convention : str
            measure convention of the symbol the curve was computed with
            default : "lebesgue"

        coupling_factor : float
            c in ln(1/e) ~ 1 / (lambda c a)
            default : 1.0
        """
        lambdas = samples["lambda"].values
        if len(lambdas) > 1 and np.any(np.diff(lambdas) >= 0):
            raise ValueError("lambda has to be strictly decreasing along an eigenvalue curve")
        self.index = index
        self.samples = samples
        self.convention = convention
        self.coupling_factor = coupling_factor

    def __repr__(self) -> str:
        return f"EigenCurve(index={self.index}, samples={len(self.samples)}, convention={self.convention!r})"

    @classmethod
    def from_values(cls, lambdas, energies, index=0, convention="lebesgue", coupling_factor=1.0) -> "EigenCurve":
        samples = pd.DataFrame({"lambda": np.asarray(lambdas, dtype=float), "e": np.asarray(energies, dtype=float)})
        return cls(index, samples, convention, coupling_factor)

    @property
    def lambdas(self):
        return self.samples["lambda"].values

    @property
    def energies(self):
        return self.samples["e"].values

    @property
    def valid(self) -> pd.DataFrame:
        return self.samples[np.isfinite(self.samples["e"])]

    def to_frame(self) -> pd.DataFrame:
        return self.samples.assign(index=self.index)


class AsymptoticsReport:
    def __init__(self, index, a, fitted_a, slope, intercept, frame, params=None) -> None:
        self.index = index
        self.a = a
        self.fitted_a = fitted_a
        self.slope = slope
        self.intercept = intercept
        self.frame = frame
        self.params = params or {}

    def __repr__(self) -> str:
        return f"AsymptoticsReport(index={self.index}, a={self.a:.6g}, fitted_a={self.fitted_a:.6g})"

    @property
    def r1(self):
        return self.frame["r1"].values

    @property
    def r2(self):
        return self.frame["r2"].values if "r2" in self.frame else None

    def to_frame(self) -> pd.DataFrame:
        return self.frame

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "a": self.a,
            "fitted_a": self.fitted_a,
            "slope": self.slope,
            "intercept": self.intercept,
            "params": self.params,
            "samples": self.frame.replace({np.nan: None}).to_dict(orient="records"),
        }


def _top_eigenvalue(V, symbol, grid, e, j):
    table = bs_eigs_iterative(V, symbol, e, grid, k=max(j + 1, 3))
    return float(np.real(table["value"].iloc[j])), table["value"].values


def solve_e_for_lambda(V: Potential, symbol: KineticSymbol, grid: BoxGrid, lam, j=0, bracket=None) -> tuple:
    """
    Energy e > 0 with mu_j(e) = 1 / lam, mu_j the j-th eigenvalue of BS(e).

    mu_j decreases in e, so the root is bracketed in ln e by expanding from 1 (or
    from a warm-start bracket) in factors of 10 and refined by Brent's method.
    Returns (e, diagnostics).
    """
    if not lam > 0:
        raise ValueError(f"lambda has to be positive, got {lam}")
    evaluations = {}

    def excess(log_e):
        if log_e not in evaluations:
            evaluations[log_e] = _top_eigenvalue(V, symbol, grid, np.exp(log_e), j)
        return lam * evaluations[log_e][0] - 1.0

    log_floor, log_cap = np.log(utils.E_FLOOR) + 1e-12, np.log(utils.E_CAP)
    low, high = (np.log(bracket[0]), np.log(bracket[1])) if bracket is not None else (0.0, 0.0)
    low, high = max(low, log_floor), min(high, log_cap)
    step = np.log(10.0)

    while excess(high) > 0:
        if high >= log_cap:
            raise utils.NoBoundState(
                f"lambda mu_{j}(e) > 1 up to e = {utils.E_CAP:.1e}", {"lambda": lam, "j": j}
            )
        low, high = high, min(high + step, log_cap)
    while excess(low) < 0:
        if low <= log_floor:
            raise utils.ResolutionExceeded(
                f"lambda = {lam} needs e below the floor {utils.E_FLOOR:.1e}",
                {"lambda": lam, "j": j, "mu_at_floor": evaluations[low][0]}
            )
        high, low = low, max(low - step, log_floor)

    if excess(low) == 0:
        log_e = low
    else:
        log_e = brentq(excess, low, high, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    residual = abs(excess(log_e))
    if residual > utils.RESIDUAL_TOL:
        raise utils.NoConvergence(
            f"bisection for lambda = {lam} ended with |lambda mu - 1| = {residual:.3e}",
            {"lambda": lam, "j": j, "residual": residual}
        )
    e = float(np.exp(log_e))
    logger.debug(f"lambda={lam}: e_{j} = {e:.6e} after {len(evaluations)} evaluations")
    diagnostics = {
        "residual": residual,
        "evaluations": len(evaluations),
        "bracket": (float(np.exp(low)), float(np.exp(high))),
        "spectrum": np.real(evaluations[log_e][1]).tolist(),
    }
    return e, diagnostics


def _solve_branch(V, symbol, grid, lambdas, j) -> EigenCurve:
    rows = []
    bracket = None
    for lam in lambdas:
        try:
            e, info = solve_e_for_lambda(V, symbol, grid, lam, j, bracket)
            rows.append({
                "lambda": lam,
                "e": e,
                "residual": info["residual"],
                "evaluations": info["evaluations"],
                "spectrum": info["spectrum"],
                "error": None,
            })
            bracket = (e / 10.0, e)
        except utils.NumericalError as exc:
            logger.warning(f"lambda={lam}, j={j}: {type(exc).__name__}: {exc}")
            rows.append({
                "lambda": lam,
                "e": np.nan,
                "residual": np.nan,
                "evaluations": 0,
                "spectrum": None,
                "error": f"{type(exc).__name__}: {exc}",
            })
    return EigenCurve(j, pd.DataFrame(rows), symbol.convention, symbol.coupling_factor)


def sweep(V: Potential, symbol: KineticSymbol, grid: BoxGrid, lambdas, j_set=(0,), threads=1) -> list:
    """
    Eigenvalue curves e_j(lambda) for every j in j_set. lambdas has to be decreasing;
    each sample warm-starts its bracket from the previous one, branches run in parallel.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if len(lambdas) > 1 and np.any(np.diff(lambdas) >= 0):
        raise ValueError("lambda grid has to be strictly decreasing")
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        futures = [pool.submit(_solve_branch, V, symbol, grid, lambdas, j) for j in j_set]
        return [future.result() for future in futures]


def auto_lambda_grid(V: Potential, symbol: KineticSymbol, grid: BoxGrid, j=0, n=6):
    """
    Decreasing lambda grid from the largest lambda with e_j <= tau / 10 down to the
    smallest lambda whose energy is still above the resolvable floor.
    """
    mu_top, _ = _top_eigenvalue(V, symbol, grid, 0.1 * symbol.tau, j)
    mu_floor, _ = _top_eigenvalue(V, symbol, grid, utils.E_FLOOR, j)
    if mu_top <= 0:
        raise utils.NoBoundState(f"mu_{j}(e) <= 0 at e = tau / 10, no weakly coupled branch", {"mu": mu_top})
    lam_max, lam_min = 1.0 / mu_top, 1.0 / mu_floor
    logger.info(f"automatic lambda range [{lam_min:.4g}, {lam_max:.4g}] for branch {j}")
    return np.geomspace(lam_max, lam_min * (1 + 1e-6), n)


def first_order_fit(curve: EigenCurve, a) -> AsymptoticsReport:
    """
    r_1(lambda) = |lambda c a ln(1/e) - 1| and the least-squares slope of ln(1/e)
    against 1 / lambda (slope ~ 1 / (c a)).
    """
    if not a > 0:
        raise ValueError(f"a has to be positive, got {a}")
    valid = curve.valid
    lambdas = valid["lambda"].values
    log_inverse = np.log(1.0 / valid["e"].values)
    c = curve.coupling_factor
    r1 = np.abs(lambdas * c * a * log_inverse - 1.0)
    if len(lambdas) >= 2:
        slope, intercept = np.polyfit(1.0 / lambdas, log_inverse, 1)
        fitted_a = 1.0 / (c * slope)
    else:
        slope, intercept, fitted_a = np.nan, np.nan, np.nan
    frame = pd.DataFrame({"lambda": lambdas, "e": valid["e"].values, "r1": r1})
    params = {"convention": curve.convention, "coupling_factor": c}
    return AsymptoticsReport(curve.index, float(a), float(fitted_a), float(slope), float(intercept), frame, params)


def second_order_residual(curve: EigenCurve, b_samples, a=None, tau=1.0) -> AsymptoticsReport:
    """
    s(lambda) = ln(1 + tau/e) + 1 / (lambda c b(lambda)) with b < 0, r_2 = lambda |s|.

    b_samples : dict or pd.DataFrame
        lambda -> b, or a frame with columns lambda, b

    a : float
        eigenvalue of V_S for the first-order comparison column; fitted from the curve if None
        default : None

    tau : float
        window in the logarithm ln(1 + tau/e)
        default : 1.0
    """
    if isinstance(b_samples, pd.DataFrame):
        b_map = dict(zip(b_samples["lambda"].values, b_samples["b"].values))
    else:
        b_map = dict(b_samples)
    if a is None:
        report = first_order_fit(curve, 1.0)
        report = first_order_fit(curve, report.fitted_a)
    else:
        report = first_order_fit(curve, a)
    frame = report.frame.copy()
    b = np.array([b_map.get(lam, np.nan) for lam in frame["lambda"].values])
    if np.any(b >= 0):
        raise ValueError("second-order eigenvalues b(lambda) have to be negative")
    c = curve.coupling_factor
    lambdas, energies = frame["lambda"].values, frame["e"].values
    s = np.log1p(tau / energies) + 1.0 / (lambdas * c * b)
    frame["b"] = b
    frame["s"] = s
    frame["r2"] = lambdas * np.abs(s)
    frame["first_order_gap"] = np.abs(np.log(1.0 / energies) - 1.0 / (lambdas * c * report.a))
    report.frame = frame
    report.params["tau"] = tau
    return report


def _leading_group(spectrum, j):
    values = np.real(spectrum.eigenvalues)
    target = values[j]
    tolerance = 1e-8 * max(abs(target), np.finfo(float).tiny)
    return np.nonzero(np.abs(values - target) <= tolerance)[0]


def second_order_eigenvalues(
    V: Potential,
    symbol: KineticSymbol,
    lambdas,
    j,
    quad: SphereQuadrature,
    shells: ShellFamily,
    grid: BoxGrid,
    ws: OperatorMatrix = None
) -> pd.DataFrame:
    """
    b_j(lambda) < 0: eigenvalue of B_S(lambda) for -V (= -V_S - lambda W_S(0)) on the
    branch whose eigenvector overlaps the j-th eigenspace of V_S.
    """
    vs = vs_spectrum(assemble_vs(V, quad, symbol), vectors=True)
    group = _leading_group(vs, j)
    U = vs.vectors[:, group]
    position = j - group[0]
    if np.real(vs.eigenvalues[j]) <= 0:
        raise utils.BranchMismatch(f"eigenvalue {j} of V_S is not positive", {"a": float(np.real(vs.eigenvalues[j]))})
    ws = ws_matrix(V, symbol, 0.0, quad, shells, grid) if ws is None else ws
    attractive = V.scaled(-1)

    rows = []
    for lam in lambdas:
        B = bs_lambda_operator(attractive, symbol, lam, quad, shells, grid, ws=ws)
        if B.is_hermitian:
            values, vectors = scipy.linalg.eigh(B.matrix)
        else:
            values, vectors = scipy.linalg.eig(B.matrix)
        overlaps = np.sum(np.abs(U.conj().T @ vectors)**2, axis=0)
        chosen = np.argsort(-overlaps, kind="stable")[:len(group)]
        chosen = chosen[np.argsort(np.real(values[chosen]), kind="stable")]
        pick = chosen[position]
        if overlaps[chosen].min() < utils.BRANCH_OVERLAP:
            raise utils.BranchMismatch(
                f"branch {j} lost at lambda = {lam} (overlap {overlaps[chosen].min():.3f})",
                {"lambda": lam, "overlaps": overlaps[chosen].tolist()}
            )
        rows.append({"lambda": lam, "b": float(np.real(values[pick])), "overlap": float(overlaps[pick])})
    return pd.DataFrame(rows)


def weak_coupling_report(
    V: Potential,
    symbol: KineticSymbol,
    grid: BoxGrid,
    lambdas,
    j,
    quad: SphereQuadrature,
    shells: ShellFamily,
    threads=1
) -> AsymptoticsReport:
    """First- and second-order report for branch j in one call."""
    a = float(np.real(vs_spectrum(assemble_vs(V, quad, symbol)).eigenvalues[j]))
    curve = sweep(V, symbol, grid, lambdas, (j,), threads)[0]
    b = second_order_eigenvalues(V, symbol, curve.valid["lambda"].values, j, quad, shells, grid)
    report = second_order_residual(curve, b, a=a, tau=symbol.tau)
    report.params.update({"order": quad.order, "grid": repr(grid), "shells": shells.size})
    return report


def riesz_count(family, center, radius, kappa_samples, nodes=None) -> pd.DataFrame:
    """
    Rank of the Riesz projection -(1/2 pi i) int_gamma (A(kappa) - z)^-1 dz on the circle
    gamma(center, radius) for every kappa, by the trapezoid rule on the contour.

    family : callable
        kappa -> OperatorMatrix or square array

    nodes : int
        initial number of contour nodes, doubled until two estimates agree
        default : RIESZ_NODES
    """
    nodes = utils.RIESZ_NODES if nodes is None else nodes
    if nodes < 64:
        raise ValueError(f"at least 64 contour nodes are needed, got {nodes}")
    rows = []
    for kappa in kappa_samples:
        A = family(kappa)
        A = A.matrix if isinstance(A, OperatorMatrix) else np.asarray(A)
        n = A.shape[0]
        eigenvalues = scipy.linalg.eigvals(A)
        distance = float(np.min(np.abs(np.abs(eigenvalues - center) - radius), initial=np.inf))
        if distance < radius * 1e-3:
            raise utils.ContourTooClose(
                f"an eigenvalue lies within {distance:.3e} of the contour at kappa = {kappa}",
                {"kappa": kappa, "distance": distance}
            )

        def estimate(m):
            theta = 2 * np.pi * np.arange(m) / m
            z = center + radius * np.exp(1j * theta)
            total = 0.0 + 0.0j
            for zk in z:
                total += (zk - center) * np.trace(np.linalg.solve(zk * np.eye(n) - A, np.eye(n)))
            return total / m

        m = nodes
        value = estimate(m)
        while m < utils.RIESZ_MAX_NODES:
            finer = estimate(2 * m)
            m *= 2
            converged = abs(finer - value) <= utils.INTEGER_TOL
            value = finer
            if converged:
                break
        rank = int(round(value.real))
        defect = abs(value - rank)
        if defect > utils.INTEGER_TOL:
            raise utils.NonIntegerRank(
                f"contour integral {value:.8f} at kappa = {kappa} is not an integer",
                {"kappa": kappa, "value": complex(value), "nodes": m}
            )
        rows.append({"kappa": kappa, "rank": rank, "defect": float(defect), "nodes": m})
    return pd.DataFrame(rows)
