import configparser
import logging
import os
from pathlib import Path
import numpy as np

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass

class DimensionMismatch(ValueError):
    pass

class InvalidExponents(ValueError):
    pass

class NotRadial(ValueError):
    pass

class UnsupportedDimension(ValueError):
    pass

class NonPositiveShift(ValueError):
    pass

class SizeExceeded(ValueError):
    pass

class ScaleTooLarge(ValueError):
    pass

class UnsupportedModel(NotImplementedError):
    pass


class NumericalError(ArithmeticError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

class Divergent(NumericalError):
    pass

class RootNotFound(NumericalError):
    pass

class ConvergenceFailure(NumericalError):
    pass

class NoConvergence(NumericalError):
    pass

class GradingInsufficient(NumericalError):
    pass

class NoBoundState(NumericalError):
    pass

class ResolutionExceeded(NumericalError):
    pass

class BranchMismatch(NumericalError):
    pass

class ContourTooClose(NumericalError):
    pass

class NonIntegerRank(NumericalError):
    pass

class PlacementFailed(NumericalError):
    pass


_DEFAULTS = {
    "TOLERANCES": {
        "relative_floor": "1e-12",
        "stable_shells": "3",
        "residual": "1e-8",
        "hermitian": "1e-10",
        "integer_rank": "1e-6",
        "branch_overlap": "0.5",
        "ws_refinement": "1e-6",
    },
    "LIMITS": {
        "max_shells": "40",
        "max_dyadic": "80",
        "e_floor": "1e-10",
        "e_cap": "1e3",
        "dense_max_points": "4096",
        "riesz_nodes": "64",
        "riesz_max_nodes": "4096",
        "knapp_max_nodes": "65536",
    },
    "QUADRATURE": {
        "grading_ratio": "1.35",
        "cube_order": "6",
        "cube_split": "2",
        "mt_mu_min": "1e-4",
        "mt_mu_max": "1e4",
        "mt_mu_points": "200",
        "root_bracket_low": "0.5",
        "root_bracket_high": "2.0",
    },
    "KNAPP": {
        "scale_a": "2.0",
        "tail_order": "8",
        "angular_nodes": "16",
    },
}

settings = configparser.ConfigParser(interpolation=None)
settings.read_dict(_DEFAULTS)
if "settings.cfg" in os.listdir(Path(__file__).parent):
    settings.read(Path(__file__).parent / "settings.cfg")

REL_FLOOR = settings.getfloat("TOLERANCES", "relative_floor")
STABLE_SHELLS = settings.getint("TOLERANCES", "stable_shells")
RESIDUAL_TOL = settings.getfloat("TOLERANCES", "residual")
HERMITIAN_TOL = settings.getfloat("TOLERANCES", "hermitian")
INTEGER_TOL = settings.getfloat("TOLERANCES", "integer_rank")
BRANCH_OVERLAP = settings.getfloat("TOLERANCES", "branch_overlap")
WS_REFINEMENT_TOL = settings.getfloat("TOLERANCES", "ws_refinement")

MAX_SHELLS = settings.getint("LIMITS", "max_shells")
MAX_DYADIC = settings.getint("LIMITS", "max_dyadic")
E_FLOOR = settings.getfloat("LIMITS", "e_floor")
E_CAP = settings.getfloat("LIMITS", "e_cap")
DENSE_MAX_POINTS = settings.getint("LIMITS", "dense_max_points")
RIESZ_NODES = settings.getint("LIMITS", "riesz_nodes")
RIESZ_MAX_NODES = settings.getint("LIMITS", "riesz_max_nodes")
KNAPP_MAX_NODES = settings.getint("LIMITS", "knapp_max_nodes")

GRADING_RATIO = settings.getfloat("QUADRATURE", "grading_ratio")
CUBE_ORDER = settings.getint("QUADRATURE", "cube_order")
CUBE_SPLIT = settings.getint("QUADRATURE", "cube_split")
MT_GRID = (
    settings.getfloat("QUADRATURE", "mt_mu_min"),
    settings.getfloat("QUADRATURE", "mt_mu_max"),
    settings.getint("QUADRATURE", "mt_mu_points"),
)
ROOT_BRACKET = (
    settings.getfloat("QUADRATURE", "root_bracket_low"),
    settings.getfloat("QUADRATURE", "root_bracket_high"),
)

KNAPP_A = settings.getfloat("KNAPP", "scale_a")
TAIL_ORDER = settings.getint("KNAPP", "tail_order")
ANGULAR_NODES = settings.getint("KNAPP", "angular_nodes")


def truncated_sum(
    term,
    rel_floor=None,
    stable=None,
    max_terms=None,
    extrapolate=True,
    label="sum"
) -> tuple:
    """
    Sums term(0) + term(1) + ... until the running tail is negligible.

    term : callable
        maps the shell index k >= 0 to the (possibly signed) shell contribution

    rel_floor : float
        a shell is negligible when |term(k)| <= rel_floor * sum_{i<=k} |term(i)|
        default : REL_FLOOR

    stable : int
        number of consecutive negligible, non-increasing shells required to stop
        default : STABLE_SHELLS

    max_terms : int
        maximum number of shells before the tail is extrapolated or declared divergent
        default : MAX_SHELLS

    extrapolate : bool
        If True, an algebraically or geometrically decaying tail that has not reached
        the floor after max_terms shells is summed by extrapolation; otherwise Divergent
        default : True

    Returns (total, number_of_shells, extrapolated_flag).
    """
    rel_floor = REL_FLOOR if rel_floor is None else rel_floor
    stable = STABLE_SHELLS if stable is None else stable
    max_terms = MAX_SHELLS if max_terms is None else max_terms

    total = 0.0
    mass = 0.0
    history = []
    quiet = 0
    for k in range(max_terms):
        value = term(k)
        size = abs(value)
        total += value
        mass += size
        if size <= rel_floor * mass and (not history or size <= history[-1]):
            quiet += 1
        else:
            quiet = 0
        history.append(size)
        if quiet >= stable:
            logger.debug(f"{label}: converged after {k + 1} shells")
            return total, k + 1, False

    if not extrapolate:
        raise Divergent(
            f"{label}: no convergence after {max_terms} shells",
            {"shells": max_terms, "last_terms": history[-stable:]}
        )
    tail = _extrapolated_tail(np.array(history), label)
    logger.warning(f"{label}: tail extrapolated after {max_terms} shells (tail {tail:.3e})")
    return total + np.copysign(tail, value), max_terms, True


def _extrapolated_tail(history, label) -> float:
    last = history[-6:]
    k = np.arange(len(history) - len(last), len(history)) + 1.0
    if np.all(last > 0):
        ratios = last[1:] / last[:-1]
        if np.max(ratios) < 0.9:
            r = float(np.max(ratios))
            return float(last[-1] * r / (1.0 - r))
        beta = -np.polyfit(np.log(k), np.log(last), 1)[0]
        if beta > 1.05:
            return float(last[-1] * k[-1] / (beta - 1.0))
        raise Divergent(
            f"{label}: tail decays like k^-{beta:.3f}, which is not summable",
            {"beta": float(beta), "last_terms": last.tolist()}
        )
    if np.all(last == 0):
        return 0.0
    raise Divergent(f"{label}: irregular tail", {"last_terms": last.tolist()})
