import argparse
import configparser
from concurrent.futures import ThreadPoolExecutor
import hashlib
import json
import logging
from pathlib import Path
import platform
import sys
import time
import numpy as np
import pandas as pd
import scipy
from . import utils
from .asymptotics import (
    EigenCurve,
    auto_lambda_grid,
    first_order_fit,
    riesz_count,
    sweep,
    weak_coupling_report
)
from .birman_schwinger import (
    BoxGrid,
    bs_dense_oracle,
    bs_eigs_iterative,
    bs_operator_norm,
    bs_split,
    log_weight_integrals,
    spectral_measure_check
)
from .harmonic import KineticSymbol, kernel_difference_bound, uniform_decay_bound
from .potentials import GridSampled, amalgam_norm, norm_report, potential_from_dict
from .quadrature import build_sphere_quadrature, shell_grid
from .trial_functions import knapp_sweep, multi_cap_certificate
from .vs_operator import assemble_vs, funk_hecke_spectrum, vs_spectrum

logger = logging.getLogger(__name__)

COMMANDS = (
    "norms",
    "vs-spectrum",
    "bs-curve",
    "fit",
    "second-order",
    "knapp",
    "kernel-bounds",
    "spectral-measure-check",
    "oracle-compare",
    "riesz-count",
)

DEFAULT_CONFIG = {
    "potential": {"model": "gaussian", "amplitude": "1.0", "scale": "1.0", "sampled": "no"},
    "symbol": {"dimension": "3", "profile": "bcs", "s": "2.0", "tau": "0.5", "convention": "lebesgue"},
    "grid": {"box_size": "12.0", "points": "16"},
    "quadrature": {"order": "24", "n_t": "16", "l_max": "6"},
    "sweep": {"lambdas": "auto", "indices": "0", "n": "6"},
    "run": {"e_values": "1e-2, 1e-3, 1e-4", "k": "3", "seed": "0", "threads": "1"},
    "knapp": {"R_values": "16, 32, 64", "eps": "0.5", "K": "1"},
    "kernel": {"alpha": "0.5", "rho": "0.5, 0.75, 1.0, 1.25, 1.5", "r": "0.1, 1, 10, 50", "t": "0.05, 0.1, 0.2"},
    "riesz": {"e": "1e-3", "lambda": "1.0", "center": "2.0", "radius": "1.0", "kappa": "0, 0.25, 0.5, 0.75, 1"},
    "spectral": {"width": "1.0", "n_t": "48"},
    "fit": {"curve": "", "a": ""},
}


class ExperimentConfig:
    def __init__(self, parser: configparser.ConfigParser) -> None:
        """
        parser : configparser.ConfigParser
            resolved configuration (defaults, config file and overrides)
        """
        self.parser = parser

    def __repr__(self) -> str:
        return f"ExperimentConfig(hash={self.hash[:12]})"

    @classmethod
    def load(cls, path=None, overrides=()) -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser.read_dict(DEFAULT_CONFIG)
        if path is not None:
            if not Path(path).is_file():
                raise utils.ConfigError(f"config file {path} does not exist")
            try:
                parser.read(path)
            except configparser.Error as exc:
                raise utils.ConfigError(f"config file {path} is not readable: {exc}") from exc
        for item in overrides:
            key, sep, value = item.partition("=")
            section, dot, option = key.strip().partition(".")
            if not sep or not dot:
                raise utils.ConfigError(f"override has to look like section.key=value, got {item!r}")
            if not parser.has_section(section):
                parser.add_section(section)
            parser.set(section, option, value.strip())
        return cls(parser)

    @property
    def text(self) -> str:
        """Canonical text: sections and keys sorted, run.threads left out."""
        lines = []
        for section in sorted(self.parser.sections()):
            lines.append(f"[{section}]")
            lines += [
                f"{key} = {value}" for key, value in sorted(self.parser.items(section))
                if (section, key) != ("run", "threads")
            ]
        return "\n".join(lines) + "\n"

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

    def to_dict(self) -> dict:
        return {section: dict(self.parser.items(section)) for section in sorted(self.parser.sections())}

    def get(self, section, key) -> str:
        try:
            return self.parser.get(section, key)
        except (configparser.NoSectionError, configparser.NoOptionError) as exc:
            raise utils.ConfigError(f"missing configuration value {section}.{key}") from exc

    def number(self, section, key, kind=float):
        try:
            return kind(self.get(section, key))
        except ValueError as exc:
            raise utils.ConfigError(f"{section}.{key} has to be a {kind.__name__}, got {self.get(section, key)!r}") from exc

    def numbers(self, section, key, kind=float) -> list:
        text = self.get(section, key)
        try:
            return [kind(item) for item in text.split(",") if item.strip()]
        except ValueError as exc:
            raise utils.ConfigError(f"{section}.{key} has to be a list of {kind.__name__}, got {text!r}") from exc

    def _build(self, label, factory, *args):
        try:
            return factory(*args)
        except utils.ConfigError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise utils.ConfigError(f"invalid {label} configuration: {exc}") from exc

    def symbol(self) -> KineticSymbol:
        return self._build(
            "symbol",
            KineticSymbol,
            self.number("symbol", "dimension", int),
            self.get("symbol", "profile"),
            self.number("symbol", "s"),
            self.number("symbol", "tau"),
            self.get("symbol", "convention")
        )

    def grid(self) -> BoxGrid:
        return self._build(
            "grid",
            BoxGrid,
            self.number("symbol", "dimension", int),
            self.number("grid", "box_size"),
            self.number("grid", "points", int)
        )

    def potential(self):
        descriptor = dict(self.parser.items("potential"))
        sampled = descriptor.pop("sampled", "no").lower() in ("yes", "true", "1")
        descriptor["dimension"] = self.get("symbol", "dimension")
        V = self._build("potential", potential_from_dict, descriptor)
        if sampled:
            grid = self.grid()
            V = self._build("potential", GridSampled.from_potential, V, grid.box_size, grid.points)
        return V

    def quadrature(self):
        return self._build(
            "quadrature",
            build_sphere_quadrature,
            self.number("symbol", "dimension", int),
            self.number("quadrature", "order", int)
        )

    def shells(self, symbol, e=0.0, n_t=None):
        n_t = self.number("quadrature", "n_t", int) if n_t is None else n_t
        return self._build("quadrature", shell_grid, symbol, n_t, e)

    @property
    def threads(self) -> int:
        return max(1, self.number("run", "threads", int))


class Artifacts:
    """Writes CSV/JSON artifacts into the output directory, each carrying the config hash."""

    def __init__(self, directory, config_hash) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.config_hash = config_hash
        self.written = []

    def frame(self, name, frame: pd.DataFrame) -> None:
        frame = frame.copy()
        frame["config_hash"] = self.config_hash
        path = self.directory / name
        frame.to_csv(path, index=False, float_format="%.17g")
        self.written.append(name)
        logger.info(f"wrote {path}")

    def json(self, name, payload: dict) -> None:
        payload = {**payload, "config_hash": self.config_hash}
        path = self.directory / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8")
        self.written.append(name)
        logger.info(f"wrote {path}")


def _jsonable(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"real": float(np.real(value)), "imag": float(np.imag(value))}
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, pd.DataFrame):
        return value.to_dict(orient="records")
    return str(value)


def _lambdas(config: ExperimentConfig, V, symbol, grid, j):
    text = config.get("sweep", "lambdas").strip()
    if text == "auto":
        return auto_lambda_grid(V, symbol, grid, j, config.number("sweep", "n", int))
    return np.array(config.numbers("sweep", "lambdas"))


def run_norms(config: ExperimentConfig, out: Artifacts) -> None:
    report = norm_report(config.potential(), symbol=config.symbol())
    out.json("norms.json", report.to_dict())
    out.frame("norms.csv", report.to_frame())


def run_vs_spectrum(config: ExperimentConfig, out: Artifacts) -> None:
    V, symbol, quad = config.potential(), config.symbol(), config.quadrature()
    M = assemble_vs(V, quad, symbol)
    spectrum = vs_spectrum(M)
    out.frame("vs_spectrum.csv", spectrum.to_frame())
    summary = {
        "label": M.label,
        "size": M.size,
        "hermitian": M.is_hermitian,
        "spectral_radius": spectrum.spectral_radius,
        "positive_count": len(spectrum.positive),
        "top": np.real(spectrum.eigenvalues[:5]).tolist(),
        "schatten": {str(p): value for p, value in spectrum.schatten.items()},
    }
    if V.is_radial and V.has_transform:
        funk_hecke = funk_hecke_spectrum(V, symbol, config.number("quadrature", "l_max", int))
        out.frame("funk_hecke.csv", funk_hecke)
    out.json("vs_spectrum.json", summary)


def _curve_frame(curves) -> pd.DataFrame:
    frames = [curve.samples.drop(columns=["spectrum"]).assign(index=curve.index) for curve in curves]
    return pd.concat(frames, ignore_index=True)


def run_bs_curve(config: ExperimentConfig, out: Artifacts) -> None:
    V, symbol, grid = config.potential(), config.symbol(), config.grid()
    e_values = config.numbers("run", "e_values")
    k = config.number("run", "k", int)
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        tables = list(pool.map(lambda e: bs_eigs_iterative(V, symbol, e, grid, k), e_values))
        norms = list(pool.map(lambda e: bs_operator_norm(V, symbol, e, grid), e_values))
    out.frame("bs_eigenvalues.csv", pd.concat(tables, ignore_index=True))
    out.frame("bs_norms.csv", pd.DataFrame(norms))

    indices = config.numbers("sweep", "indices", int)
    lambdas = _lambdas(config, V, symbol, grid, max(indices))
    curves = sweep(V, symbol, grid, lambdas, indices, config.threads)
    out.frame("bs_curve.csv", _curve_frame(curves))


def run_fit(config: ExperimentConfig, out: Artifacts) -> None:
    path = config.get("fit", "curve").strip()
    if not path or not Path(path).is_file():
        raise utils.ConfigError(f"fit.curve has to name an existing curve CSV, got {path!r}")
    try:
        table = pd.read_csv(path)
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise utils.ConfigError(f"curve {path} is not a readable CSV: {exc}") from exc
    if not {"lambda", "e"} <= set(table.columns):
        raise utils.ConfigError(f"curve {path} needs columns lambda and e")
    try:
        table = table.astype({"lambda": float, "e": float})
    except (TypeError, ValueError) as exc:
        raise utils.ConfigError(f"curve {path} has non-numeric lambda or e values") from exc
    table = table[np.isfinite(table["e"])]
    if table.empty:
        raise utils.ConfigError(f"curve {path} has no valid samples")
    symbol = config.symbol()
    a_text = config.get("fit", "a").strip()
    if a_text:
        a = config.number("fit", "a")
    else:
        a = float(np.real(vs_spectrum(assemble_vs(config.potential(), config.quadrature(), symbol)).eigenvalues[0]))
    reports = []
    for index, group in table.groupby(table["index"] if "index" in table.columns else np.zeros(len(table), int)):
        try:
            curve = EigenCurve.from_values(
                group["lambda"].values, group["e"].values, int(index), symbol.convention, symbol.coupling_factor
            )
            report = first_order_fit(curve, a)
        except ValueError as exc:
            raise utils.ConfigError(f"curve {path}, branch {index}: {exc}") from exc
        out.frame(f"fit_{index}.csv", report.to_frame())
        reports.append(report.to_dict())
    out.json("fit.json", {"reports": reports})


def run_second_order(config: ExperimentConfig, out: Artifacts) -> None:
    V, symbol, grid, quad = config.potential(), config.symbol(), config.grid(), config.quadrature()
    shells = config.shells(symbol)
    reports = []
    for j in config.numbers("sweep", "indices", int):
        lambdas = _lambdas(config, V, symbol, grid, j)
        report = weak_coupling_report(V, symbol, grid, lambdas, j, quad, shells, config.threads)
        out.frame(f"second_order_{j}.csv", report.to_frame())
        reports.append(report.to_dict())
    out.json("second_order.json", {"reports": reports})


def run_knapp(config: ExperimentConfig, out: Artifacts) -> None:
    V = config.potential()
    eps = config.number("knapp", "eps")
    R_values = config.numbers("knapp", "R_values")
    try:
        amalgam = amalgam_norm(V)
    except utils.Divergent as exc:
        logger.warning(f"amalgam norm diverges, C_N is not reported: {exc}")
        amalgam = None
    result = knapp_sweep(V, R_values, eps, amalgam=amalgam)
    out.frame("knapp.csv", result["table"])
    summary = {"R0": result["R0"], "eps": eps, "amalgam_norm": amalgam}
    K = config.number("knapp", "K", int)
    if K > 1:
        R = R_values[-1]
        certificate = multi_cap_certificate(V, R, K, max(2.0, R**eps), amalgam=amalgam)
        out.frame("knapp_caps.csv", certificate.pop("forms"))
        summary["multi_cap"] = certificate
    out.json("knapp.json", summary)


def run_kernel_bounds(config: ExperimentConfig, out: Artifacts) -> None:
    symbol = config.symbol()
    rho, r = config.numbers("kernel", "rho"), config.numbers("kernel", "r")
    holder = kernel_difference_bound(symbol, config.number("kernel", "alpha"), rho, r)
    decay = uniform_decay_bound(symbol, config.numbers("kernel", "t"), r)
    out.frame("kernel_difference.csv", holder.pop("table"))
    out.frame("uniform_decay.csv", decay.pop("table"))
    e_values = config.numbers("run", "e_values")
    out.frame("log_weights.csv", pd.DataFrame([log_weight_integrals(symbol, e) for e in e_values]))
    out.json("kernel_bounds.json", {"holder": holder, "decay": decay})


def run_spectral_measure_check(config: ExperimentConfig, out: Artifacts) -> None:
    symbol, grid, quad = config.symbol(), config.grid(), config.quadrature()
    width = config.number("spectral", "width")
    shells = config.shells(symbol, n_t=config.number("spectral", "n_t", int))
    positions = grid.positions()
    f = np.exp(-np.pi * np.sum(positions**2, axis=-1) / width**2)
    tau = symbol.tau

    def h(t):
        t = np.asarray(t, dtype=float)
        inside = (t > tau / 4) & (t < tau / 2)
        return np.where(inside, np.exp(-((t - 3 * tau / 8) / (tau / 48))**2 / 2), 0.0)

    result = spectral_measure_check(f, f, h, symbol, grid, quad, shells)
    out.json("spectral_measure.json", result)


def run_oracle_compare(config: ExperimentConfig, out: Artifacts) -> None:
    V, symbol, grid = config.potential(), config.symbol(), config.grid()
    k = config.number("run", "k", int)
    rows = []
    for e in config.numbers("run", "e_values"):
        dense = bs_dense_oracle(V, symbol, e, grid)
        exact = np.real(vs_spectrum(dense).eigenvalues[:k])
        iterative = bs_eigs_iterative(V, symbol, e, grid, k)["value"].values
        for index in range(k):
            rows.append({
                "e": e,
                "index": index,
                "dense": float(exact[index]),
                "iterative": float(np.real(iterative[index])),
                "difference": float(abs(exact[index] - iterative[index])),
                "hermitian": dense.is_hermitian,
            })
    table = pd.DataFrame(rows)
    out.frame("oracle_compare.csv", table)
    out.json("oracle_compare.json", {"max_difference": float(table["difference"].max())})


def run_riesz_count(config: ExperimentConfig, out: Artifacts) -> None:
    V, symbol, grid, quad = config.potential(), config.symbol(), config.grid(), config.quadrature()
    e, lam = config.number("riesz", "e"), config.number("riesz", "lambda")
    components = bs_split(V, symbol, e, grid, quad)
    sing = components.dense("sing").matrix
    full = components.dense("full").matrix
    table = riesz_count(
        lambda kappa: lam * ((1 - kappa) * sing + kappa * full),
        config.number("riesz", "center"),
        config.number("riesz", "radius"),
        config.numbers("riesz", "kappa")
    )
    out.frame("riesz_count.csv", table)
    out.json("riesz_count.json", {"ranks": table["rank"].tolist(), "constant": bool(table["rank"].nunique() == 1)})


RUNNERS = {
    "norms": run_norms,
    "vs-spectrum": run_vs_spectrum,
    "bs-curve": run_bs_curve,
    "fit": run_fit,
    "second-order": run_second_order,
    "knapp": run_knapp,
    "kernel-bounds": run_kernel_bounds,
    "spectral-measure-check": run_spectral_measure_check,
    "oracle-compare": run_oracle_compare,
    "riesz-count": run_riesz_count,
}


def run(command, config: ExperimentConfig, out_dir) -> int:
    """Runs one command and writes its artifacts plus manifest.json; returns the exit status."""
    if command not in RUNNERS:
        raise utils.ConfigError(f"unknown command {command!r}, possible values: {COMMANDS}")
    np.random.seed(config.number("run", "seed", int))
    artifacts = Artifacts(out_dir, config.hash)
    start = time.perf_counter()
    status, error = 0, None
    try:
        RUNNERS[command](config, artifacts)
    except utils.ConfigError as exc:
        status, error = 2, exc
    except (utils.SizeExceeded, utils.ScaleTooLarge, utils.InvalidExponents, utils.DimensionMismatch) as exc:
        status, error = 2, exc
    except utils.ResolutionExceeded as exc:
        status, error = 4, exc
    except utils.NumericalError as exc:
        status, error = 3, exc
    except ValueError as exc:
        status, error = 2, exc

    if error is not None:
        logger.error(f"{command} failed: {type(error).__name__}: {error}")
        artifacts.json("error.json", {
            "command": command,
            "error": type(error).__name__,
            "message": str(error),
            "diagnostics": getattr(error, "diagnostics", {}),
        })
    manifest = {
        "command": command,
        "status": status,
        "config": config.to_dict(),
        "config_hash": config.hash,
        "artifacts": artifacts.written,
        "wall_time": time.perf_counter() - start,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
        },
    }
    (artifacts.directory / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8"
    )
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weakcoupling", description="Weak-coupling eigenvalue experiments")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, default=None, help="sectioned key = value configuration file")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (overrides run.threads)")
    parser.add_argument(
        "--override", action="append", default=[], metavar="SECTION.KEY=VALUE", help="patch a configuration value"
    )
    parser.add_argument("--log-level", default="WARNING", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    overrides = list(args.override)
    if args.threads is not None:
        overrides.append(f"run.threads={args.threads}")
    try:
        config = ExperimentConfig.load(args.config, overrides)
    except utils.ConfigError as exc:
        logger.error(str(exc))
        return 2
    return run(args.command, config, args.out)


if __name__ == "__main__":
    sys.exit(main())
