"""Command-line front end.

``polariton-tunneling run CONFIG`` computes the requested products and writes
them with a run manifest; ``polariton-tunneling validate CONFIG`` runs the
invariant suite only.  Exit codes: 0 success, 2 configuration error,
3 invariant violation (including a cavity without resonance), 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .arrowhead import build_fano_matrix, eigendecompose_arrowhead
from .electroluminescence import (DEFAULT_KAPPA, DEFAULT_RATE_NR, InjectorSpec,
                                  default_k_grid, electroluminescence_map,
                                  write_elmap_csv, write_elmap_json)
from .errors import NoResonanceError, ParameterError, SolverError
from .params import DeviceParams, subband_dispersion
from .polariton import QGrid, polariton_table
from .spectral import (DEFAULT_DISPLAY_WIDTH, broaden, spectral_function_subband2,
                       write_curve_csv)
from .validation import calibration_residual, refinement_delta, run_suite

log = logging.getLogger("polariton_tunneling")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_NUMERICAL = 4

PRODUCTS = ("dispersion", "spectral", "el", "validate")


class ConfigError(ValueError):
    """The run configuration is malformed."""


class InvariantError(RuntimeError):
    """A validation check failed."""


# ---------------------------------------------------------------------------
# configuration


def _block(raw: dict, key: str, allowed: set) -> dict:
    value = raw.get(key) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"'{key}' must be a mapping")
    unknown = set(value) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in '{key}': {sorted(unknown)}")
    return dict(value)


def _axis(spec, name: str) -> dict:
    """Axis spec ``{start, stop, num}``; strictly increasing, at least two points."""
    if not isinstance(spec, dict) or set(spec) != {"start", "stop", "num"}:
        raise ConfigError(f"axis '{name}' needs exactly start, stop and num")
    try:
        start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"axis '{name}': {exc}") from None
    if num < 2 or not stop > start:
        raise ConfigError(f"axis '{name}' must be strictly increasing with >= 2 points")
    return {"start": start, "stop": stop, "num": num}


def _injector(spec, where: str) -> dict:
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: injector must be a mapping")
    try:
        inj = InjectorSpec(**spec)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    except ParameterError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return {"shape": inj.shape, "center": float(inj.center),
            "width": float(inj.width), "strength": float(inj.strength)}


def _output(raw, index: int, default_injector) -> dict:
    where = f"outputs[{index}]"
    if not isinstance(raw, dict):
        raise ConfigError(f"{where} must be a mapping")
    product = raw.get("product")
    if product not in PRODUCTS:
        raise ConfigError(f"{where}: product must be one of {PRODUCTS}, got {product!r}")
    out = {"product": product}
    if product != "validate" or "path" in raw:
        if not isinstance(raw.get("path"), str) or not raw["path"]:
            raise ConfigError(f"{where}: missing output path")
        out["path"] = raw["path"]
    allowed = {"product", "path"}
    if product == "spectral":
        allowed |= {"k", "display_width", "omega", "axis"}
        out["k"] = float(raw.get("k", 1.2))
        out["display_width"] = float(raw.get("display_width", DEFAULT_DISPLAY_WIDTH))
        out["axis"] = raw.get("axis", "reduced")
        if out["axis"] not in ("reduced", "absolute"):
            raise ConfigError(f"{where}: axis must be 'reduced' or 'absolute'")
        out["omega"] = _axis(raw.get("omega", {"start": 0.6, "stop": 1.6, "num": 2001}),
                             f"{where}.omega")
    elif product == "el":
        allowed |= {"injector", "q_axis", "omega_axis", "n_k"}
        spec = raw.get("injector", default_injector)
        if spec is None:
            raise ConfigError(f"{where}: no injector block (inline or top-level)")
        out["injector"] = _injector(spec, where)
        out["q_axis"] = _axis(raw.get("q_axis"), f"{where}.q_axis")
        out["omega_axis"] = _axis(raw.get("omega_axis"), f"{where}.omega_axis")
        out["n_k"] = int(raw.get("n_k", 200))
        if out["n_k"] < 1:
            raise ConfigError(f"{where}: n_k must be >= 1")
    elif product == "validate":
        allowed |= {"display_width"}
        out["display_width"] = float(raw.get("display_width", DEFAULT_DISPLAY_WIDTH))
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    return out


@dataclass
class RunConfig:
    """Resolved run specification with every default filled in.

    ``grid`` bounds and ``q_axis`` specs are in units of ``q_res``; all
    frequencies are in units of the intersubband transition.
    """

    device: dict
    grid: dict
    rates: dict
    outputs: list
    injector: dict | None = None
    source: str = field(default="<memory>", compare=False)

    @classmethod
    def from_dict(cls, raw, source: str = "<memory>") -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a mapping")
        unknown = set(raw) - {"device", "grid", "rates", "injector", "outputs"}
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        device = _block(raw, "device", {"omega_c0", "rabi_res", "mass_scale", "qres_over_kf"})
        try:
            device = DeviceParams(**{k: float(v) for k, v in device.items()}).to_dict()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"device: {exc}") from None
        grid = {"n_q": 400, "q_min": 0.05, "q_max": 4.0}
        grid.update(_block(raw, "grid", set(grid)))
        rates = {"kappa": DEFAULT_KAPPA, "rate_nr": DEFAULT_RATE_NR}
        rates.update(_block(raw, "rates", set(rates)))
        try:
            grid = {"n_q": int(grid["n_q"]), "q_min": float(grid["q_min"]),
                    "q_max": float(grid["q_max"])}
            rates = {k: float(v) for k, v in rates.items()}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"grid/rates: {exc}") from None
        if grid["n_q"] < 1 or not 0 < grid["q_min"] <= grid["q_max"]:
            raise ConfigError("grid needs n_q >= 1 and 0 < q_min <= q_max")
        if min(rates.values()) < 0:
            raise ConfigError("rates must be non-negative")
        injector = raw.get("injector")
        if injector is not None:
            injector = _injector(injector, "injector")
        outputs = raw.get("outputs")
        if not isinstance(outputs, list) or not outputs:
            raise ConfigError("'outputs' must be a non-empty list")
        outputs = [_output(o, i, injector) for i, o in enumerate(outputs)]
        paths = [o["path"] for o in outputs if "path" in o]
        if len(set(paths)) != len(paths):
            raise ConfigError("output paths must be distinct")
        return cls(device, grid, rates, outputs, injector, source)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                raw = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(raw, str(path))

    def to_dict(self) -> dict:
        doc = {"device": self.device, "grid": self.grid, "rates": self.rates,
               "outputs": self.outputs}
        if self.injector is not None:
            doc["injector"] = self.injector
        return copy.deepcopy(doc)

    @property
    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def params(self) -> DeviceParams:
        return DeviceParams(**self.device)


# ---------------------------------------------------------------------------
# pipeline


def _linspace(spec: dict) -> np.ndarray:
    return np.linspace(spec["start"], spec["stop"], spec["num"])


class Pipeline:
    """Shared stages of one run: parameters, grid, table, eigensystem."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.timings = {}
        self.p = self._timed("parameters", config.params)
        self.grid = self._timed("grid", lambda: QGrid.uniform(self.p, **config.grid))
        self.table = self._timed("polariton_table", lambda: polariton_table(self.grid, self.p))
        self.matrix = self._timed("fano_matrix", lambda: build_fano_matrix(self.grid, self.p))
        self.eig = self._timed("eigensystem", lambda: eigendecompose_arrowhead(self.matrix))

    def _timed(self, stage, fn):
        start = time.perf_counter()
        result = fn()
        self.timings[stage] = self.timings.get(stage, 0.0) + time.perf_counter() - start
        return result

    def dispersion(self, out: dict, path: Path):
        write_dispersion_csv(self.table, path, self.config.fingerprint)

    def spectral(self, out: dict, path: Path):
        lines = spectral_function_subband2(out["k"], self.eig, self.p)
        if out["axis"] == "reduced":
            lines = lines.shifted(-subband_dispersion(1, out["k"], self.p))
        curve = broaden(lines, out["display_width"], _linspace(out["omega"]))
        write_curve_csv(curve, path, self.config.fingerprint)

    def el(self, out: dict, path: Path):
        inj = InjectorSpec(**out["injector"])
        rates = self.config.rates
        k_grid = default_k_grid(inj, self.p, rates["kappa"], rates["rate_nr"], out["n_k"])
        q_res = self.p.qres_over_kf
        el = electroluminescence_map(k_grid, inj, self.eig, self.table,
                                     _linspace(out["q_axis"]) * q_res,
                                     _linspace(out["omega_axis"]),
                                     kappa=rates["kappa"], rate_nr=rates["rate_nr"])
        if path.suffix.lower() == ".json":
            write_elmap_json(el, path, self.config.fingerprint, self.config.to_dict())
        else:
            write_elmap_csv(el, path, self.config.fingerprint)

    def validate(self, out: dict, path):
        checks = run_suite(self.grid, self.p, out.get("display_width", DEFAULT_DISPLAY_WIDTH))
        if path is not None:
            doc = {"fingerprint": self.config.fingerprint,
                   "checks": [c.to_dict() for c in checks]}
            with open(path, "w") as fh:
                json.dump(doc, fh, indent=1, sort_keys=True)
                fh.write("\n")
        return checks

    def convergence(self) -> dict:
        metrics = {"calibration_residual": calibration_residual(self.eig, self.p)}
        if len(self.grid) > 1:
            metrics["refinement_delta"] = self._timed(
                "refinement", lambda: refinement_delta(self.grid, self.p, self.eig))
        return metrics


def write_dispersion_csv(table, path, fingerprint: str) -> None:
    """Branch table on the ring grid: q, both frequencies, both photon fractions."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# fingerprint={fingerprint}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["q", "omega_minus", "omega_plus",
                         "photon_frac_minus", "photon_frac_plus"])
        for row in zip(table.q_values, table.omega_minus, table.omega_plus,
                       table.photon_frac_minus, table.photon_frac_plus):
            writer.writerow([f"{x:.17g}" for x in row])


def execute(config: RunConfig, output_dir: Path, threads: int = 1,
            validate_only: bool = False) -> int:
    """Run the pipeline and write products plus ``manifest.json``; return an exit code."""
    output_dir.mkdir(parents=True, exist_ok=True)
    pipe = Pipeline(config)
    outputs = config.outputs
    if validate_only:
        outputs = [o for o in outputs if o["product"] == "validate"] or [{"product": "validate"}]

    def produce(out):
        path = output_dir / out["path"] if "path" in out else None
        start = time.perf_counter()
        result = getattr(pipe, out["product"])(out, path)
        return out, result, time.perf_counter() - start

    # products are independent; each writes its own file
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(produce, outputs))

    failed = []
    for out, result, elapsed in results:
        label = out.get("path", out["product"])
        pipe.timings[f"product:{label}"] = elapsed
        if out["product"] == "validate":
            for check in result:
                print(check.line())
                if not check.passed:
                    failed.append(check.name)

    manifest = {
        "version": __version__,
        "fingerprint": config.fingerprint,
        "config": config.to_dict(),
        "convergence": pipe.convergence(),
        "timings_s": pipe.timings,
        "products": [o["path"] for o in outputs if "path" in o],
        "failed_checks": failed,
    }
    with open(output_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    if failed:
        print(f"validate: failing checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polariton-tunneling",
        description="Dressed electron states, spectral functions and electroluminescence "
                    "of a microcavity-embedded electron gas.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("run", "compute the requested products"),
                       ("validate", "run the invariant suite only")):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("config", help="YAML run configuration")
        cmd.add_argument("--output-dir", default=".", help="directory for products (default: .)")
        cmd.add_argument("--threads", type=int, default=1,
                         help="worker threads across independent products")
        cmd.add_argument("--seed", type=int, default=None,
                         help="reserved; the pipeline is deterministic")
        cmd.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error [cli]: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = RunConfig.load(args.config)
    except ConfigError as exc:
        print(f"error [cli/config]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("config %s fingerprint %s", config.source, config.fingerprint)
    try:
        return execute(config, Path(args.output_dir), args.threads,
                       validate_only=args.command == "validate")
    except NoResonanceError as exc:
        print(f"error [core-model/resonant_wavevector]: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except SolverError as exc:
        print(f"error [arrowhead-solver/secular]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"error [numerics]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ParameterError as exc:
        print(f"error [config/parameters]: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
