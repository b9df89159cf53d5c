"""Reproducible experiment runs: configs, manifests, and the four commands.

An experiment is one flat ``key = value`` config file.  Each command writes
its outputs plus a JSON manifest recording the config hash, per-stage wall
times, diagnostics, and every file produced; reruns with ``resume=True`` skip
stages whose outputs already exist under the same config hash.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dataio
from .errors import ConfigError
from .forward import (EQUATION_KINDS, CoefficientField, GridSpec, add_noise,
                      background_field, boundary_sources, gaussian_bump_field,
                      generate_dataset, point_sources)
from .inversion import MODES, invert_dataset, relative_l2_error


@dataclass(frozen=True)
class GaussianBump:
    amplitude: float
    center: tuple
    sigma: tuple


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    equation: str
    seed: int
    grid: GridSpec
    bumps: tuple
    lambdas: tuple
    source_layout: str
    source_smoothing: float
    source_offset: float
    modes: tuple
    gramian_threshold: float
    gramian_relative: bool
    pinv_thresholds: dict  # mode -> threshold
    sweep_alphas: tuple = ()
    sweep_pinv: tuple = ()
    noise_percents: tuple = ()
    noise_pinv: tuple = ()
    noise_alpha: float | None = None

    def true_field(self) -> CoefficientField:
        return gaussian_bump_field(self.grid, self.equation,
                                   [(b.amplitude, b.center, b.sigma) for b in self.bumps])

    def perturbation(self) -> np.ndarray:
        base = 0.0 if self.equation == "schrodinger" else 1.0
        return self.true_field().values - base

    def sources(self):
        if self.grid.dimension == 1 and self.source_offset > 0.0:
            node = round(self.source_offset / self.grid.spacing)
            return point_sources(self.grid, [node], self.source_smoothing)
        return boundary_sources(self.grid, self.source_layout, self.source_smoothing)


def _floats(text: str) -> list:
    return [float(tok) for tok in text.replace(",", " ").split()]


def parse_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    try:
        exp = parser["experiment"]
        name = exp.get("name", Path(path).stem)
        equation = exp["equation"].strip()
        if equation not in EQUATION_KINDS:
            raise ConfigError(f"{path}: unknown equation {equation!r}")
        seed = exp.getint("seed", 0)

        g = parser["grid"]
        grid = GridSpec(g.getint("dimension"), g.getfloat("xmin"),
                        g.getfloat("xmax"), g.getint("nodes"))

        bumps = []
        if parser.has_section("field"):
            for key in sorted(parser["field"]):
                vals = _floats(parser["field"][key])
                need = 1 + 2 * grid.dimension
                if len(vals) != need:
                    raise ConfigError(
                        f"{path}: bump {key!r} needs {need} numbers "
                        f"(amplitude, center, sigma per axis), got {len(vals)}"
                    )
                d = grid.dimension
                bumps.append(GaussianBump(vals[0], tuple(vals[1:1 + d]),
                                          tuple(vals[1 + d:])))

        src = parser["sources"] if parser.has_section("sources") else {}
        layout = src.get("layout", "origin" if grid.dimension == 1 else "edge_thirds")
        smoothing = float(src.get("smoothing", 0.0))
        offset = float(src.get("offset", 0.0))
        if offset and grid.dimension != 1:
            raise ConfigError(f"{path}: source offset applies to 1-D grids only")

        lambdas = tuple(_floats(parser["data"]["lambdas"]))
        if not lambdas or any(l <= 0 for l in lambdas) or list(lambdas) != sorted(set(lambdas)):
            raise ConfigError(f"{path}: lambdas must be positive and strictly increasing")

        inv = parser["inversion"]
        modes = tuple(inv.get("modes", "reg_lsl").replace(",", " ").split())
        for mode in modes:
            if mode not in MODES:
                raise ConfigError(f"{path}: unknown mode {mode!r}")
        gramian = inv.getfloat("gramian_threshold")
        if gramian is None or gramian <= 0:
            raise ConfigError(f"{path}: gramian_threshold must be positive")
        relative = inv.getboolean("gramian_relative", False)
        default_pinv = inv.getfloat("pinv_threshold")
        if default_pinv is None or not 0 <= default_pinv < 1:
            raise ConfigError(f"{path}: pinv_threshold must be in [0, 1)")
        pinv = {}
        for mode in modes:
            pinv[mode] = inv.getfloat(f"pinv_{mode}", default_pinv)

        sweep_alphas, sweep_pinv = (), ()
        if parser.has_section("sweep"):
            sweep_alphas = tuple(_floats(parser["sweep"]["alphas"]))
            sweep_pinv = tuple(_floats(parser["sweep"].get("pinv", "")))
            if sweep_pinv and len(sweep_pinv) != len(sweep_alphas):
                raise ConfigError(f"{path}: sweep pinv list must pair with alphas")

        noise_percents, noise_pinv = (), ()
        noise_alpha = None
        if parser.has_section("noise"):
            noise_percents = tuple(_floats(parser["noise"]["percents"]))
            if any(p < 0 for p in noise_percents):
                raise ConfigError(f"{path}: noise percents must be nonnegative")
            noise_pinv = tuple(_floats(parser["noise"].get("pinv", "")))
            if noise_pinv and len(noise_pinv) != len(noise_percents):
                raise ConfigError(f"{path}: noise pinv list must pair with percents")
            if "alpha" in parser["noise"]:
                noise_alpha = float(parser["noise"]["alpha"])
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None

    return ExperimentConfig(
        name=name, equation=equation, seed=seed, grid=grid, bumps=tuple(bumps),
        lambdas=lambdas, source_layout=layout, source_smoothing=smoothing,
        source_offset=offset, modes=modes, gramian_threshold=gramian,
        gramian_relative=relative, pinv_thresholds=pinv,
        sweep_alphas=sweep_alphas, sweep_pinv=sweep_pinv,
        noise_percents=noise_percents, noise_pinv=noise_pinv,
        noise_alpha=noise_alpha,
    )


def emit_config(config: ExperimentConfig) -> str:
    """Serialize a config; parse(emit(c)) is semantically identical to c."""
    parser = configparser.ConfigParser()
    parser["experiment"] = {
        "name": config.name, "equation": config.equation, "seed": str(config.seed),
    }
    parser["grid"] = {
        "dimension": str(config.grid.dimension),
        "xmin": f"{config.grid.xmin:.17g}", "xmax": f"{config.grid.xmax:.17g}",
        "nodes": str(config.grid.nodes),
    }
    parser["field"] = {
        f"bump{i + 1}": " ".join(f"{v:.17g}" for v in
                                 (b.amplitude, *b.center, *b.sigma))
        for i, b in enumerate(config.bumps)
    }
    parser["sources"] = {
        "layout": config.source_layout, "smoothing": f"{config.source_smoothing:.17g}",
        "offset": f"{config.source_offset:.17g}",
    }
    parser["data"] = {"lambdas": " ".join(f"{v:.17g}" for v in config.lambdas)}
    inv = {
        "modes": " ".join(config.modes),
        "gramian_threshold": f"{config.gramian_threshold:.17g}",
        "gramian_relative": str(config.gramian_relative).lower(),
        "pinv_threshold": f"{config.pinv_thresholds[config.modes[0]]:.17g}",
    }
    for mode in config.modes:
        inv[f"pinv_{mode}"] = f"{config.pinv_thresholds[mode]:.17g}"
    parser["inversion"] = inv
    if config.sweep_alphas:
        parser["sweep"] = {
            "alphas": " ".join(f"{v:.17g}" for v in config.sweep_alphas),
            "pinv": " ".join(f"{v:.17g}" for v in config.sweep_pinv),
        }
    if config.noise_percents:
        parser["noise"] = {
            "percents": " ".join(f"{v:.17g}" for v in config.noise_percents),
            "pinv": " ".join(f"{v:.17g}" for v in config.noise_pinv),
        }
        if config.noise_alpha is not None:
            parser["noise"]["alpha"] = f"{config.noise_alpha:.17g}"
    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(emit_config(config).encode()).hexdigest()[:16]


class RunManifest:
    """Per-run record: config hash, stage timings, diagnostics, outputs."""

    def __init__(self, config: ExperimentConfig, out_dir):
        self.path = Path(out_dir) / "manifest.json"
        self.data = {"name": config.name, "config_hash": config_hash(config),
                     "stages": {}}
        if self.path.exists():
            try:
                previous = json.loads(self.path.read_text())
            except json.JSONDecodeError:
                previous = {}
            if previous.get("config_hash") == self.data["config_hash"]:
                self.data["stages"] = previous.get("stages", {})

    def completed(self, stage: str) -> bool:
        record = self.data["stages"].get(stage)
        if not record:
            return False
        return all(Path(p).exists() for p in record.get("outputs", []))

    def record(self, stage: str, outputs, wall_time: float, diagnostics=None):
        self.data["stages"][stage] = {
            "outputs": [str(p) for p in outputs],
            "wall_time_s": wall_time,
            "diagnostics": diagnostics or {},
        }
        self.save()

    def save(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")


def _result_diagnostics(result) -> dict:
    out = {}
    for key, value in result.diagnostics.items():
        out[key] = value if not isinstance(value, np.generic) else value.item()
    out["residual"] = result.residual
    out["rows"] = result.row_count
    return out


def write_field_csv(path, grid: GridSpec, values: np.ndarray) -> None:
    pts = grid.points()
    header = ",".join(["x", "y"][: grid.dimension] + ["value"])
    with open(path, "w") as handle:
        handle.write(header + "\n")
        for i in range(pts.shape[0]):
            coords = ",".join(f"{c:.17g}" for c in pts[i])
            handle.write(f"{coords},{values[i]:.17g}\n")


def _write_sidecar(path, result, error=None) -> None:
    payload = {
        "mode": result.mode,
        "kind": result.kind,
        "gramian_threshold": result.gramian_threshold,
        "pinv_threshold": result.pinv_threshold,
        "residual": result.residual,
        "rows": result.row_count,
        "relative_l2_error": error,
        "diagnostics": _result_diagnostics(result),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n")


def dataset_paths(config: ExperimentConfig, out_dir) -> tuple:
    out = Path(out_dir)
    return (out / f"{config.name}_perturbed.dat", out / f"{config.name}_background.dat")


def cmd_simulate(config: ExperimentConfig, out_dir, resume: bool = False) -> dict:
    """Write the clean perturbed and background datasets."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config, out)
    perturbed_path, background_path = dataset_paths(config, out)
    if resume and manifest.completed("simulate"):
        return {"skipped": True, "outputs": [perturbed_path, background_path]}
    started = time.perf_counter()
    sources = config.sources()
    data = generate_dataset(config.grid, config.true_field(), config.lambdas, sources)
    data0 = generate_dataset(config.grid, background_field(config.grid, config.equation),
                             config.lambdas, sources)
    dataio.write_dataset(perturbed_path, data)
    dataio.write_dataset(background_path, data0)
    manifest.record("simulate", [perturbed_path, background_path],
                    time.perf_counter() - started,
                    {"points": len(config.lambdas), "sources": sources.count})
    return {"skipped": False, "outputs": [perturbed_path, background_path]}


def _invert_one(config, data, data0, mode, pinv, out_stem, manifest, stage,
                resume, alpha=None):
    csv_path = Path(f"{out_stem}.csv")
    json_path = Path(f"{out_stem}.json")
    if resume and manifest.completed(stage):
        return None
    started = time.perf_counter()
    result = invert_dataset(
        data, data0, config.sources(), mode, pinv,
        gramian_threshold=config.gramian_threshold if alpha is None else alpha,
        gramian_relative=config.gramian_relative,
    )
    error = None
    if config.bumps:
        error = relative_l2_error(config.grid, result.field, config.perturbation())
    write_field_csv(csv_path, config.grid, result.field)
    _write_sidecar(json_path, result, error)
    manifest.record(stage, [csv_path, json_path], time.perf_counter() - started,
                    {**_result_diagnostics(result), "relative_l2_error": error})
    return result, error


def cmd_invert(config: ExperimentConfig, data_path, background_path, out_dir,
               resume: bool = False) -> dict:
    """Invert a dataset pair with every configured mode."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = dataio.read_dataset(data_path)
    data0 = dataio.read_dataset(background_path)
    manifest = RunManifest(config, out)
    summary = {}
    for mode in config.modes:
        stem = out / f"{config.name}_{mode}"
        run = _invert_one(config, data, data0, mode, config.pinv_thresholds[mode],
                          stem, manifest, f"invert_{mode}", resume)
        if run is not None:
            result, error = run
            summary[mode] = error
            if error is not None:
                print(f"{config.name} {mode}: relative L2 error {error:.4f}")
    return summary


def cmd_sweep(config: ExperimentConfig, out_dir, alphas=None, pinv=None,
              resume: bool = False) -> list:
    """Reconstructions over a list of Gramian truncation levels (reg_lsl)."""
    alphas = tuple(alphas if alphas is not None else config.sweep_alphas)
    pinv = tuple(pinv if pinv is not None else config.sweep_pinv)
    if not alphas:
        raise ConfigError("sweep requires a nonempty alpha list")
    if not pinv:
        pinv = tuple(config.pinv_thresholds.get("reg_lsl",
                     next(iter(config.pinv_thresholds.values())))
                     for _ in alphas)
    if len(pinv) != len(alphas):
        raise ConfigError("sweep pinv list must pair with alphas")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cmd_simulate(config, out, resume=resume)
    perturbed_path, background_path = dataset_paths(config, out)
    data = dataio.read_dataset(perturbed_path)
    data0 = dataio.read_dataset(background_path)
    manifest = RunManifest(config, out)
    rows = []
    for a, p in zip(alphas, pinv):
        stem = out / f"{config.name}_sweep_{a:.0e}"
        run = _invert_one(config, data, data0, "reg_lsl", p, stem, manifest,
                          f"sweep_{a:.0e}", resume, alpha=a)
        if run is None:
            record = manifest.data["stages"][f"sweep_{a:.0e}"]["diagnostics"]
            rows.append((a, record.get("retained"), record.get("relative_l2_error")))
        else:
            result, error = run
            rows.append((a, result.diagnostics.get("retained"), error))
    summary = out / f"{config.name}_sweep_summary.csv"
    with open(summary, "w") as handle:
        handle.write("alpha,retained,relative_l2_error\n")
        for a, l, err in rows:
            handle.write(f"{a:.17g},{l},{'' if err is None else f'{err:.17g}'}\n")
    return rows


def cmd_noise(config: ExperimentConfig, out_dir, percents=None, pinv=None,
              resume: bool = False) -> list:
    """Seeded noise study: one reg_lsl reconstruction per noise level."""
    percents = tuple(percents if percents is not None else config.noise_percents)
    if not percents:
        raise ConfigError("noise study requires a nonempty percent list")
    pinv = tuple(pinv if pinv is not None else config.noise_pinv)
    if not pinv:
        pinv = tuple(config.pinv_thresholds.get("reg_lsl",
                     next(iter(config.pinv_thresholds.values())))
                     for _ in percents)
    if len(pinv) != len(percents):
        raise ConfigError("noise pinv list must pair with percents")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cmd_simulate(config, out, resume=resume)
    perturbed_path, background_path = dataset_paths(config, out)
    clean = dataio.read_dataset(perturbed_path)
    data0 = dataio.read_dataset(background_path)
    manifest = RunManifest(config, out)
    rows = []
    for pct, p in zip(percents, pinv):
        noisy = add_noise(clean, data0, pct, config.seed)
        noisy_path = out / f"{config.name}_noisy_{pct:g}pct.dat"
        dataio.write_dataset(noisy_path, noisy)
        stem = out / f"{config.name}_noise_{pct:g}pct"
        run = _invert_one(config, noisy, data0, "reg_lsl", p, stem, manifest,
                          f"noise_{pct:g}", resume, alpha=config.noise_alpha)
        if run is None:
            record = manifest.data["stages"][f"noise_{pct:g}"]["diagnostics"]
            rows.append((pct, record.get("relative_l2_error")))
        else:
            rows.append((pct, run[1]))
    summary = out / f"{config.name}_noise_summary.csv"
    with open(summary, "w") as handle:
        handle.write("noise_percent,relative_l2_error\n")
        for pct, err in rows:
            handle.write(f"{pct:.17g},{'' if err is None else f'{err:.17g}'}\n")
    return rows
