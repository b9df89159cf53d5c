"""Structured-text serialization for datasets and ROM matrices.

One dataset (or ROM) per file, line oriented ``key = value`` with numeric
values printed with 17 significant digits so that float64 round-trips are
exact.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .forward import GridSpec, TransferDataset
from .rom import RomMatrices

DATASET_TAG = "reglsl-dataset-1"
ROM_TAG = "reglsl-rom-1"


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _fmt_row(values) -> str:
    return " ".join(_fmt(v) for v in np.asarray(values, dtype=float).ravel())


def _parse_floats(text: str, count: int, path, label: str) -> np.ndarray:
    parts = text.split()
    if len(parts) != count:
        raise DataFormatError(f"{path}: expected {count} numbers for {label}, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise DataFormatError(f"{path}: bad number in {label}: {exc}") from None


def _read_pairs(path) -> dict:
    pairs = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataFormatError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        pairs[key.strip()] = value.strip()
    return pairs


def _require(pairs: dict, key: str, path) -> str:
    if key not in pairs:
        raise DataFormatError(f"{path}: missing key {key!r}")
    return pairs[key]


def write_dataset(path, dataset: TransferDataset) -> None:
    grid = dataset.grid
    lines = [
        f"format = {DATASET_TAG}",
        f"equation = {dataset.kind}",
        f"dimension = {grid.dimension}",
        f"xmin = {_fmt(grid.xmin)}",
        f"xmax = {_fmt(grid.xmax)}",
        f"nodes = {grid.nodes}",
        f"sources = {dataset.n_sources}",
        f"points = {dataset.n_points}",
        f"noise_percent = {_fmt(dataset.noise_percent)}",
        f"noise_seed = {'none' if dataset.noise_seed is None else dataset.noise_seed}",
    ]
    for j in range(dataset.n_points):
        lines.append(f"lambda {j + 1} = {_fmt(dataset.lambdas[j])}")
        lines.append(f"F {j + 1} = {_fmt_row(dataset.transfer[j])}")
        lines.append(f"dF {j + 1} = {_fmt_row(dataset.derivative[j])}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_dataset(path) -> TransferDataset:
    pairs = _read_pairs(path)
    if _require(pairs, "format", path) != DATASET_TAG:
        raise DataFormatError(f"{path}: not a {DATASET_TAG} file")
    try:
        grid = GridSpec(
            int(_require(pairs, "dimension", path)),
            float(_require(pairs, "xmin", path)),
            float(_require(pairs, "xmax", path)),
            int(_require(pairs, "nodes", path)),
        )
        k = int(_require(pairs, "sources", path))
        m = int(_require(pairs, "points", path))
        percent = float(_require(pairs, "noise_percent", path))
        seed_text = _require(pairs, "noise_seed", path)
        seed = None if seed_text == "none" else int(seed_text)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    lambdas = np.empty(m)
    transfer = np.empty((m, k, k))
    derivative = np.empty((m, k, k))
    for j in range(m):
        lambdas[j] = _parse_floats(_require(pairs, f"lambda {j + 1}", path), 1, path, "lambda")[0]
        transfer[j] = _parse_floats(
            _require(pairs, f"F {j + 1}", path), k * k, path, f"F {j + 1}"
        ).reshape(k, k)
        derivative[j] = _parse_floats(
            _require(pairs, f"dF {j + 1}", path), k * k, path, f"dF {j + 1}"
        ).reshape(k, k)
    try:
        return TransferDataset(
            _require(pairs, "equation", path), grid, lambdas, transfer, derivative,
            noise_percent=percent, noise_seed=seed,
        )
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def write_rom(path, rom: RomMatrices) -> None:
    size = rom.mass.shape[0]
    lines = [
        f"format = {ROM_TAG}",
        f"equation = {rom.kind}",
        f"sources = {rom.n_sources}",
        f"points = {rom.lambdas.size}",
        f"lambdas = {_fmt_row(rom.lambdas)}",
    ]
    for name, mat in (("M", rom.mass), ("S", rom.stiffness), ("B", rom.rhs)):
        for i in range(mat.shape[0]):
            lines.append(f"{name} row {i + 1} = {_fmt_row(mat[i])}")
    lines.append(f"asymmetry = {_fmt(rom.mass_asymmetry)} {_fmt(rom.stiffness_asymmetry)}")
    del size
    Path(path).write_text("\n".join(lines) + "\n")


def read_rom(path) -> RomMatrices:
    pairs = _read_pairs(path)
    if _require(pairs, "format", path) != ROM_TAG:
        raise DataFormatError(f"{path}: not a {ROM_TAG} file")
    try:
        k = int(_require(pairs, "sources", path))
        m = int(_require(pairs, "points", path))
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    lambdas = _parse_floats(_require(pairs, "lambdas", path), m, path, "lambdas")
    size = m * k
    mass = np.empty((size, size))
    stiffness = np.empty((size, size))
    rhs = np.empty((size, k))
    for name, mat in (("M", mass), ("S", stiffness), ("B", rhs)):
        for i in range(mat.shape[0]):
            mat[i] = _parse_floats(
                _require(pairs, f"{name} row {i + 1}", path), mat.shape[1], path, f"{name} row"
            )
    asym = _parse_floats(_require(pairs, "asymmetry", path), 2, path, "asymmetry")
    return RomMatrices(
        mass=mass, stiffness=stiffness, rhs=rhs, lambdas=lambdas,
        n_sources=k, kind=_require(pairs, "equation", path),
        mass_asymmetry=float(asym[0]), stiffness_asymmetry=float(asym[1]),
    )
