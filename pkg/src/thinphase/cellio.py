"""Cells and solutions on disk: a JSON header next to flat binary arrays.

Layout (``<stem>.json`` plus one ``<stem>.<name>.bin`` per array)::

    {
      "format": "thinphase-cell" | "thinphase-solution",
      "version": 1,
      "dim": 2,
      "shape": [64, 64],
      "cell_lengths": [1.0, 1.0],
      "spacing": [0.015625, 0.015625],
      "phase_table": {"0": [[1.0, 0.0], [0.0, 1.0]], ...},
      "arrays": {"phase_map": {"file": "cell.phase_map.bin", "shape": [64, 64]}, ...}
    }

Every array is row-major (C order), little-endian IEEE 64-bit float
(``<f8``); phase indices are stored as floats and must be integral.
Solution headers add ``applied_field``, ``residual``, ``iterations`` and
``effective_column``; their arrays are ``u`` (grid), ``E`` and ``J``
(``[d] + grid``).

A cell header may instead describe the geometry analytically::

    {"format": "thinphase-cell", "geometry": {"type": "laminate",
     "conductivities": [1, 4], "fractions": [0.5, 0.5], "n": 64, "d": 2, "axis": 0}}

with ``type`` one of ``laminate``, ``ball`` (``radius``, ``sigma_in``,
``sigma_out``, ``n``, ``d``, optional ``smoothing``) or ``checkerboard``
(``sigma_a``, ``sigma_b``, ``n``).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .solver import PeriodicCell, PeriodicCellSolution, ball_cell, checkerboard_cell, laminate_cell

DTYPE = "<f8"
VERSION = 1


class CellFormatError(ValueError):
    pass


def _stem(path) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix == ".json" else p


def _write_array(stem: Path, name: str, arr) -> dict:
    fname = f"{stem.name}.{name}.bin"
    a = np.ascontiguousarray(arr, dtype=DTYPE)
    a.tofile(stem.parent / fname)
    return {"file": fname, "shape": list(a.shape)}


def _read_array(base: Path, spec: dict) -> np.ndarray:
    path = base / spec["file"]
    data = np.fromfile(path, dtype=DTYPE)
    shape = tuple(spec["shape"])
    if data.size != int(np.prod(shape)):
        raise CellFormatError(f"{path}: {data.size} values, header expects shape {shape}")
    return data.reshape(shape)


def _cell_header(cell: PeriodicCell, fmt: str) -> dict:
    return {
        "format": fmt,
        "version": VERSION,
        "dim": cell.dim,
        "shape": list(cell.grid_shape),
        "cell_lengths": list(cell.cell_lengths),
        "spacing": cell.spacing.tolist(),
        "phase_table": {str(k): t.matrix.tolist() for k, t in sorted(cell.phase_table.items())},
        "arrays": {},
    }


def save_cell(cell: PeriodicCell, path) -> Path:
    """Write ``cell`` as ``<stem>.json`` plus binary arrays; returns the header path."""
    stem = _stem(path)
    header = _cell_header(cell, "thinphase-cell")
    header["arrays"]["phase_map"] = _write_array(stem, "phase_map", cell.phase_map)
    if cell.voxel_tensors is not None:
        header["arrays"]["voxel_tensors"] = _write_array(stem, "voxel_tensors", cell.voxel_tensors)
    out = stem.with_suffix(".json")
    out.write_text(json.dumps(header, indent=2, sort_keys=True))
    return out


def _cell_from_geometry(geo: dict) -> PeriodicCell:
    kind = geo.get("type")
    try:
        if kind == "laminate":
            return laminate_cell(geo["conductivities"], geo["fractions"], int(geo["n"]),
                                 d=int(geo.get("d", 2)), axis=int(geo.get("axis", 0)))
        if kind == "ball":
            return ball_cell(geo["radius"], geo["sigma_in"], geo["sigma_out"], int(geo["n"]),
                             d=int(geo.get("d", 2)), smoothing=geo.get("smoothing", "center"))
        if kind == "checkerboard":
            return checkerboard_cell(geo["sigma_a"], geo["sigma_b"], int(geo["n"]))
    except KeyError as exc:
        raise CellFormatError(f"geometry '{kind}' is missing field {exc}") from None
    raise CellFormatError(f"unknown geometry type {kind!r}")


def load_cell(path) -> PeriodicCell:
    path = Path(path)
    header = json.loads(path.read_text())
    if header.get("format") != "thinphase-cell":
        raise CellFormatError(f"{path}: not a cell header")
    if "geometry" in header:
        return _cell_from_geometry(header["geometry"])
    base = path.parent
    pm = _read_array(base, header["arrays"]["phase_map"])
    if not np.all(pm == np.rint(pm)):
        raise CellFormatError(f"{path}: phase indices must be integral")
    vt = None
    if "voxel_tensors" in header["arrays"]:
        vt = _read_array(base, header["arrays"]["voxel_tensors"])
    table = {int(k): np.array(v) for k, v in header["phase_table"].items()}
    return PeriodicCell(pm.astype(np.int64), table, tuple(header["cell_lengths"]), voxel_tensors=vt)


def save_solution(solution: PeriodicCellSolution, path) -> Path:
    stem = _stem(path)
    cell = solution.cell
    header = _cell_header(cell, "thinphase-solution")
    header.update(
        applied_field=solution.applied_field.tolist(),
        residual=solution.residual,
        iterations=solution.iterations,
        effective_column=solution.effective_column.tolist(),
    )
    header["arrays"]["phase_map"] = _write_array(stem, "phase_map", cell.phase_map)
    for name in ("u", "E", "J"):
        header["arrays"][name] = _write_array(stem, name, getattr(solution, name))
    out = stem.with_suffix(".json")
    out.write_text(json.dumps(header, indent=2, sort_keys=True))
    return out


def load_solution(path) -> PeriodicCellSolution:
    path = Path(path)
    header = json.loads(path.read_text())
    if header.get("format") != "thinphase-solution":
        raise CellFormatError(f"{path}: not a solution header")
    base = path.parent
    pm = _read_array(base, header["arrays"]["phase_map"]).astype(np.int64)
    table = {int(k): np.array(v) for k, v in header["phase_table"].items()}
    cell = PeriodicCell(pm, table, tuple(header["cell_lengths"]))
    arrs = {k: _read_array(base, header["arrays"][k]) for k in ("u", "E", "J")}
    return PeriodicCellSolution(cell, np.array(header["applied_field"]), arrs["u"], arrs["E"], arrs["J"],
                                float(header["residual"]), int(header["iterations"]))
