"""Dataset container and deterministic CSV/JSON serialization.

CSV files carry ``# key=value`` metadata lines, then a header row, then one
row per grid point (axis columns followed by value columns). JSON files are
a single object {meta, axes, value_names, values}. Numbers are written as
shortest round-trip decimals and metadata keys are sorted, so identical
inputs serialize to identical bytes. Files are written to a temporary name
and atomically renamed, so partial output is never left behind.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .experiments import AxisDef

__all__ = ["Dataset", "emit_dataset", "write_dataset", "config_hash", "TOOL_VERSION"]

TOOL_VERSION = "ccdsim 0.1.0"


def config_hash(config_text: str) -> str:
    """Git-blob-style SHA-1 of the canonical configuration text."""
    payload = config_text.encode("utf-8")
    return hashlib.sha1(b"blob %d\0" % len(payload) + payload).hexdigest()


def _render(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


@dataclass(frozen=True)
class Dataset:
    """Tabular result: a value hypercube over named axes plus metadata.

    ``values`` has shape (*axis lengths, len(value_names)). Metadata always
    includes the tool version and, when built from a run configuration, the
    full canonical config and its content hash. A creation timestamp is
    recorded only when ``SOURCE_DATE_EPOCH`` is set, keeping outputs
    byte-identical across repeated runs.
    """

    meta: dict
    axes: tuple[AxisDef, ...]
    value_names: tuple[str, ...]
    values: np.ndarray
    config_text: str = ""

    def __post_init__(self) -> None:
        expected = tuple(ax.values.size for ax in self.axes) + (len(self.value_names),)
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape} != {expected}")

    def header(self) -> dict[str, str]:
        out = {"version": TOOL_VERSION}
        if self.config_text:
            out["config_hash"] = config_hash(self.config_text)
        epoch = os.environ.get("SOURCE_DATE_EPOCH")
        if epoch:
            out["created_epoch"] = epoch
        for key, value in self.meta.items():
            out[f"meta.{key}"] = _render(value)
        for lineno, line in enumerate(self.config_text.splitlines()):
            out[f"config.{lineno:03d}"] = line
        return out


def emit_dataset(data: Dataset, fmt: str = "csv") -> bytes:
    """Serialize to bytes; byte-identical for identical inputs."""
    if fmt == "csv":
        return _emit_csv(data)
    if fmt == "json":
        return _emit_json(data)
    raise ValueError(f"unknown dataset format {fmt!r}")


def _emit_csv(data: Dataset) -> bytes:
    lines = [f"# {key}={value}" for key, value in sorted(data.header().items())]
    columns = [f"{ax.name}_{ax.units}".replace("/", "_per_") for ax in data.axes]
    columns += list(data.value_names)
    lines.append(",".join(columns))
    grids = np.meshgrid(*[ax.values for ax in data.axes], indexing="ij") if data.axes else []
    flat_axes = [g.reshape(-1) for g in grids]
    flat_values = data.values.reshape(-1, len(data.value_names))
    for i in range(flat_values.shape[0]):
        cells = [_render(col[i]) for col in flat_axes]
        cells += [_render(v) for v in flat_values[i]]
        lines.append(",".join(cells))
    return ("\n".join(lines) + "\n").encode("utf-8")


def _emit_json(data: Dataset) -> bytes:
    doc = {
        "meta": {k: v for k, v in sorted(data.header().items())},
        "axes": [
            {"name": ax.name, "units": ax.units, "values": [float(v) for v in ax.values]}
            for ax in data.axes
        ],
        "value_names": list(data.value_names),
        "values": data.values.tolist(),
    }
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def write_dataset(data: Dataset, path: str, fmt: str = "csv") -> None:
    """Atomic write: serialize, write to a temp file, rename into place."""
    payload = emit_dataset(data, fmt)
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp_path = tempfile.mkstemp(prefix=".ccdsim-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp_path, path)
    except BaseException:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise
