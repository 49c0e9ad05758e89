"""File formats: fixed-precision CSV, JSON sidecars and a binary block dump."""
from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "FLOAT_FMT",
    "write_csv",
    "read_csv",
    "write_json",
    "write_block",
    "read_block",
    "envelope_table",
    "coherence_table",
    "sideband_table",
    "folded_table",
    "series_table",
]

# 17 significant digits round-trip a double
FLOAT_FMT = "%.16e"
BLOCK_MAGIC = b"QCBLOCK1"


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return FLOAT_FMT % x


def write_csv(path: Path, columns: Mapping[str, Sequence]) -> Path:
    """Write equal-length columns with a header row, in the mapping's order."""
    names = list(columns)
    arrays = [np.asarray(columns[n]).ravel() for n in names]
    n = {a.size for a in arrays}
    if len(n) != 1:
        raise ValueError(f"column lengths differ: {dict(zip(names, (a.size for a in arrays)))}")
    lines = [",".join(names)]
    for row in zip(*arrays):
        lines.append(",".join(_fmt(v) for v in row))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        names = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {n: data[:, i] for i, n in enumerate(names)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path: Path, payload: Mapping) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def write_block(path: Path, array: np.ndarray, **meta) -> Path:
    """Little-endian dump: magic, uint32 header length, JSON header, raw data.

    The header records dtype, shape and any extra metadata, so the file can
    be read without this package.
    """
    arr = np.ascontiguousarray(array, dtype=np.dtype("<c16"))
    header = json.dumps(
        {"dtype": arr.dtype.str, "shape": list(arr.shape), "order": "C", **_jsonable(meta)},
        sort_keys=True,
    ).encode()
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(BLOCK_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(arr.tobytes())
    return path


def read_block(path: Path) -> tuple[np.ndarray, dict]:
    with open(path, "rb") as fh:
        if fh.read(len(BLOCK_MAGIC)) != BLOCK_MAGIC:
            raise ValueError(f"{path}: not a block file")
        (n,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(n))
        data = np.frombuffer(fh.read(), dtype=np.dtype(header["dtype"]))
    return data.reshape(header["shape"]), header


# -- table layouts ------------------------------------------------------------

def envelope_table(grid) -> dict:
    return {
        "tau_c": grid.tau_c, "re_A": grid.A.real, "im_A": grid.A.imag,
        "abs_r2": np.abs(grid.r) ** 2, "abs_t2": np.abs(grid.t) ** 2,
        "g1_rr": grid.g1_rr, "g1_ll": grid.g1_ll,
    }


def coherence_table(cmap) -> dict:
    """Long format, tau_c outer and tau_d inner."""
    TC, TD = np.meshgrid(cmap.tau_c, cmap.tau_d, indexing="ij")
    return {
        "tau_c": TC, "tau_d": TD, "re_B": cmap.B.real, "im_B": cmap.B.imag,
        "g2_ll": cmap.g2_ll, "g2_rr": cmap.g2_rr, "node_flag": cmap.node_flag,
    }


def sideband_table(sb) -> dict:
    return {"m": sb.orders, "re_t": sb.t.real, "im_t": sb.t.imag,
            "re_r": sb.r.real, "im_r": sb.r.imag}


def folded_table(fe) -> dict:
    """Envelope layout plus the standard error and bin counts of the fold."""
    A = fe.A
    return {
        "tau_c": fe.tau_c, "re_A": A.real, "im_A": A.imag,
        "abs_r2": np.abs(A) ** 2, "abs_t2": np.abs(1 + A) ** 2,
        "g1_rr": np.abs(1 + A) ** 2, "g1_ll": np.abs(A) ** 2,
        "stderr_A": fe.stderr, "count": fe.counts,
    }


def series_table(run) -> dict:
    m = run.window_mask()
    order = np.argsort(run.emission_time[m])
    r, t = run.reflected[m][order], run.transmitted[m][order]
    return {"t_emit": run.emission_time[m][order], "re_r": r.real, "im_r": r.imag,
            "re_t": t.real, "im_t": t.imag}
