"""
On-disk formats for kernels, observation matrices, vectors and allocations.

Complex matrices are written either as `.npy` or as CSV where every cell takes
two columns (real, imaginary) and metadata lives in leading `# key=value`
comment lines. Writes go through a FileLock next to the target so that
concurrent runs never interleave a file.
"""

__all__ = [
    "read_header",
    "save_matrix",
    "load_matrix",
    "save_vector",
    "load_vector",
    "load_spectrum",
    "save_kernel",
    "load_kernel",
    "save_observation",
    "load_observation",
    "save_allocation",
    "load_allocation",
    "save_ensemble",
    "load_ensemble",
    "save_table",
]

import io
import csv
import os
import numpy as np

from typing   import Dict, List, Optional, Sequence, Union
from filelock import FileLock
from loguru   import logger

from icefill.models import Kernel, ObservationMatrix, Mode, PilotAllocation, PowerAllocation
from icefill.exceptions import InvalidInputError


FLOAT_FORMAT = "%.17g"


def _is_npy(path : str) -> bool:
    return path.endswith(".npy")


def _ensure_parent(path : str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _write_text(path : str, text : str):
    _ensure_parent(path)
    with FileLock(f"{path}.lock"):
        with open(path, "w") as f:
            f.write(text)


def read_header(path : str) -> Dict[str, str]:
    """Collect the `# key=value` (or `# key: value`) comment lines of a text file."""
    meta = {}
    if _is_npy(path):
        return meta
    with open(path, "r") as f:
        for line in f:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            for sep in ("=", ":"):
                if sep in body:
                    key, value = body.split(sep, 1)
                    meta[key.strip()] = value.strip()
                    break
    return meta


def _header(meta : Optional[Dict]) -> str:
    return "".join(f"# {key}={value}\n" for key, value in (meta or {}).items())


def _load_table(path : str) -> np.ndarray:
    if not os.path.exists(path):
        raise InvalidInputError("load", f"file {path} does not exist")
    try:
        return np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except ValueError as e:
        raise InvalidInputError("load", f"file {path} is malformed ({e})")


def save_matrix(path : str, matrix : np.ndarray, meta : Optional[Dict]=None):
    """Write a complex matrix as .npy or as an (re,im)-pair CSV with header metadata."""
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    if _is_npy(path):
        _ensure_parent(path)
        with FileLock(f"{path}.lock"):
            np.save(path, matrix)
        return
    pairs = np.empty((matrix.shape[0], 2 * matrix.shape[1]))
    pairs[:, 0::2] = matrix.real
    pairs[:, 1::2] = matrix.imag
    buffer = io.StringIO()
    buffer.write(_header(meta))
    np.savetxt(buffer, pairs, delimiter=",", fmt=FLOAT_FORMAT)
    _write_text(path, buffer.getvalue())
    logger.debug(f"wrote {matrix.shape[0]}x{matrix.shape[1]} matrix to {path}")


def load_matrix(path : str) -> np.ndarray:
    if _is_npy(path):
        if not os.path.exists(path):
            raise InvalidInputError("load_matrix", f"file {path} does not exist")
        try:
            matrix = np.load(path)
            if matrix.ndim == 0:
                raise InvalidInputError("load_matrix", f"file {path} holds a scalar")
            return matrix.reshape(matrix.shape[0], -1).astype(complex)
        except (ValueError, TypeError, OSError) as e:
            raise InvalidInputError("load_matrix", f"file {path} is malformed ({e})")
    pairs = _load_table(path)
    if pairs.shape[1] % 2:
        raise InvalidInputError("load_matrix", f"file {path} does not hold (re,im) pairs")
    return pairs[:, 0::2] + 1j * pairs[:, 1::2]


def save_vector(path : str, vector : np.ndarray, meta : Optional[Dict]=None):
    save_matrix(path, np.asarray(vector).reshape(-1, 1), meta)


def load_vector(path : str) -> np.ndarray:
    return load_matrix(path).reshape(-1)


def load_spectrum(path : str) -> np.ndarray:
    """
    Read real eigenvalues, one per line or comma separated, and return them
    sorted descending.

    Raises:
    ------
    InvalidInputError
        If the file is empty, holds non-finite or negative values.
    """
    values = _load_table(path).reshape(-1)
    if values.size == 0:
        raise InvalidInputError("load_spectrum", f"file {path} holds no eigenvalue")
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise InvalidInputError("load_spectrum", f"file {path} holds non-finite or negative eigenvalues")
    return np.sort(values)[::-1]


def save_kernel(path : str, kernel : Kernel):
    save_matrix(path, kernel.matrix, {"label" : kernel.label, "size" : kernel.size})


def load_kernel(path : str, label : Optional[str]=None) -> Kernel:
    matrix = load_matrix(path)
    label = label or read_header(path).get("label", "perfect")
    return Kernel(matrix, label=label)


def save_observation(path : str, W : ObservationMatrix):
    save_matrix(path, W.matrix, {"mode" : W.mode.value, "pilots" : W.num_pilots})


def _infer_mode(matrix : np.ndarray) -> Mode:
    M, Q = matrix.shape
    if np.all(np.abs(np.abs(matrix) - 1 / np.sqrt(M)) <= 1e-8):
        return Mode.UNIT_MODULUS
    if np.all(np.abs(np.linalg.norm(matrix, axis=0) - 1) <= 1e-8):
        return Mode.UNIT_NORM
    return Mode.SCALED_EIGEN


def load_observation(path : str) -> ObservationMatrix:
    """Files without a `mode` header (e.g. .npy) get the tightest mode their entries satisfy."""
    matrix = load_matrix(path)
    mode = read_header(path).get("mode")
    if mode is None:
        mode = _infer_mode(matrix)
    elif mode not in [m.value for m in Mode]:
        raise InvalidInputError("load_observation", f"unknown mode '{mode}' in {path}")
    return ObservationMatrix(matrix, Mode(mode), tol=1e-8)


def save_allocation(path : str, allocation : Union[PilotAllocation, PowerAllocation]):
    """
    Ice-filling: columns k, n_k, eigenvalue, ice_level (k 1-based) and the
    selection order in an `# order:` line. Water-filling: columns k, p_k,
    eigenvalue and the water level in the header.
    """
    buffer = io.StringIO()
    k = np.arange(1, allocation.eigenvalues.size + 1)
    if isinstance(allocation, PilotAllocation):
        buffer.write("# kind=ice-filling\n")
        buffer.write(f"# sigma2={FLOAT_FORMAT % allocation.sigma2}\n")
        buffer.write(f"# order: {','.join(str(i + 1) for i in allocation.order)}\n")
        buffer.write("# k,n_k,eigenvalue,ice_level\n")
        for row in zip(k, allocation.reuse, allocation.eigenvalues, allocation.ice_levels):
            buffer.write(f"{row[0]},{row[1]},{FLOAT_FORMAT % row[2]},{FLOAT_FORMAT % row[3]}\n")
    else:
        buffer.write("# kind=water-filling\n")
        buffer.write(f"# sigma2={FLOAT_FORMAT % allocation.sigma2}\n")
        buffer.write(f"# budget={FLOAT_FORMAT % allocation.budget}\n")
        buffer.write(f"# water_level={FLOAT_FORMAT % allocation.water_level}\n")
        buffer.write("# k,p_k,eigenvalue\n")
        for row in zip(k, allocation.powers, allocation.eigenvalues):
            buffer.write(f"{row[0]},{FLOAT_FORMAT % row[1]},{FLOAT_FORMAT % row[2]}\n")
    _write_text(path, buffer.getvalue())


def load_allocation(path : str) -> Union[PilotAllocation, PowerAllocation]:
    meta = read_header(path)
    table = _load_table(path)
    sigma2 = float(meta.get("sigma2", "nan"))
    if meta.get("kind") == "water-filling":
        return PowerAllocation(table[:, 1], float(meta["water_level"]), table[:, 2], sigma2, float(meta["budget"]))
    if "order" not in meta:
        raise InvalidInputError("load_allocation", f"file {path} has no '# order:' line")
    order = np.array([int(i) - 1 for i in meta["order"].split(",") if i.strip()], dtype=int)
    return PilotAllocation(table[:, 1].astype(int), order, table[:, 2], sigma2)


def save_ensemble(path : str, samples : np.ndarray, meta : Optional[Dict]=None):
    """Channel draws, one per row (N x M)."""
    save_matrix(path, samples, meta)


def load_ensemble(path : str) -> np.ndarray:
    return load_matrix(path)


def save_table(path : str, rows : List[Dict], columns : Sequence[str], comment : Optional[str]=None):
    """Plain CSV of dict rows, floats written with full precision."""
    buffer = io.StringIO()
    if comment:
        buffer.write(f"# {comment}\n")
    writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({key : repr(value) if isinstance(value, float) else value for key, value in row.items()})
    _write_text(path, buffer.getvalue())
