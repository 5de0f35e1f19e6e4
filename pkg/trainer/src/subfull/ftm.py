"""Feature-matrix file I/O (".ftm").

One UTF-8 JSON header line — ``{"dims":[K,P],"dtype":"f32","byte_order":
"little","layout":"frequency-major"}`` plus an optional ``"kind"`` tag —
followed by K*P raw little-endian float32 values with band k's P frames
contiguous. This is the interchange contract with the waveform toolkit,
so both sides validate strictly instead of guessing at malformed files.
"""

import json

import numpy as np

_HEADER_KEYS = {"dims", "dtype", "byte_order", "layout", "kind"}


def write_ftm(path: str, values: np.ndarray, kind: str = None) -> None:
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError(f"feature matrix must be 2-D (bands x frames), got {values.ndim}-D")
    if values.size == 0:
        raise ValueError("feature matrix must be non-empty")
    if not np.all(np.isfinite(values)):
        raise ValueError("feature matrix must be finite")
    header = {
        "dims": [int(values.shape[0]), int(values.shape[1])],
        "dtype": "f32",
        "byte_order": "little",
        "layout": "frequency-major",
    }
    if kind is not None:
        header["kind"] = str(kind)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())


def read_ftm(path: str):
    """Returns (float32 bands-by-frames matrix, header dict)."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: bad header: {exc}") from exc
    if not isinstance(header, dict):
        raise ValueError(f"{path}: header must be a JSON object")
    unknown = set(header) - _HEADER_KEYS
    if unknown:
        raise ValueError(f"{path}: unknown header keys {sorted(unknown)}")
    for key, expected in (
        ("dtype", "f32"),
        ("byte_order", "little"),
        ("layout", "frequency-major"),
    ):
        if header.get(key) != expected:
            raise ValueError(f"{path}: header {key}={header.get(key)!r}, expected {expected!r}")
    dims = header.get("dims")
    if not (
        isinstance(dims, list)
        and len(dims) == 2
        and all(isinstance(d, int) and d > 0 for d in dims)
    ):
        raise ValueError(f"{path}: bad dims {dims!r}")
    n_bands, n_frames = dims
    expected_size = 4 * n_bands * n_frames
    if len(payload) != expected_size:
        raise ValueError(f"{path}: payload is {len(payload)} bytes, expected {expected_size}")
    values = np.frombuffer(payload, dtype="<f4").reshape(n_bands, n_frames)
    return values.copy(), header
