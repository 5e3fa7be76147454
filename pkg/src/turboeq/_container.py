"""Minimal self-describing binary container: a JSON text manifest followed by raw
little-endian array sections.

Layout::

    TURBOEQ-CONTAINER 1\\n
    <manifest byte length>\\n
    <manifest JSON, utf-8>
    <section 0 bytes><section 1 bytes>...

The manifest carries ``sections``: name, dtype string, shape, offset and byte count
relative to the start of the payload. Nothing time-dependent is written, so equal
inputs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

MAGIC = b"TURBOEQ-CONTAINER 1\n"


def write(path, manifest: dict, sections: list[tuple[str, np.ndarray]]) -> None:
    entries = []
    blobs = []
    offset = 0
    for name, arr in sections:
        arr = np.ascontiguousarray(arr)
        if arr.dtype.byteorder == ">" or (arr.dtype.byteorder == "=" and not np.little_endian):
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        dt = arr.dtype.str
        data = arr.tobytes()
        entries.append({"name": name, "dtype": dt, "shape": list(arr.shape), "offset": offset, "nbytes": len(data)})
        blobs.append(data)
        offset += len(data)
    header = json.dumps({**manifest, "sections": entries}, sort_keys=True, indent=1).encode()
    with open(Path(path), "wb") as fh:
        fh.write(MAGIC)
        fh.write(f"{len(header)}\n".encode())
        fh.write(header)
        for b in blobs:
            fh.write(b)


def read_manifest(path) -> tuple[dict, int]:
    with open(Path(path), "rb") as fh:
        if fh.readline() != MAGIC:
            raise ValueError(f"{path}: not a turboeq container")
        try:
            length = int(fh.readline())
        except ValueError as exc:
            raise ValueError(f"{path}: corrupt container header") from exc
        manifest = json.loads(fh.read(length))
        return manifest, fh.tell()


def read(path) -> tuple[dict, dict[str, np.ndarray]]:
    manifest, start = read_manifest(path)
    raw = Path(path).read_bytes()[start:]
    arrays = {}
    for sec in manifest["sections"]:
        chunk = raw[sec["offset"] : sec["offset"] + sec["nbytes"]]
        if len(chunk) != sec["nbytes"]:
            raise ValueError(f"{path}: section {sec['name']} is truncated")
        arrays[sec["name"]] = np.frombuffer(chunk, dtype=np.dtype(sec["dtype"])).reshape(sec["shape"]).copy()
    return manifest, arrays


def section_bytes(path) -> dict[str, bytes]:
    """Raw payload bytes per section, for reproducibility checks."""
    manifest, start = read_manifest(path)
    raw = Path(path).read_bytes()[start:]
    return {s["name"]: raw[s["offset"] : s["offset"] + s["nbytes"]] for s in manifest["sections"]}
