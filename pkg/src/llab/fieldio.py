"""``.fld`` container: text header followed by a little-endian float64 payload.

Layout::

    LLABFLD <version>
    kind <potential|landscape>
    dim <d>
    R0 <R0>
    n <n>
    count <number of float64 values>
    provenance <single-line JSON>
    sha256 <hex digest of payload>
    END
    <count * 8 bytes, row-major>

``potential`` files append the R0**d amplitudes after the field values when the
field was assembled from amplitudes (``omegas <count>`` header line).
"""
import hashlib
import json

import numpy as np

from .errors import ChecksumMismatch, FormatError
from .grid import build_grid

FORMAT_VERSION = 1
MAGIC = b"LLABFLD"


def _encode(arr):
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def write_fld(path, grid, values, kind, provenance=None, omegas=None):
    payload = _encode(values)
    extra = b""
    if omegas is not None:
        extra = _encode(omegas)
    digest = hashlib.sha256(payload + extra).hexdigest()
    lines = [
        f"{MAGIC.decode()} {FORMAT_VERSION}",
        f"kind {kind}",
        f"dim {grid.dim}",
        f"R0 {grid.side_length_R0}",
        f"n {grid.points_per_unit_n}",
        f"count {len(payload) // 8}",
    ]
    if omegas is not None:
        lines.append(f"omegas {len(extra) // 8}")
    lines += [
        "provenance " + json.dumps(provenance or {}, sort_keys=True, separators=(",", ":")),
        f"sha256 {digest}",
        "END",
    ]
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode())
        fh.write(payload)
        fh.write(extra)
    return digest


def read_fld(path):
    """Return ``(grid, kind, values, omegas, provenance, sha256)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if not raw.startswith(MAGIC + b" "):
        raise FormatError(f"{path}: not an llab field file")
    end = raw.find(b"\nEND\n")
    if end < 0:
        raise FormatError(f"{path}: truncated header")
    header = {}
    for line in raw[:end].decode().split("\n"):
        key, _, val = line.partition(" ")
        header[key] = val
    try:
        version = int(header[MAGIC.decode()])
        grid = build_grid(int(header["dim"]), int(header["R0"]), int(header["n"]))
        count = int(header["count"])
        n_om = int(header.get("omegas", 0))
        provenance = json.loads(header["provenance"])
        digest = header["sha256"]
        kind = header["kind"]
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: bad header ({exc})") from None
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    body = raw[end + len(b"\nEND\n"):]
    if len(body) != 8 * (count + n_om):
        raise FormatError(f"{path}: payload has {len(body)} bytes, expected {8 * (count + n_om)}")
    if hashlib.sha256(body).hexdigest() != digest:
        raise ChecksumMismatch(f"{path}: payload checksum mismatch")
    if count != grid.total_points:
        raise FormatError(f"{path}: {count} values for a grid of {grid.total_points} points")
    values = np.frombuffer(body[:8 * count], dtype="<f8").astype(np.float64).reshape(grid.shape)
    omegas = None
    if n_om:
        omegas = np.frombuffer(body[8 * count:], dtype="<f8").astype(np.float64)
    return grid, kind, values, omegas, provenance, digest


def save_field(path, field):
    """Persist a PotentialField; returns the payload checksum."""
    return write_fld(path, field.grid, field.values, "potential", field.provenance, field.omegas)


def load_field(path):
    from .potential import PotentialField

    grid, kind, values, omegas, prov, _ = read_fld(path)
    if kind != "potential":
        raise FormatError(f"{path}: expected a potential field, found {kind!r}")
    return PotentialField(grid, values, omegas=omegas, provenance=prov)


def save_landscape(path, land, potential_checksum=None):
    prov = dict(land.provenance)
    prov.update(residual_norm=land.residual_norm, iterations=land.iterations)
    if potential_checksum is not None:
        prov["potential_sha256"] = potential_checksum
    return write_fld(path, land.grid, land.u, "landscape", prov)


def load_landscape(path):
    from .landscape import LandscapeField

    grid, kind, values, _, prov, _ = read_fld(path)
    if kind != "landscape":
        raise FormatError(f"{path}: expected a landscape field, found {kind!r}")
    return LandscapeField(grid, values, float(prov.get("residual_norm", np.nan)),
                          int(prov.get("iterations", -1)), provenance=prov)
