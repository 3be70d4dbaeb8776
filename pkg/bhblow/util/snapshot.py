import struct

import numpy as np

from bhblow import ParameterError

MAGIC = b"BHF1"
HEADER = struct.Struct("<4sQdd")

__all__ = ["pack_snapshot", "unpack_snapshot", "write_snapshot", "read_snapshot"]


def pack_snapshot(samples, half_width, t):
    """
    Return the binary representation of a sampled field, that is the header
    {magic, n, half_width, t} followed by n little-endian doubles.

    >>> len(pack_snapshot([0.0, 1.0], 1.0, 0.5))
    44
    """
    data = np.ascontiguousarray(samples, dtype="<f8")
    header = HEADER.pack(MAGIC, data.size, float(half_width), float(t))
    return header + data.tobytes()


def unpack_snapshot(blob):
    """
    Parse a snapshot and return a tuple consisting of the samples, the half
    width of the periodic box and the time stamp.
    """
    if len(blob) < HEADER.size:
        raise ParameterError("Snapshot is truncated", len(blob))
    magic, n, half_width, t = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ParameterError("Not a BHF1 snapshot", magic)
    expected = HEADER.size + 8 * n
    if len(blob) != expected:
        raise ParameterError(
            f"Snapshot size mismatch, expected {expected} bytes", len(blob)
        )
    samples = np.frombuffer(blob, dtype="<f8", count=n, offset=HEADER.size)
    return samples.astype(np.float64), half_width, t


def write_snapshot(path, samples, half_width, t):
    with open(path, "wb") as fp:
        fp.write(pack_snapshot(samples, half_width, t))


def read_snapshot(path):
    with open(path, "rb") as fp:
        return unpack_snapshot(fp.read())
