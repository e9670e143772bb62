"""Bit-exact binary snapshots.

Layout (little-endian)::

    b"NSFV"  u32 version  u8 dim  u32 n (x dim)  f64 time  f64 eps
    u8 field count  u8 tag (x count)  f64 payload (count x n**dim, tag order)

Tags: 0 rho, 1 m_x, 2 m_y, 3 g, 4 theta.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError

MAGIC = b"NSFV"
VERSION = 1
TAGS = {0: "rho", 1: "m_x", 2: "m_y", 3: "g", 4: "theta"}
TAG_OF = {v: k for k, v in TAGS.items()}


@dataclass(frozen=True)
class Snapshot:
    dim: int
    n: int
    time: float
    eps: float
    fields: dict  # name -> array of shape (n,) * dim

    @property
    def tags(self):
        return sorted(TAG_OF[k] for k in self.fields)


def snapshot_from_state(time, eps, rho, m, g=None, theta=None):
    rho = np.asarray(rho, dtype=float)
    dim = rho.ndim
    f = {"rho": rho, "m_x": np.asarray(m[0], dtype=float)}
    if dim == 2:
        f["m_y"] = np.asarray(m[1], dtype=float)
    if g is not None:
        f["g"] = np.asarray(g, dtype=float)
    if theta is not None:
        f["theta"] = np.asarray(theta, dtype=float)
    return Snapshot(dim, rho.shape[0], float(time), float(eps), f)


def encode(snap: Snapshot) -> bytes:
    if snap.dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    unknown = set(snap.fields) - set(TAG_OF)
    if unknown:
        raise ValueError(f"unknown field names {sorted(unknown)}")
    tags = snap.tags
    head = MAGIC + struct.pack("<IB", VERSION, snap.dim)
    head += struct.pack("<" + "I" * snap.dim, *([snap.n] * snap.dim))
    head += struct.pack("<ddB", snap.time, snap.eps, len(tags))
    head += bytes(tags)
    shape = (snap.n,) * snap.dim
    body = b""
    for t in tags:
        arr = np.asarray(snap.fields[TAGS[t]], dtype="<f8")
        if arr.shape != shape:
            raise ValueError(f"field {TAGS[t]} has shape {arr.shape}, expected {shape}")
        body += np.ascontiguousarray(arr).tobytes(order="C")
    return head + body


def decode(data: bytes) -> Snapshot:
    pos = 0

    def take(k):
        nonlocal pos
        if pos + k > len(data):
            raise FormatError(f"truncated snapshot: need {pos + k} bytes, have {len(data)}")
        chunk = data[pos:pos + k]
        pos += k
        return chunk

    if take(4) != MAGIC:
        raise FormatError("bad magic: not a snapshot file")
    version, dim = struct.unpack("<IB", take(5))
    if version != VERSION:
        raise FormatError(f"unsupported snapshot version: expected {VERSION}, found {version}")
    if dim not in (1, 2):
        raise FormatError(f"invalid dimension {dim}")
    ns = struct.unpack("<" + "I" * dim, take(4 * dim))
    if len(set(ns)) != 1:
        raise FormatError("non-square grids are not supported")
    time, eps, count = struct.unpack("<ddB", take(17))
    tags = list(take(count))
    if any(t not in TAGS for t in tags) or len(set(tags)) != len(tags):
        raise FormatError(f"invalid field tags {tags}")
    shape = (ns[0],) * dim
    size = int(np.prod(shape))
    fields = {}
    for t in tags:
        arr = np.frombuffer(take(8 * size), dtype="<f8").reshape(shape)
        fields[TAGS[t]] = arr.astype(float)
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after payload")
    return Snapshot(dim, ns[0], time, eps, fields)


def write_snapshot(path, snap: Snapshot):
    with open(path, "wb") as fh:
        fh.write(encode(snap))


def read_snapshot(path) -> Snapshot:
    with open(path, "rb") as fh:
        return decode(fh.read())
