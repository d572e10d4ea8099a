"""Binary checkpoint format.

Layout (all integers little-endian)::

    b"RCNAV1\\0"                 7-byte magic
    u8  version                  currently 1
    u8  network count
    per network:
        u8  role tag             see ROLES
        u8  output activation    0 linear, 1 tanh
        u8  number of dims
        u32 dims[...]
    then, network by network and layer by layer:
        f32 W[fan_in][fan_out]   row-major
        f32 b[fan_out]

Float32 parameters round-trip bit-exactly. Optimizer state is not stored.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .nn import ACTIVATIONS, Mlp

MAGIC = b"RCNAV1\0"
VERSION = 1
ROLES = ("actor", "critic1", "critic2", "actor_target", "critic1_target", "critic2_target")


class CheckpointError(ValueError):
    pass


def dumps(nets: dict[str, Mlp]) -> bytes:
    out = bytearray(MAGIC)
    out += struct.pack("<BB", VERSION, len(nets))
    order = sorted(nets, key=ROLES.index)
    for role in order:
        net = nets[role]
        out += struct.pack("<BBB", ROLES.index(role), ACTIVATIONS.index(net.output), len(net.dims))
        out += struct.pack(f"<{len(net.dims)}I", *net.dims)
    for role in order:
        for p in nets[role].params:
            out += np.ascontiguousarray(p, dtype="<f4").tobytes()
    return bytes(out)


def loads(data: bytes) -> dict[str, Mlp]:
    if not data.startswith(MAGIC):
        raise CheckpointError("not a checkpoint (bad magic)")
    pos = len(MAGIC)
    try:
        version, count = struct.unpack_from("<BB", data, pos)
        pos += 2
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        headers = []
        for _ in range(count):
            role, act, ndims = struct.unpack_from("<BBB", data, pos)
            pos += 3
            dims = list(struct.unpack_from(f"<{ndims}I", data, pos))
            pos += 4 * ndims
            if role >= len(ROLES) or act >= len(ACTIVATIONS):
                raise CheckpointError(f"unknown role/activation tag ({role}, {act})")
            headers.append((ROLES[role], ACTIVATIONS[act], dims))
        nets = {}
        for role, act, dims in headers:
            net = Mlp(dims, act)
            for p in net.params:
                n = p.size
                block = np.frombuffer(data, dtype="<f4", count=n, offset=pos)
                pos += 4 * n
                p[...] = block.reshape(p.shape)
            nets[role] = net
    except struct.error as e:
        raise CheckpointError(f"truncated checkpoint: {e}") from None
    except ValueError as e:
        if isinstance(e, CheckpointError):
            raise
        raise CheckpointError(f"truncated checkpoint: {e}") from None
    if pos != len(data):
        raise CheckpointError(f"{len(data) - pos} trailing bytes after parameter blocks")
    return nets


def save(path, nets: dict[str, Mlp]) -> None:
    Path(path).write_bytes(dumps(nets))


def load(path) -> dict[str, Mlp]:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"checkpoint not found: {p}")
    return loads(p.read_bytes())
