"""Self-validating binary checkpoints (.dcls).

Layout: magic ``DCLS``, format version (u16 LE), manifest length (u32 LE),
a JSON manifest (layer specs, section table, run metadata), the raw
little-endian buffers in manifest order, and a trailing SHA-256 of every
preceding byte. See docs/checkpoint_format.md for the field-level layout.
"""

import hashlib
import json
import struct

import numpy as np

from .nn.network import Network

MAGIC = b"DCLS"
FORMAT_VERSION = 1

_DTYPE_CODES = {
    "float32": "<f4",
    "float64": "<f8",
    "int64": "<i8",
}
_CODE_DTYPES = {v: k for k, v in _DTYPE_CODES.items()}


class CheckpointError(Exception):
    pass


def _le_code(arr):
    name = arr.dtype.name
    if name not in _DTYPE_CODES:
        raise CheckpointError(f"unsupported buffer dtype {name}")
    return _DTYPE_CODES[name]


def save_checkpoint(path, net, epoch=0, prev_assignments=None, seed=0):
    """Write network parameters, optimizer slots, and run position to ``path``."""
    feature_specs, classifier_specs = net.layer_specs()
    buffers = []
    sections = []

    def add(name, arr):
        code = _le_code(arr)
        sections.append({"name": name, "shape": list(arr.shape), "dtype": code})
        buffers.append(np.ascontiguousarray(arr).astype(code).tobytes())

    for p, arr in net.named_parameters():
        add(p, arr)
    for p, arr in net.named_state():
        add(p, arr)
    for p, _ in net.named_parameters():
        add(f"momentum.{p}", net.momentum[p])
    if prev_assignments is not None:
        add("prev_assignments", np.asarray(prev_assignments, dtype=np.int64))

    manifest = {
        "architecture": net.architecture,
        "in_channels": net.in_channels,
        "num_classes": net.num_classes,
        "dtype": net.dtype.name,
        "feature_layers": feature_specs,
        "classifier_layers": classifier_specs,
        "epoch": int(epoch),
        "seed": int(seed),
        "sections": sections,
    }
    manifest_bytes = json.dumps(manifest, sort_keys=True).encode("utf-8")

    body = bytearray()
    body += MAGIC
    body += struct.pack("<H", FORMAT_VERSION)
    body += struct.pack("<I", len(manifest_bytes))
    body += manifest_bytes
    for buf in buffers:
        body += buf
    digest = hashlib.sha256(bytes(body)).digest()
    with open(path, "wb") as fh:
        fh.write(bytes(body))
        fh.write(digest)


def _resolve(net, path):
    group, idx, name = path.split(".")
    layers = net.feature_layers if group == "features" else net.classifier_layers
    return layers[int(idx)], name


def load_checkpoint(path):
    """Read a .dcls file back; returns (net, epoch, prev_assignments, seed).

    Any corruption is caught by the SHA-256 trailer before state is built,
    so a failed load never returns a partially filled network.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4 + 2 + 4 + 32:
        raise CheckpointError(f"{path}: truncated checkpoint file")
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic bytes (not a DCLS checkpoint)")
    version = struct.unpack("<H", raw[4:6])[0]
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: file format version {version}, this build supports version {FORMAT_VERSION}"
        )
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError(f"{path}: checksum mismatch, file is corrupted")

    manifest_len = struct.unpack("<I", raw[6:10])[0]
    manifest_end = 10 + manifest_len
    if manifest_end > len(body):
        raise CheckpointError(f"{path}: truncated manifest")
    manifest = json.loads(raw[10:manifest_end].decode("utf-8"))

    net = Network.from_specs(
        manifest["feature_layers"],
        manifest["classifier_layers"],
        manifest["architecture"],
        manifest["in_channels"],
        manifest["num_classes"],
        np.dtype(manifest["dtype"]),
    )

    offset = manifest_end
    prev_assignments = None
    for section in manifest["sections"]:
        code = section["dtype"]
        if code not in _CODE_DTYPES:
            raise CheckpointError(f"{path}: unknown section dtype {code}")
        shape = tuple(section["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * np.dtype(code).itemsize
        if offset + nbytes > len(body):
            raise CheckpointError(f"{path}: truncated section '{section['name']}'")
        arr = np.frombuffer(raw, dtype=code, count=int(np.prod(shape, dtype=np.int64)), offset=offset)
        arr = arr.reshape(shape).astype(_CODE_DTYPES[code])
        offset += nbytes
        name = section["name"]
        if name == "prev_assignments":
            prev_assignments = arr
        elif name.startswith("momentum."):
            net.momentum[name[len("momentum.") :]] = arr
        else:
            layer, pname = _resolve(net, name)
            if pname in layer.params:
                layer.params[pname] = arr
            else:
                layer.state[pname] = arr
    if offset != len(body):
        raise CheckpointError(f"{path}: {len(body) - offset} unexpected trailing bytes")
    return net, manifest["epoch"], prev_assignments, manifest["seed"]
