"""Deterministic on-disk artifacts: tensor container, atomic writes, hashes.

The tensor container is a versioned text format (one header line, then per
tensor: "tensor <name> <dim0> <dim1> ..." followed by one line of %.17g
values). Byte-identical for identical inputs, unlike zip-based formats.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .optim import ParameterStore

FORMAT_HEADER = "tensorstore v1"


def atomic_write_text(path, content):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(content)
    os.replace(tmp, path)


def atomic_write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def save_store(store, path):
    lines = [FORMAT_HEADER]
    for name in store.names():
        value = store.get(name)
        lines.append("tensor %s %s" % (name, " ".join(str(s) for s in value.shape)))
        lines.append(" ".join("%.17g" % v for v in value.ravel()))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_store(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != FORMAT_HEADER:
        raise ValueError("unrecognized checkpoint format in %s" % path)
    store = ParameterStore()
    k = 1
    while k < len(lines):
        if not lines[k].strip():
            k += 1
            continue
        parts = lines[k].split()
        if parts[0] != "tensor":
            raise ValueError("bad tensor header %r" % lines[k])
        name = parts[1]
        shape = tuple(int(s) for s in parts[2:])
        values = np.array([float(x) for x in lines[k + 1].split()])
        store.register(name, values.reshape(shape))
        k += 2
    return store
