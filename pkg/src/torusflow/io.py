"""Snapshot records, deterministic CSV tables, and run manifests.

A field snapshot is a flat binary record: little-endian header
(dim: int32, rank: int32, n: int32, t: float64) followed by the complex64
coefficients in row-major order with component axes leading.  complex64 is
a storage format only; readers get complex128 fields that agree with the
source to single precision.

CSV bodies are deterministic byte-for-byte for a fixed platform: cells are
formatted by type (ints bare, floats via shortest round-trip repr, flags as
0/1) and rows end with a bare newline.
"""

from __future__ import annotations

import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, mikado
from .fields import Field

_HEADER = np.dtype([("dim", "<i4"), ("rank", "<i4"), ("n", "<i4"), ("t", "<f8")])


def write_field(dest, field: Field, t: float = 0.0) -> None:
    """Append one snapshot record to a path or a binary file object."""
    head = np.zeros((), dtype=_HEADER)
    head["dim"] = field.dim
    head["rank"] = field.rank
    head["n"] = field.n
    head["t"] = t
    payload = np.ascontiguousarray(field.coeffs.astype("<c8"))
    if hasattr(dest, "write"):
        dest.write(head.tobytes())
        dest.write(payload.tobytes())
    else:
        with open(dest, "ab") as fh:
            fh.write(head.tobytes())
            fh.write(payload.tobytes())


def read_fields(src) -> list[tuple[Field, float]]:
    """All snapshot records in a file, in write order."""
    if hasattr(src, "read"):
        buf = src.read()
    else:
        buf = Path(src).read_bytes()
    out = []
    pos = 0
    while pos < len(buf):
        head = np.frombuffer(buf, dtype=_HEADER, count=1, offset=pos)[0]
        dim, rank, n = int(head["dim"]), int(head["rank"]), int(head["n"])
        pos += _HEADER.itemsize
        shape = (dim,) * rank + (n,) * dim
        count = int(np.prod(shape))
        c = np.frombuffer(buf, dtype="<c8", count=count, offset=pos)
        pos += 8 * count
        out.append((Field(c.reshape(shape).astype(np.complex128), dim),
                    float(head["t"])))
    return out


def read_field(src) -> tuple[Field, float]:
    records = read_fields(src)
    if len(records) != 1:
        raise ValueError(f"expected a single snapshot record, found {len(records)}")
    return records[0]


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(dest, header, rows) -> None:
    """Header plus formatted rows; float cells use round-trip repr."""
    def emit(fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([_cell(x) for x in row])

    if hasattr(dest, "write"):
        emit(dest)
    else:
        with open(dest, "w", newline="") as fh:
            emit(fh)


def config_lines(config: dict) -> str:
    """Canonical key=value text: sorted keys, one per line."""
    return "".join(f"{k}={config[k]}\n" for k in sorted(config))


def config_hash(config: dict) -> str:
    return hashlib.sha256(config_lines(config).encode()).hexdigest()


def write_manifest(dest, config: dict, seed=None, extra: dict | None = None) -> dict:
    manifest = {
        "config": {k: str(v) for k, v in sorted(config.items())},
        "config_hash": config_hash(config),
        "seed": seed,
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "torusflow": __version__,
        },
    }
    if extra:
        manifest.update(extra)
    text = json.dumps(manifest, indent=2, sort_keys=True)
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)
    return manifest


def family_key(directions, mu: float, n: int, dim: int) -> str:
    """Cache key: dimension, direction set, concentration, resolution."""
    blob = json.dumps(
        {
            "d": dim,
            "dirs": [[int(x) for x in v] for v in directions],
            "mu": float(mu),
            "n": int(n),
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def cache_family(root, blocks: list[mikado.MikadoBlock]) -> Path:
    """Store a tube family under its key; returns the cache directory.

    Snapshots are single precision, so a reloaded family reproduces the
    original to float32 accuracy only; rebuild when full precision matters.
    """
    dirs = [b.direction for b in blocks]
    b0 = blocks[0]
    key = family_key(dirs, b0.mu, b0.n, b0.dim)
    out = Path(root) / key
    out.mkdir(parents=True, exist_ok=True)
    meta = {
        "directions": [[int(x) for x in b.direction] for b in blocks],
        "offsets": [[float(x) for x in b.offset] for b in blocks],
        "mu": b0.mu,
        "n": b0.n,
        "dim": b0.dim,
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    for i, b in enumerate(blocks):
        with open(out / f"block{i}.bin", "wb") as fh:
            for f in (b.potential, b.profile, b.w, b.v):
                write_field(fh, f)
    return out


def load_family(root, directions, mu: float, n: int, dim: int
                ) -> list[mikado.MikadoBlock] | None:
    """Reload a cached family, or None when the key is absent."""
    key = family_key(directions, mu, n, dim)
    src = Path(root) / key
    if not (src / "meta.json").exists():
        return None
    meta = json.loads((src / "meta.json").read_text())
    blocks = []
    for i, (d, off) in enumerate(zip(meta["directions"], meta["offsets"])):
        records = read_fields(src / f"block{i}.bin")
        potential, profile, w, v = (r[0] for r in records)
        k = np.asarray(d, dtype=np.int64)
        blocks.append(
            mikado.MikadoBlock(
                direction=k,
                unit=k / np.linalg.norm(k),
                mu=float(meta["mu"]),
                offset=np.asarray(off, dtype=float),
                spacing=mikado.tube_spacing(k),
                potential=potential,
                profile=profile,
                w=w,
                v=v,
            )
        )
    return blocks
