"""
Binary persistence for datasets and trained models, plus run manifests.

Layout of both file kinds::

    magic      4 bytes   b"RFDS" (dataset) or b"RFML" (model)
    version    u16 LE
    hdr_len    u32 LE
    header     hdr_len bytes of UTF-8 JSON (array shapes, metadata)
    payload    little-endian float64 arrays, row-major, in header order

Floats inside the JSON header are written with ``repr`` precision and so
round-trip exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .autoencoder import TrainedPair
from .cases import Dataset, distribution_from_dict
from .errors import FileFormatError, RingfitError
from .neuralnet import NetworkModel, NetworkSpec
from .signal_model import SamplingGrid

DATASET_MAGIC = b"RFDS"
MODEL_MAGIC = b"RFML"
FORMAT_VERSION = 1
_F8 = np.dtype("<f8")


def _write(path, magic: bytes, header: dict, arrays) -> Path:
    path = Path(path)
    hdr = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<HI", FORMAT_VERSION, len(hdr)))
        fh.write(hdr)
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype=_F8).tobytes())
    return path


def _read(path, magic: bytes) -> tuple[dict, memoryview]:
    data = Path(path).read_bytes()
    if data[:4] != magic:
        raise FileFormatError(f"{path}: bad magic {data[:4]!r}, expected {magic!r}")
    if len(data) < 10:
        raise FileFormatError(f"{path}: truncated header")
    version, hdr_len = struct.unpack_from("<HI", data, 4)
    if version != FORMAT_VERSION:
        raise FileFormatError(f"{path}: unsupported format version {version}")
    header = json.loads(data[10 : 10 + hdr_len].decode("utf-8"))
    return header, memoryview(data)[10 + hdr_len :]


def _take(payload: memoryview, offset: int, shape) -> tuple[np.ndarray, int]:
    count = int(np.prod(shape))
    nbytes = count * 8
    if offset + nbytes > len(payload):
        raise FileFormatError("payload shorter than declared by header")
    arr = np.frombuffer(payload[offset : offset + nbytes], dtype=_F8).astype(np.float64).reshape(shape)
    return arr, offset + nbytes


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------

_DATASET_BLOCKS = ("noisy", "clean", "true_params", "latent_targets")


def save_dataset(ds: Dataset, path, scale: float = 1.0) -> Path:
    header = {
        "kind": "dataset",
        "case_id": ds.case_id,
        "which": ds.which,
        "n_rows": len(ds),
        "n_samples": ds.noisy.shape[1],
        "n_params": ds.true_params.shape[1],
        "grid": ds.grid.to_dict(),
        "sigma_noise": ds.sigma_noise,
        "waveform_scale": ds.waveform_scale,
        "scale": scale,
        "blocks": list(_DATASET_BLOCKS),
    }
    return _write(path, DATASET_MAGIC, header, [getattr(ds, b) for b in _DATASET_BLOCKS])


def load_dataset(path) -> tuple[Dataset, dict]:
    """Return the dataset and its raw header."""
    header, payload = _read(path, DATASET_MAGIC)
    n, m, p = header["n_rows"], header["n_samples"], header["n_params"]
    shapes = {"noisy": (n, m), "clean": (n, m), "true_params": (n, p), "latent_targets": (n, p)}
    blocks, off = {}, 0
    for name in header["blocks"]:
        blocks[name], off = _take(payload, off, shapes[name])
    if off != len(payload):
        raise FileFormatError(f"{path}: trailing bytes after payload")
    ds = Dataset(
        **blocks,
        waveform_scale=float(header["waveform_scale"]),
        case_id=int(header["case_id"]),
        which=header["which"],
        sigma_noise=float(header["sigma_noise"]),
        grid=SamplingGrid(**header["grid"]),
    )
    return ds, header


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


def save_model(pair: TrainedPair, path, meta: dict | None = None) -> Path:
    header = {
        "kind": "model",
        "case_id": pair.case_id,
        "waveform_scale": pair.waveform_scale,
        "encoder": pair.encoder.spec.to_dict(),
        "decoder": pair.decoder.spec.to_dict(),
        "latent_distributions": [d.to_dict() for d in pair.latent_distributions],
        "meta": meta or {},
    }
    arrays = pair.encoder.parameters() + pair.decoder.parameters()
    return _write(path, MODEL_MAGIC, header, arrays)


def _load_network(spec: NetworkSpec, payload, off):
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        W, off = _take(payload, off, (fan_in, fan_out))
        b, off = _take(payload, off, (fan_out,))
        weights.append(W)
        biases.append(b)
    return NetworkModel(spec, weights, biases), off


def load_model(path) -> TrainedPair:
    header, payload = _read(path, MODEL_MAGIC)
    encoder, off = _load_network(NetworkSpec.from_dict(header["encoder"]), payload, 0)
    decoder, off = _load_network(NetworkSpec.from_dict(header["decoder"]), payload, off)
    if off != len(payload):
        raise FileFormatError(f"{path}: trailing bytes after payload")
    return TrainedPair(
        encoder=encoder,
        decoder=decoder,
        case_id=int(header["case_id"]),
        latent_distributions=[distribution_from_dict(d) for d in header["latent_distributions"]],
        waveform_scale=float(header["waveform_scale"]),
    )


# ---------------------------------------------------------------------------
# Manifests and locking
# ---------------------------------------------------------------------------

MANIFEST_NAME = "manifest.json"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def update_manifest(out_dir, stage: str, artifacts: dict[str, Path], **fields) -> dict:
    """Merge ``artifacts`` (name -> path) and ``fields`` into ``out_dir/manifest.json``."""
    out_dir = Path(out_dir)
    mpath = out_dir / MANIFEST_NAME
    manifest = json.loads(mpath.read_text()) if mpath.exists() else {"artifacts": {}, "timestamps": {}}
    manifest.update(fields)
    manifest["timestamps"][stage] = datetime.now(timezone.utc).isoformat()
    for name, p in artifacts.items():
        p = Path(p)
        try:
            rel = p.resolve().relative_to(out_dir.resolve())
        except ValueError:
            rel = p.resolve()
        manifest["artifacts"][name] = {"path": str(rel), "sha256": sha256_file(p)}
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest


def verify_manifest(out_dir) -> list[str]:
    """Names of artifacts that are missing or whose digest no longer matches."""
    out_dir = Path(out_dir)
    manifest = json.loads((out_dir / MANIFEST_NAME).read_text())
    bad = []
    for name, entry in manifest["artifacts"].items():
        p = out_dir / entry["path"]
        if not p.exists() or sha256_file(p) != entry["sha256"]:
            bad.append(name)
    return bad


class OutputLockedError(RingfitError):
    pass


@contextmanager
def locked(out_dir):
    """Exclusive lock on an output directory via an O_EXCL lock file."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / ".ringfit.lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise OutputLockedError(f"{out_dir} is in use by another ringfit command ({lock})") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield out_dir
    finally:
        lock.unlink(missing_ok=True)
