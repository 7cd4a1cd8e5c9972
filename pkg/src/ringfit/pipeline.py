"""
End-to-end commands: generate, train, evaluate, reproduce, estimate.

Every command takes a single integer seed. Each stage draws from its own
generator, seeded with ``SeedSequence([seed, stage_key])`` where
``stage_key`` is the first 8 bytes (little-endian) of SHA-256 of the stage
name, so stages never share random streams.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from pathlib import Path
from typing import Callable

import numpy as np

from . import autoencoder as ae
from .cases import CaseSpec, apply_overrides, generate_split, get_case
from .errors import InvalidInputError
from .evaluation import ERROR_LABELS, CaseReport, evaluate_case
from .published import PUBLISHED_RESULTS, fmt
from .signal_model import PARAM_NAMES
from .storage import (
    load_dataset,
    load_model,
    locked,
    save_dataset,
    save_model,
    update_manifest,
    verify_manifest,
)

log = logging.getLogger(__name__)

STAGES = ("generate", "encoder", "decoder")


def stage_key(stage: str) -> int:
    return int.from_bytes(hashlib.sha256(stage.encode("utf-8")).digest()[:8], "little")


def derive_rng(seed: int, stage: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), stage_key(stage)]))


def resolve_spec(case_id: int, overrides: dict | None = None) -> CaseSpec:
    spec = get_case(case_id)
    if overrides:
        spec = apply_overrides(spec, {**overrides, "case_id": case_id})
    return spec


def load_config(path) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# generate / train / evaluate
# ---------------------------------------------------------------------------


def cmd_generate(case_id: int, scale: float, seed: int, out_dir, overrides: dict | None = None):
    """Write ``train.rfds`` and ``validation.rfds``; returns their paths."""
    spec = resolve_spec(case_id, overrides).scaled(scale)
    out_dir = Path(out_dir)
    with locked(out_dir):
        train, val = generate_split(spec, derive_rng(seed, "generate"))
        tpath = save_dataset(train, out_dir / "train.rfds", scale=scale)
        vpath = save_dataset(val, out_dir / "validation.rfds", scale=scale)
        update_manifest(
            out_dir, "generate", {"train": tpath, "validation": vpath},
            case_id=case_id, scale=scale, seed=seed, config=spec.to_dict(),
        )
    log.info("case %d: wrote %d train / %d validation rows", case_id, len(train), len(val))
    return tpath, vpath


def _write_trace(path, traces: dict) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["stage", "epoch", "train_loss", "validation_loss"])
        for stage in ("encoder", "decoder"):
            losses, val = traces[stage]
            for k, loss in enumerate(losses):
                w.writerow([stage, k + 1, repr(loss), repr(val[k]) if k < len(val) else ""])
    return Path(path)


def cmd_train(
    case_id: int,
    dataset_path,
    seed: int,
    out_dir,
    overrides: dict | None = None,
    validation_path=None,
):
    """Train encoder and decoder on a dataset file; returns ``(model_path, pair)``."""
    spec = resolve_spec(case_id, overrides)
    train, header = load_dataset(dataset_path)
    if train.case_id != case_id:
        raise InvalidInputError(f"dataset is for case {train.case_id}, not case {case_id}")
    if train.which != "train":
        raise InvalidInputError(f"{dataset_path} is a {train.which} split, expected train")
    val = load_dataset(validation_path)[0] if validation_path else None
    out_dir = Path(out_dir)
    with locked(out_dir):
        pair, traces = ae.train_pair(
            train, spec, derive_rng(seed, "encoder"), validation=val,
            decoder_rng=derive_rng(seed, "decoder"),
        )
        for name, model in (("encoder", pair.encoder), ("decoder", pair.decoder)):
            if not model.all_finite():
                raise FloatingPointError(f"{name} parameters became non-finite")
        mpath = save_model(pair, out_dir / "model.rfml", meta={"seed": seed, "scale": header.get("scale", 1.0)})
        tpath = _write_trace(out_dir / "loss_trace.csv", traces)
        update_manifest(
            out_dir, "train", {"model": mpath, "loss_trace": tpath},
            case_id=case_id, seed=seed, config=spec.to_dict(),
        )
    return mpath, pair


def cmd_evaluate(model_path, validation_path, out_dir, seed: int | None = None) -> CaseReport:
    """Write ``report.json``, ``report.csv`` and ``per_sample.csv``."""
    pair = load_model(model_path)
    val, header = load_dataset(validation_path)
    if pair.case_id != val.case_id:
        raise InvalidInputError(f"model is for case {pair.case_id}, dataset for case {val.case_id}")
    out_dir = Path(out_dir)
    t0 = time.perf_counter()
    report = evaluate_case(pair, val, scale=float(header.get("scale", 1.0)), seed=seed)
    report.wall_time = time.perf_counter() - t0
    with locked(out_dir):
        paths = {
            "report_json": out_dir / "report.json",
            "report_csv": out_dir / "report.csv",
            "per_sample_csv": out_dir / "per_sample.csv",
        }
        paths["report_json"].write_text(report.to_json(), encoding="utf-8")
        with open(paths["report_csv"], "w", newline="", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        with open(paths["per_sample_csv"], "w", newline="", encoding="utf-8") as fh:
            fh.write(report.per_sample_csv())
        update_manifest(out_dir, "evaluate", paths)
    return report


# ---------------------------------------------------------------------------
# reproduce
# ---------------------------------------------------------------------------


def comparison_table(report: CaseReport) -> str:
    """Side-by-side published vs obtained values."""
    pub = PUBLISHED_RESULTS.get(report.case_id)
    lines = [f"Case {report.case_id}  (n_validation={report.n_validation}, scale={report.scale:g})"]
    if report.scaled:
        lines.append(f"  NOTE: {report.to_dict()['stamp']}")
    lines.append(f"  {'quantity':<28}{'published':>18}{'obtained':>18}")
    pub_match = fmt(pub["match"]) if pub else "-"
    lines.append(f"  {'match score':<28}{pub_match:>18}{fmt((report.match_mean, report.match_std)):>18}")
    lines.append(f"  {'match median / min':<28}{'-':>18}{f'{report.match_median:.3f} / {report.match_min:.3f}':>18}")
    for i, comp in enumerate(report.errors):
        for k, (col, label) in enumerate(zip(comp, ERROR_LABELS)):
            name = f"{label.split(' ')[0]}{i} {' '.join(label.split(' ')[1:])}"
            p = fmt(pub["components"][i][k]) if pub and i < len(pub["components"]) else "-"
            lines.append(f"  {name:<28}{p:>18}{fmt(comp[col]):>18}")
    return "\n".join(lines)


def cmd_reproduce(
    case_id: int,
    scale: float,
    seed: int,
    out_dir,
    overrides: dict | None = None,
    echo: Callable[[str], None] = print,
) -> dict:
    """generate -> train -> evaluate, then print the comparison table."""
    out_dir = Path(out_dir)
    t0 = time.perf_counter()
    tpath, vpath = cmd_generate(case_id, scale, seed, out_dir, overrides)
    mpath, _ = cmd_train(case_id, tpath, seed, out_dir, overrides)
    report = cmd_evaluate(mpath, vpath, out_dir, seed=seed)
    echo(comparison_table(report))
    with locked(out_dir):
        manifest = update_manifest(out_dir, "reproduce", {}, wall_time_s=time.perf_counter() - t0)
    bad = verify_manifest(out_dir)
    if bad:
        raise RuntimeError(f"manifest digests do not verify for: {bad}")
    return manifest


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------


def read_waveform_csv(path, n_samples: int) -> np.ndarray:
    """One waveform per row; a non-numeric first row is treated as a header."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                values = [float(c) for c in row]
            except ValueError:
                if lineno == 1:
                    continue
                raise InvalidInputError(f"{path}: row {lineno} is not numeric") from None
            if len(values) != n_samples:
                raise InvalidInputError(
                    f"{path}: row {lineno} has {len(values)} samples, expected {n_samples}"
                )
            rows.append(values)
    if not rows:
        raise InvalidInputError(f"{path}: no waveforms found (empty input)")
    return np.array(rows, dtype=np.float64)


def cmd_estimate(model_path, csv_in, out_dir):
    """Write ``estimates.csv`` and ``denoised.csv``; returns the estimate matrix."""
    pair = load_model(model_path)
    x = read_waveform_csv(csv_in, pair.n_samples)
    est = ae.estimate_parameter_matrix(pair, x)
    den = ae.denoise(pair, x)
    out_dir = Path(out_dir)
    with locked(out_dir):
        epath, dpath = out_dir / "estimates.csv", out_dir / "denoised.csv"
        with open(epath, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["row"] + [f"{p}{i}" for i in range(pair.n_components) for p in PARAM_NAMES])
            for k, r in enumerate(est):
                w.writerow([k] + [repr(float(v)) for v in r])
        with open(dpath, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            for r in den:
                w.writerow([repr(float(v)) for v in r])
    return est
