"""
Latent-supervised autoencoder for damped-sinusoid parameter estimation.

The encoder maps a standardized noisy waveform to normalized parameters
(its linear latent layer is supervised directly); the decoder maps
normalized parameters back to a clean waveform. The two halves are trained
separately and only meet at inference time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import neuralnet as nn
from .cases import CaseSpec, Dataset, Distribution, denormalize_latent, waveform_scale_of
from .errors import InvalidInputError
from .signal_model import ComponentParams, standardize, vector_to_params

log = logging.getLogger(__name__)

TAU_FLOOR = 1e-3  # us


def build_architecture(spec: CaseSpec) -> tuple[nn.NetworkSpec, nn.NetworkSpec]:
    """Encoder (linear latent output) and mirrored decoder (tanh output)."""
    enc = nn.NetworkSpec.mlp(spec.encoder_layers, final=nn.LINEAR, dropout_rate=spec.dropout_rate)
    dec = nn.NetworkSpec.mlp(spec.decoder_layers, final=nn.TANH, dropout_rate=spec.dropout_rate)
    return enc, dec


def _config(spec: CaseSpec, epochs: int) -> nn.TrainingConfig:
    return nn.TrainingConfig(
        learning_rate=spec.learning_rate, epochs=epochs, batch_size=spec.batch_size
    )


def train_encoder(
    dataset: Dataset,
    spec: CaseSpec,
    rng: np.random.Generator,
    epochs: int | None = None,
    validation: Dataset | None = None,
):
    """Fit noisy waveform -> normalized parameters.

    Returns ``(encoder, train_losses, validation_losses)``.
    """
    enc_spec, _ = build_architecture(spec)
    model = nn.init(enc_spec, rng)
    epochs = spec.encoder_epochs if epochs is None else epochs
    val = None if validation is None else (validation.noisy, validation.latent_targets)
    log.info("training encoder for case %d: %d samples, %d epochs", spec.case_id, len(dataset), epochs)
    return nn.train(model, dataset.noisy, dataset.latent_targets, _config(spec, epochs), rng, val)


def train_decoder(
    dataset: Dataset,
    spec: CaseSpec,
    rng: np.random.Generator,
    epochs: int | None = None,
    validation: Dataset | None = None,
):
    """Fit normalized parameters -> clean waveform / waveform_scale.

    Returns ``(decoder, waveform_scale, train_losses, validation_losses)``.
    """
    _, dec_spec = build_architecture(spec)
    model = nn.init(dec_spec, rng)
    epochs = spec.decoder_epochs if epochs is None else epochs
    scale = waveform_scale_of(dataset.clean)
    val = None
    if validation is not None:
        val = (validation.latent_targets, validation.clean / scale)
    log.info("training decoder for case %d: %d samples, %d epochs", spec.case_id, len(dataset), epochs)
    model, losses, val_losses = nn.train(
        model, dataset.latent_targets, dataset.clean / scale, _config(spec, epochs), rng, val
    )
    return model, scale, losses, val_losses


@dataclass
class TrainedPair:
    encoder: nn.NetworkModel
    decoder: nn.NetworkModel
    case_id: int
    latent_distributions: list[Distribution]
    waveform_scale: float

    def __post_init__(self):
        latent = len(self.latent_distributions)
        if latent % 4 or self.encoder.spec.layer_sizes[-1] != latent or self.decoder.spec.layer_sizes[0] != latent:
            raise InvalidInputError("encoder/decoder latent sizes disagree with the distributions")
        if not self.waveform_scale > 0:
            raise InvalidInputError("waveform_scale must be positive")

    @property
    def n_components(self) -> int:
        return len(self.latent_distributions) // 4

    @property
    def n_samples(self) -> int:
        return self.encoder.spec.layer_sizes[0]


def train_pair(
    train: Dataset,
    spec: CaseSpec,
    rng: np.random.Generator,
    validation: Dataset | None = None,
    decoder_rng: np.random.Generator | None = None,
):
    """Train encoder then decoder; returns ``(pair, traces)``.

    ``traces`` maps ``"encoder"``/``"decoder"`` to ``(train_losses, val_losses)``.
    The decoder uses ``decoder_rng`` when given, otherwise continues ``rng``.
    """
    enc, enc_loss, enc_val = train_encoder(train, spec, rng, validation=validation)
    dec_rng = rng if decoder_rng is None else decoder_rng
    dec, scale, dec_loss, dec_val = train_decoder(train, spec, dec_rng, validation=validation)
    pair = TrainedPair(enc, dec, spec.case_id, spec.latent_distributions(), scale)
    return pair, {"encoder": (enc_loss, enc_val), "decoder": (dec_loss, dec_val)}


def _as_batch(noisy, n_samples: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(noisy, dtype=np.float64)
    single = x.ndim == 1
    x2 = x[None, :] if single else x
    if x2.ndim != 2 or x2.shape[1] != n_samples:
        raise InvalidInputError(f"waveform length {x2.shape[-1]} != {n_samples}")
    return x2, single


def encode(pair: TrainedPair, noisy) -> np.ndarray:
    """Latent (normalized-parameter) output for one waveform or a batch of rows."""
    x, single = _as_batch(noisy, pair.n_samples)
    lat = pair.encoder.predict(standardize(x))
    return lat[0] if single else lat


def latent_to_physical(pair: TrainedPair, latent) -> np.ndarray:
    """Denormalize latent vectors and clamp decay times to ``TAU_FLOOR``."""
    latent = np.asarray(latent, dtype=np.float64)
    out = np.empty_like(latent)
    for j, d in enumerate(pair.latent_distributions):
        out[..., j] = denormalize_latent(latent[..., j], d)
    tau = out[..., 2::4]
    out[..., 2::4] = np.maximum(tau, TAU_FLOOR)
    return out


def estimate_parameter_matrix(pair: TrainedPair, noisy) -> np.ndarray:
    """Physical estimates, shape (n, 4 * n_components) for a batch."""
    return latent_to_physical(pair, encode(pair, noisy))


def estimate_parameters(pair: TrainedPair, noisy) -> list[ComponentParams]:
    """Per-component (f, phi, tau, A) estimates for a single waveform."""
    x, _ = _as_batch(noisy, pair.n_samples)
    if x.shape[0] != 1:
        raise InvalidInputError("estimate_parameters takes a single waveform")
    return vector_to_params(estimate_parameter_matrix(pair, x[0]))


def decode(pair: TrainedPair, latent) -> np.ndarray:
    """Decoder output in physical waveform units."""
    return pair.decoder.predict(latent) * pair.waveform_scale


def denoise(pair: TrainedPair, noisy) -> np.ndarray:
    """Standardize, encode, decode and rescale; works on one waveform or rows."""
    return decode(pair, encode(pair, noisy))
