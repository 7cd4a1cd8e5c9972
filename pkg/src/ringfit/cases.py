"""
Parameter priors, latent normalization and the built-in Cases 1-8.

Each case describes which distributions the per-component parameters are
drawn from for training and for validation, the noise level, sample counts,
network architecture and training schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .signal_model import (
    DEFAULT_GRID,
    PARAM_NAMES,
    ComponentParams,
    SamplingGrid,
    add_noise,
    standardize,
    synthesize,
)


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Gaussian:
    mu: float
    sigma: float
    kind = "gaussian"

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidParameterError(f"Gaussian sigma must be > 0, got {self.sigma}")

    @property
    def mean(self) -> float:
        return self.mu

    @property
    def std(self) -> float:
        return self.sigma

    def sample(self, rng: np.random.Generator, size=None):
        return rng.normal(self.mu, self.sigma, size=size)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class HalfGaussianAbs(Gaussian):
    """Absolute value of a Gaussian draw.

    ``mean`` and ``std`` report the underlying Gaussian, not the folded one.
    """

    kind = "half_gaussian_abs"

    def sample(self, rng: np.random.Generator, size=None):
        return np.abs(rng.normal(self.mu, self.sigma, size=size))


@dataclass(frozen=True)
class Uniform:
    min: float
    max: float
    kind = "uniform"

    def __post_init__(self):
        if not self.min < self.max:
            raise InvalidParameterError(f"Uniform needs min < max, got [{self.min}, {self.max}]")

    @property
    def mean(self) -> float:
        return 0.5 * (self.min + self.max)

    @property
    def std(self) -> float:
        return (self.max - self.min) / math.sqrt(12.0)

    def sample(self, rng: np.random.Generator, size=None):
        return rng.uniform(self.min, self.max, size=size)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "min": self.min, "max": self.max}


Distribution = Union[Gaussian, HalfGaussianAbs, Uniform]


def distribution_from_dict(d: dict) -> Distribution:
    kind = d.get("kind")
    if kind == "gaussian":
        return Gaussian(float(d["mu"]), float(d["sigma"]))
    if kind == "half_gaussian_abs":
        return HalfGaussianAbs(float(d["mu"]), float(d["sigma"]))
    if kind == "uniform":
        return Uniform(float(d["min"]), float(d["max"]))
    raise InvalidInputError(f"unknown distribution kind: {kind!r}")


def normalize_latent(p, dist: Distribution):
    """Map a physical parameter to latent units, ``(p - mean) / (3 std)``."""
    return (p - dist.mean) / (3.0 * dist.std)


def denormalize_latent(p_lat, dist: Distribution):
    """Inverse of :func:`normalize_latent`."""
    return p_lat * (3.0 * dist.std) + dist.mean


@dataclass(frozen=True)
class ComponentPrior:
    """Distributions for the four parameters of one component."""

    f: Distribution
    phi: Distribution
    tau: Distribution
    A: Distribution

    def __iter__(self):
        return iter((self.f, self.phi, self.tau, self.A))

    def to_dict(self) -> dict:
        return {name: d.to_dict() for name, d in zip(PARAM_NAMES, self)}

    @classmethod
    def from_dict(cls, d: dict) -> "ComponentPrior":
        return cls(*(distribution_from_dict(d[name]) for name in PARAM_NAMES))


def _g(mu, sigma):
    return Gaussian(mu, sigma)


def _gprior(f, phi, tau, A) -> ComponentPrior:
    """Gaussian prior; tau is always drawn as |N(mu, sigma)| so it stays positive."""
    return ComponentPrior(_g(*f), _g(*phi), HalfGaussianAbs(*tau), _g(*A))


def _uprior(f, phi, tau, A) -> ComponentPrior:
    return ComponentPrior(Uniform(*f), Uniform(*phi), Uniform(*tau), Uniform(*A))


# ---------------------------------------------------------------------------
# Case specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CaseSpec:
    case_id: int
    train_priors: tuple[ComponentPrior, ...]
    validation_priors: tuple[ComponentPrior, ...]
    sigma_noise: float
    n_train: int
    n_validation: int
    encoder_layers: tuple[int, ...]
    learning_rate: float
    encoder_epochs: int
    decoder_epochs: int
    batch_size: int = 64
    dropout_rate: float = 0.1
    grid: SamplingGrid = field(default=DEFAULT_GRID)

    def __post_init__(self):
        if len(self.train_priors) == 0 or len(self.train_priors) != len(self.validation_priors):
            raise InvalidParameterError("train and validation priors must list the same components")
        if self.encoder_layers[-1] != self.latent_dim:
            raise InvalidParameterError(
                f"latent layer {self.encoder_layers[-1]} != 4 x {self.n_components} components"
            )
        if self.encoder_layers[0] != self.grid.n_samples:
            raise InvalidParameterError("encoder input size must equal the number of samples")
        if not self.sigma_noise >= 0:
            raise InvalidParameterError("sigma_noise must be >= 0")
        if self.n_train < 1 or self.n_validation < 1:
            raise InvalidParameterError("sample counts must be >= 1")

    @property
    def n_components(self) -> int:
        return len(self.train_priors)

    @property
    def latent_dim(self) -> int:
        return 4 * self.n_components

    @property
    def decoder_layers(self) -> tuple[int, ...]:
        return tuple(reversed(self.encoder_layers))

    @property
    def shared_priors(self) -> bool:
        """True when training and validation data come from the same distributions."""
        return self.train_priors == self.validation_priors

    def latent_distributions(self) -> list[Distribution]:
        """Training distributions in latent order (f0, phi0, tau0, A0, f1, ...)."""
        return [d for prior in self.train_priors for d in prior]

    def scaled(self, scale: float) -> "CaseSpec":
        """Copy with both sample counts multiplied by ``scale`` (minimum 100 each)."""
        return replace(
            self,
            n_train=scaled_count(self.n_train, scale),
            n_validation=scaled_count(self.n_validation, scale),
        )

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "n_components": self.n_components,
            "train": [p.to_dict() for p in self.train_priors],
            "validation": [p.to_dict() for p in self.validation_priors],
            "sigma_noise": self.sigma_noise,
            "n_train": self.n_train,
            "n_validation": self.n_validation,
            "architecture": {
                "encoder": list(self.encoder_layers),
                "decoder": list(self.decoder_layers),
            },
            "training": {
                "lr": self.learning_rate,
                "encoder_epochs": self.encoder_epochs,
                "decoder_epochs": self.decoder_epochs,
                "batch_size": self.batch_size,
                "dropout_rate": self.dropout_rate,
            },
            "grid": self.grid.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CaseSpec":
        train = tuple(ComponentPrior.from_dict(p) for p in d["train"])
        validation = tuple(ComponentPrior.from_dict(p) for p in d.get("validation", d["train"]))
        training = d.get("training", {})
        arch = d.get("architecture", {})
        grid = SamplingGrid(**d["grid"]) if "grid" in d else DEFAULT_GRID
        return cls(
            case_id=int(d["case_id"]),
            train_priors=train,
            validation_priors=validation,
            sigma_noise=float(d["sigma_noise"]),
            n_train=int(d["n_train"]),
            n_validation=int(d["n_validation"]),
            encoder_layers=tuple(int(n) for n in arch["encoder"]),
            learning_rate=float(training["lr"]),
            encoder_epochs=int(training["encoder_epochs"]),
            decoder_epochs=int(training["decoder_epochs"]),
            batch_size=int(training.get("batch_size", 64)),
            dropout_rate=float(training.get("dropout_rate", 0.1)),
            grid=grid,
        )


def scaled_count(n: int, scale: float, minimum: int = 100) -> int:
    if not 0 < scale <= 1:
        raise InvalidParameterError(f"scale must be in (0, 1], got {scale}")
    # round first so that e.g. 0.01 * 1e6 does not ceil to 10001
    return max(minimum, math.ceil(round(scale * n, 6)))


def apply_overrides(spec: CaseSpec, overrides: dict) -> CaseSpec:
    """Merge a (partial) JSON config over a registry spec."""
    base = spec.to_dict()
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            base[key] = {**base[key], **value}
        else:
            base[key] = value
    return CaseSpec.from_dict(base)


# Hourglass encoders (input ... latent); decoders mirror them.
ARCHITECTURES = {
    1: (1000, 200, 100, 20, 8),
    2: (1000, 200, 100, 20, 8),
    3: (1000, 500, 200, 50, 20),
    4: (1000, 200, 100, 20, 4),
    5: (1000, 200, 100, 20, 4),
    6: (1000, 200, 100, 20, 8),
    7: (1000, 200, 100, 20, 8),
    8: (1000, 200, 100, 20, 12),
}

# (learning rate, encoder epochs, decoder epochs)
TRAINING_SETTINGS = {
    1: (0.001, 350, 200),
    2: (0.001, 500, 500),
    3: (0.005, 350, 200),
    4: (0.001, 350, 400),
    5: (0.001, 350, 400),
    6: (0.0001, 250, 150),
    7: (0.0001, 250, 150),
    8: (0.0001, 250, 150),
}

# (n_train, n_validation, sigma_noise)
SAMPLE_SETTINGS = {
    1: (8000, 2000, 1 / 2),
    2: (8000, 2000, 1 / 2**3),
    3: (8000, 2000, 5.0),
    4: (4000, 1000, 1 / 2**3),
    5: (4000, 1000, 1 / 2**3),
    6: (990000, 10000, 1 / 2**3),
    7: (1000000, 10000, 1 / 2**3),
    8: (1000000, 10000, 1 / 2**2),
}

_CASE1 = (
    _gprior((0.90, 0.050), (-0.10, 0.050), (1.0, 0.050), (1.0, 0.050)),
    _gprior((1.1, 0.050), (0.10, 0.050), (2.0, 0.050), (4.0, 0.050)),
)
_CASE2 = (
    _gprior((0.90, 0.050), (0.00, 0.10), (1.4, 0.070), (2.8, 0.15)),
    _gprior((1.1, 0.050), (2.8, 0.10), (1.6, 0.070), (3.2, 0.15)),
)
_CASE3 = tuple(
    _gprior((f, 0.10), (phi, 0.10), (tau, 0.10), (A, 0.10))
    for f, phi, tau, A in [
        (0.60, -0.40, 1.4, 1.0),
        (0.80, -0.20, 1.6, 2.0),
        (1.0, 0.00, 1.8, 3.0),
        (1.2, 0.20, 2.0, 4.0),
        (1.4, 0.40, 2.2, 5.0),
    ]
)
_CASE45_GAUSS = (_gprior((1.0, 0.10), (0.00, 0.10), (1.0, 0.50), (1.0, 0.050)),)
_CASE5_UNIFORM = (_uprior((0.60, 1.4), (-0.40, 0.40), (0.10, 2.7), (0.80, 1.2)),)
_CASE67_GAUSS = (
    _gprior((1.0, 0.10), (-0.20, 0.10), (1.8, 0.10), (1.0, 0.10)),
    _gprior((1.2, 0.10), (0.20, 0.10), (2.0, 0.10), (2.0, 0.10)),
)
_CASE7_UNIFORM = (
    _uprior((0.80, 1.3), (-0.60, 0.10), (1.4, 2.1), (0.30, 1.6)),
    _uprior((1.0, 1.5), (-0.10, 0.60), (1.7, 2.4), (1.4, 2.7)),
)
_CASE8_UNIFORM = (
    _uprior((0.20, 0.90), (-0.80, 0.10), (1.0, 1.7), (0.50, 1.4)),
    _uprior((0.40, 1.1), (-0.60, 0.30), (1.2, 1.9), (0.90, 1.8)),
    _uprior((0.60, 1.3), (-0.40, 0.50), (1.4, 2.1), (1.3, 2.2)),
)
_CASE8_GAUSS = tuple(
    _gprior((f, 0.10), (phi, 0.10), (tau, 0.10), (A, 0.10))
    for f, phi, tau, A in [
        (0.60, -0.40, 1.4, 1.0),
        (0.80, -0.20, 1.6, 1.4),
        (1.0, 0.00, 1.8, 1.8),
    ]
)

_PRIORS = {
    1: (_CASE1, _CASE1),
    2: (_CASE2, _CASE2),
    3: (_CASE3, _CASE3),
    4: (_CASE45_GAUSS, _CASE45_GAUSS),
    5: (_CASE5_UNIFORM, _CASE45_GAUSS),
    6: (_CASE67_GAUSS, _CASE67_GAUSS),
    7: (_CASE7_UNIFORM, _CASE67_GAUSS),
    8: (_CASE8_UNIFORM, _CASE8_GAUSS),
}


def get_case(case_id: int) -> CaseSpec:
    """Return the built-in specification for Cases 1-8."""
    if case_id not in _PRIORS:
        raise InvalidParameterError(f"unknown case id {case_id}; expected 1..8")
    train, validation = _PRIORS[case_id]
    lr, enc_epochs, dec_epochs = TRAINING_SETTINGS[case_id]
    n_train, n_val, sigma_noise = SAMPLE_SETTINGS[case_id]
    return CaseSpec(
        case_id=case_id,
        train_priors=train,
        validation_priors=validation,
        sigma_noise=sigma_noise,
        n_train=n_train,
        n_validation=n_val,
        encoder_layers=ARCHITECTURES[case_id],
        learning_rate=lr,
        encoder_epochs=enc_epochs,
        decoder_epochs=dec_epochs,
    )


CASE_IDS = tuple(sorted(_PRIORS))


# ---------------------------------------------------------------------------
# Sampling and dataset generation
# ---------------------------------------------------------------------------


def _priors(spec: CaseSpec, which: str) -> Sequence[ComponentPrior]:
    if which == "train":
        return spec.train_priors
    if which == "validation":
        return spec.validation_priors
    raise InvalidInputError(f"which must be 'train' or 'validation', got {which!r}")


def sample_params(spec: CaseSpec, which: str, rng: np.random.Generator) -> list[ComponentParams]:
    """Draw one parameter set per component from the train or validation priors."""
    return [
        ComponentParams(*(float(d.sample(rng)) for d in prior)) for prior in _priors(spec, which)
    ]


@dataclass
class Dataset:
    """Aligned arrays for one split.

    Attributes
    ----------
    noisy : ndarray, shape (n, n_samples)
        Standardized noisy waveforms (encoder inputs).
    clean : ndarray, shape (n, n_samples)
        Noise-free waveforms in physical units (decoder targets).
    true_params : ndarray, shape (n, 4 * n_components)
        Physical parameters ordered (f0, phi0, tau0, A0, f1, ...).
    latent_targets : ndarray
        ``true_params`` normalized with the case's training distributions.
    waveform_scale : float
        ``max |clean| / 0.95`` over this split.
    """

    noisy: np.ndarray
    clean: np.ndarray
    true_params: np.ndarray
    latent_targets: np.ndarray
    waveform_scale: float
    case_id: int = 0
    which: str = "train"
    sigma_noise: float = 0.0
    grid: SamplingGrid = field(default=DEFAULT_GRID)

    def __post_init__(self):
        n = self.noisy.shape[0]
        if not (self.clean.shape[0] == self.true_params.shape[0] == self.latent_targets.shape[0] == n):
            raise InvalidInputError("dataset arrays have mismatched row counts")

    def __len__(self) -> int:
        return self.noisy.shape[0]

    @property
    def n_components(self) -> int:
        return self.true_params.shape[1] // 4

    def subset(self, rows) -> "Dataset":
        return replace(
            self,
            noisy=self.noisy[rows],
            clean=self.clean[rows],
            true_params=self.true_params[rows],
            latent_targets=self.latent_targets[rows],
        )


WAVEFORM_HEADROOM = 0.95


def waveform_scale_of(clean: np.ndarray) -> float:
    peak = float(np.max(np.abs(clean)))
    if peak == 0:
        return 1.0
    return peak / WAVEFORM_HEADROOM


def _generate_rows(spec: CaseSpec, which: str, n: int, rng: np.random.Generator):
    grid = spec.grid
    n_par = spec.latent_dim
    noisy = np.empty((n, grid.n_samples))
    clean = np.empty((n, grid.n_samples))
    params = np.empty((n, n_par))
    for i in range(n):
        comps = sample_params(spec, which, rng)
        x = synthesize(comps, grid)
        clean[i] = x
        noisy[i] = standardize(add_noise(x, spec.sigma_noise, rng))
        params[i] = [v for c in comps for v in c.as_tuple()]
    return noisy, clean, params


def latent_targets_for(spec: CaseSpec, true_params: np.ndarray) -> np.ndarray:
    dists = spec.latent_distributions()
    out = np.empty_like(true_params)
    for j, d in enumerate(dists):
        out[:, j] = normalize_latent(true_params[:, j], d)
    return out


def _make_dataset(spec, which, noisy, clean, params) -> Dataset:
    return Dataset(
        noisy=noisy,
        clean=clean,
        true_params=params,
        latent_targets=latent_targets_for(spec, params),
        waveform_scale=waveform_scale_of(clean),
        case_id=spec.case_id,
        which=which,
        sigma_noise=spec.sigma_noise,
        grid=spec.grid,
    )


def generate_dataset(
    spec: CaseSpec, which: str, rng: np.random.Generator, n: int | None = None
) -> Dataset:
    """Generate one split of ``spec``.

    For each sample: draw parameters, synthesize the clean waveform, add
    noise at ``spec.sigma_noise`` and standardize the noisy copy. Latent
    targets always use the training distributions' moments.
    """
    if n is None:
        n = spec.n_train if which == "train" else spec.n_validation
    _priors(spec, which)
    if n < 1:
        raise InvalidInputError("requested sample count must be >= 1")
    return _make_dataset(spec, which, *_generate_rows(spec, which, n, rng))


def generate_split(spec: CaseSpec, rng: np.random.Generator) -> tuple[Dataset, Dataset]:
    """Generate (train, validation) for a case.

    When training and validation share their priors, a single run of
    ``n_train + n_validation`` samples is drawn and split in order; otherwise
    the two splits are drawn one after the other from their own priors.
    """
    if spec.shared_priors:
        n = spec.n_train + spec.n_validation
        noisy, clean, params = _generate_rows(spec, "train", n, rng)
        k = spec.n_train
        train = _make_dataset(spec, "train", noisy[:k], clean[:k], params[:k])
        val = _make_dataset(spec, "validation", noisy[k:], clean[k:], params[k:])
        return train, val
    train = generate_dataset(spec, "train", rng)
    val = generate_dataset(spec, "validation", rng)
    return train, val
