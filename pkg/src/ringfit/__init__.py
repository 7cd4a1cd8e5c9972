"""Parameter estimation for superposed damped sinusoids with a latent-supervised autoencoder."""

from .signal_model import ComponentParams, SamplingGrid, add_noise, standardize, synthesize
from .cases import CaseSpec, Dataset, generate_dataset, generate_split, get_case
from .autoencoder import TrainedPair, denoise, estimate_parameters
from .evaluation import CaseReport, match_score

__version__ = "0.1.0"
