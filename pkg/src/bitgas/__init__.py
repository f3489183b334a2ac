"""Bit-string ensembles with cyclic Hamming energies and their statistical theory."""
from . import bitcore, ensemble, experiment, theory
from .bitcore import BitString, SourceSpec, cyclic_distances, generate_source
from .ensemble import EnsembleHistogram, build_b_ensemble, build_c_ensemble, summarize
from .errors import BitgasError, DomainError, InvalidParameterError
from .theory import Model, ModelParams

__version__ = "0.1.0"

__all__ = [
    "bitcore", "ensemble", "experiment", "theory",
    "BitString", "SourceSpec", "cyclic_distances", "generate_source",
    "EnsembleHistogram", "build_b_ensemble", "build_c_ensemble", "summarize",
    "BitgasError", "DomainError", "InvalidParameterError", "Model", "ModelParams",
]
