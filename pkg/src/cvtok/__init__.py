"""Contour-velocity tokenization of binary silhouette sequences."""

__version__ = "0.1.0"

from .grid import BitGrid, SilhouetteSequence, decompose, flatten, recompose
from .extractors import (
    ContourMap,
    VelocityMap,
    extract_contour,
    extract_sequence_maps,
    extract_velocity,
    reconstruct_silhouette,
)
from .vocab import (
    FrequencyTable,
    ProjectionStub,
    TokenFrame,
    VocabularyMap,
    build_vocabulary,
    encode_frame,
    encode_sequence,
    estimate_frequencies,
    project_frame,
)
from .stats import compute_acr, compute_density, density_report, roundtrip_report
from .corpus import load_corpus, read_pgm, read_packed, save_corpus, write_packed, write_pgm
from .walker import WalkerConfig, generate_corpus, generate_walker
