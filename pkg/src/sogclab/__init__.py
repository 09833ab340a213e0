"""sogclab: polynomial graph filters, quadratic cascades, and graph-conv models.

A workbench for linear filtering on graphs: seeded random graphs with
symmetric-normalized adjacency, an in-repo Jacobi eigensolver and graph
Fourier transforms, polynomial filter algebra with constructive
factorization into degree-<=2 cascades, a synthetic graph-spectrum dataset
generator, a small tape autodiff engine, and multi-channel graph
convolution networks (one-hop, second-order, K-hop, optional GRU) with an
Adam training loop. The ``sogclab`` command line drives dataset
generation, training, evaluation, depth sweeps and spectrum export.
"""

__version__ = "0.1.0"

from .errors import GenerationError, NumericError
from .graphs import Graph, aggregate_once, erdos_renyi, normalize_adjacency
from .spectral import (
    SpectralBasis,
    eigendecompose,
    gft,
    igft,
    pooled_spectrum,
    spectrum_capacity,
)
from .polyfilter import (
    PolyFilter,
    QuadraticCascade,
    apply_cascade,
    apply_filter,
    block_diag_T,
    compose,
    factor_quadratics,
    gin_stack_polynomial,
    lss_dimension,
    vanilla_stack_polynomial,
)
from .sgs import (
    FilterKind,
    SgsSample,
    build_spectral_filter,
    filter_response,
    target_response,
    generate_dataset,
    generate_sample,
    load_dataset,
    synth_spectrum,
)
from .models import (
    NetworkConfig,
    TrainSchedule,
    count_parameters,
    evaluate,
    init_params,
    linear_filter_coefficients,
    load_checkpoint,
    network_forward,
    save_checkpoint,
    train,
)

__all__ = [
    "__version__",
    "GenerationError",
    "NumericError",
    "Graph",
    "aggregate_once",
    "erdos_renyi",
    "normalize_adjacency",
    "SpectralBasis",
    "eigendecompose",
    "gft",
    "igft",
    "pooled_spectrum",
    "spectrum_capacity",
    "PolyFilter",
    "QuadraticCascade",
    "apply_cascade",
    "apply_filter",
    "block_diag_T",
    "compose",
    "factor_quadratics",
    "gin_stack_polynomial",
    "lss_dimension",
    "vanilla_stack_polynomial",
    "FilterKind",
    "SgsSample",
    "build_spectral_filter",
    "filter_response",
    "target_response",
    "generate_dataset",
    "generate_sample",
    "load_dataset",
    "synth_spectrum",
    "NetworkConfig",
    "TrainSchedule",
    "count_parameters",
    "evaluate",
    "init_params",
    "linear_filter_coefficients",
    "load_checkpoint",
    "network_forward",
    "save_checkpoint",
    "train",
]
