"""Radon cumulative distribution transform: a nonlinear, invertible image transform
built from one-dimensional optimal transport along every projection angle."""

from .analysis import (
    CVResult,
    LabeledDataset,
    LinearModel,
    PCA,
    cpv_curve,
    cross_validate,
    discriminant_projection,
    pca_fit,
    plda_fit,
    svm_predict,
    svm_train,
)
from .cdt import cdt_forward_1d, cdt_inverse_1d, transport_map_1d, wasserstein2_squared
from .datasets import SynthConfig, default_mothers, gen_confound_classes, gen_synthetic_classes
from .errors import (
    DegenerateInput,
    DomainError,
    IoError,
    ParseError,
    RadonCDTError,
    SampleRejected,
    TemplateMismatch,
)
from .gridio import (
    RcdtRepresentation,
    Sinogram,
    TransportField,
    load_pgm,
    normalize_density,
    read_grid,
    save_pgm,
    write_grid,
)
from .radon import RadonConfig, radon_forward, radon_inverse
from .rcdt import (
    Template,
    interpolate_pair,
    rcd_distance,
    rcdt_forward,
    rcdt_inverse,
    transform_distance,
    transform_norm,
    transport_field,
)

__version__ = "0.1.0"
