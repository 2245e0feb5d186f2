"""Python bindings for the freqrise C++ library."""

from ._core import (
    Error,
    EndpointError,
    ExplainFailed,
    ExternalModel,
    FormatError,
    InvalidArgument,
    InvalidGrid,
    InvalidSignal,
    InvalidWindow,
    MlpModel,
    Model,
    OracleModel,
    RelevanceMap,
    ShapeError,
    UndefinedMetric,
    amplitude_map,
    deletion_curve,
    dft,
    entropy,
    explain,
    gen_synthetic,
    idft,
    istdft,
    load_audio,
    postprocess,
    random_map,
    rank_accuracy,
    stdft,
)

__all__ = [name for name in dir() if not name.startswith("_")]
