"""Streaming classification of multivariate time series.

The pipeline: a nondecimated Haar pyramid is maintained over a sliding
window with constant-size updates; window coherence is estimated from
bias-corrected, time-smoothed wavelet periodograms; a per-class Gaussian
model over Fisher-transformed coherence at discriminative (scale, channel
pair) indices yields posteriors, averaged over all windows covering each
time point.
"""

__version__ = "0.1.0"

from .classifier import (
    ClassifierConfig,
    ClassModel,
    IndexSet,
    ProbabilitySeries,
    classify_online,
    count_class_changes,
    discrepancy,
    load_model,
    read_probability_csv,
    save_model,
    select_indices,
    train,
    transformed_coherence,
    window_posterior,
    write_probability_csv,
)
from .data import (
    LabelledSeries,
    MultivariateSeries,
    detrend_first_difference,
    read_csv,
    write_csv,
)
from .errors import (
    CohstreamError,
    ConditioningError,
    MissingClassError,
    ParseError,
    SizeError,
    StabilityError,
    ValidationError,
)
from .evalkit import (
    BenchReport,
    EvaluationReport,
    bench_scaling,
    run_study,
    true_positive_rate,
    v_measure,
)
from .online import SlidingTransformState
from .simgen import (
    PRESETS,
    GeneratorPreset,
    Scenario,
    generate,
    get_preset,
    make_rng,
    make_training_set,
    scenario,
)
from .spectra import (
    CoherenceResult,
    SmootherConfig,
    SpectralTensor,
    coherence,
    correct_and_smooth,
    default_bandwidth,
    default_max_scale,
    fisher_z,
    raw_periodogram,
    read_spectral_csv,
    write_spectral_csv,
)
from .wavelet import (
    CoefficientPyramid,
    WaveletFilter,
    autocorrelation_wavelet,
    discrete_wavelets,
    inner_product_matrix,
    invert_inner_product,
    ndwt,
)
