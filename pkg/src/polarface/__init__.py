"""Polar-frequency face recognition.

Images are resampled onto a polar grid and described by the moduli of
polar-frequency spectra, either a Fourier-Bessel transform or a polar
sampling of the 2-D DFT magnitude plane.  Recognition happens in a
dissimilarity space over the gallery, with a pseudoinverse Fisher
linear discriminant per subject and optional max-rule fusion of the
two spectra.
"""

from .bessel import BesselRootTable, bessel_j, bessel_roots, build_root_table
from .classifier import (
    ClassScores,
    DissimilarityMatrix,
    TrainedModel,
    classify,
    dissimilarity_matrix,
    embed_probe,
    fuse_max,
    fused_posterior,
    load_model,
    nearest_neighbor_single_feature,
    save_model,
    train_pfld,
)
from .config import RunConfig, config_hash, load_run_config, resolved_text
from .dataset import (
    Dataset,
    DatasetEntry,
    NormalizationConfig,
    load_dataset_dir,
    load_pgm,
    normalize_face,
    save_pgm,
)
from .errors import ConfigError, DatasetError, DomainError, ParseError, PolarFaceError
from .evaluate import (
    CMCCurve,
    EERResult,
    EvalReport,
    ROCCurve,
    SplitSpec,
    cmc,
    equal_error_rate,
    fit_pfld,
    fused_predictor,
    learning_curve,
    per_feature_error_rates,
    pfld_predictor,
    random_split,
    run_error_experiment,
    score_matrix,
    subject_count_curve,
    verification_pairs,
    verification_roc,
)
from .features import (
    DFTConfig,
    FBSpectrum,
    FBTConfig,
    FeatureVector,
    dft_feature_frequencies,
    dft_features,
    dft_error_map,
    dft_magnitude,
    extract_dft,
    extract_fbt,
    fbt,
    fbt_error_map,
    fbt_features,
    inverse_fbt,
    read_feature_file,
    spectrum_from_features,
    synth_angular,
    synth_mix,
    synth_radial,
    write_feature_file,
)
from .polar import PolarGrid, bilinear_sample, to_polar

__version__ = "0.1.0"
