"""Rich component analysis: learning one latent component from multiple views.

Observed views are linear mixtures of independent, possibly high-dimensional
latent components.  Cross-cumulants between the views isolate the cumulants
of each component, and standard moment-based learners then run on the
isolated cumulants.
"""

from .approx_gradient import ApproxGDConfig, approx_gd, chebyshev_sigmoid, contrastive_logistic
from .contrastive import (
    ConditioningReport,
    ContrastiveEntrySource,
    ContrastiveExtraction,
    estimate_A,
    estimate_A_from_cumulants,
    extract_cumulants,
    extract_cumulants_sum_identity,
    rca_extract,
)
from .cumulants import (
    ComponentCumulants,
    SampleEntrySource,
    cross_cumulant,
    cumulant,
    debiased_projected_moment,
    moment_entries,
    projected_moment,
)
from .errors import (
    AlignmentError,
    ConfigError,
    ConvergenceError,
    DegenerateComponentError,
    DegenerateMapError,
    DivergenceError,
    InvalidInputError,
    InvalidOrderError,
    NumericError,
    RankError,
    RCAError,
    ShapeError,
)
from .experiments import ExperimentConfig, RunReport, cca_baseline, generate, run, sweep
from .general import SetSystem, check_distinguishable, compute_cumulants, find_linear
from .ising import IsingSpec, contrastive_ising, ising_composite_gradient
from .learners import (
    GmmResult,
    PcaResult,
    RegressionResult,
    contrastive_gmm,
    contrastive_lsr,
    contrastive_pca,
)
from .tensor_core import kronecker, multilinear_apply, pinv, unfold

__version__ = "0.1.0"
