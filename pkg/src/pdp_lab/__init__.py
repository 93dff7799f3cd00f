"""Monte Carlo laboratory for two-parameter Poisson-Dirichlet random measures."""

__version__ = "0.1.0"

from .errors import ResourceLimitError
from .measures import (
    AtomicMeasure,
    CellPartition,
    Constant,
    FiniteSupport,
    Indicator,
    Polynomial,
    StdNormal,
    Uniform01,
    cell_probs,
    empirical_measure,
    integrate,
    integrate_product,
    ks_one_sample_normal,
    ks_two_sample,
    mix,
    seminorm,
    variance_under,
)
from .py_sampler import (
    DEFAULT_TAIL_EPS,
    FixedK,
    PYParams,
    STICK_CAP,
    TailMass,
    compose_identity_sample,
    dirichlet_decomposition_sample,
    expected_stick_count,
    moment_product,
    pd_variance,
    stick_breaking_sample,
)
from .posterior import (
    PosteriorDraw,
    bvm_replicates,
    concentration_statistic,
    posterior_mean,
    posterior_mean_function,
    posterior_sample,
)
from .records import GaussianLimit, ReplicateSet, TestReport
from .rng import (
    RandomStream,
    SeedSpec,
    draw_beta,
    draw_categorical,
    draw_dirichlet,
    draw_gamma,
    make_stream,
    substream,
)
from .urn import (
    PartitionSummary,
    ftilde,
    predictive_weights,
    summarize,
    urn_draw,
    urn_sequence,
)
from .asymptotics import (
    centered_replicates_dirichlet,
    centered_replicates_pd,
    consistency_curve,
    gaussian_limit,
    normality_test,
    prior_concentration_check,
)
