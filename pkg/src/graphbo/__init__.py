"""Bayesian optimization over finite sets of candidate graphs.

The surrogate is a Gaussian process whose kernel combines a normalized
deep graphlet kernel on the raw graphs with per-group ARD
squared-exponential kernels on explicit features; the weights of the
combination are learned alongside the other hyperparameters by maximum
marginal likelihood. Bundled benchmarks cover a synthetic non-linear
objective, connectivity robustness, and road-network design with a
Frank-Wolfe equilibrium evaluator.
"""

from .baselines import power_set_encoding
from .bo import (
    GBOConfig,
    RunRecord,
    expected_improvement,
    run_baseline,
    run_gbo,
    select_next,
)
from .embeddings import EmbeddingModel, train_embeddings
from .exceptions import (
    DegenerateGraphError,
    GraphBOError,
    GraphParseError,
    IllConditionedError,
    InfeasibleNetworkError,
    TNTPParseError,
)
from .features import (
    FeatureGroups,
    GraphFeatureExtractor,
    MinMaxNormalizer,
    extract,
    feature_matrix,
    minmax_normalize,
)
from .gp import GraphGP, Posterior, log_marginal_likelihood, posterior
from .graphlets import (
    GraphletProfiler,
    build_corpus,
    canonical_form,
    sample_graphlets,
)
from .graphs import (
    CandidateSet,
    Graph,
    SynthSpec,
    generate_ba,
    generate_er,
    read_graphs,
    synth_dataset,
    write_graphs,
)
from .hyperopt import NelderMeadOptions, fit_params, nelder_mead
from .kernels import (
    DeepGraphletKernel,
    KernelCache,
    KernelParams,
    KernelWorkspace,
    base_graphlet_kernel,
    combined_kernel,
    deep_graphlet_kernel,
    normalize_kernel,
    seard,
)
from .objectives import activity, hartmann4, hartmann_objective, robustness
from .traffic import (
    TrafficNetwork,
    bpr_time,
    build_candidates,
    frank_wolfe,
    parse_tntp,
    select_projects,
    utndp_objective,
)

__version__ = "0.1.0"
