"""Decision making with k-nearest-neighbour policies over a small embedded probabilistic language."""

from .distance import (
    bool_distance,
    default_distance,
    l2_norm,
    real_distance,
    tuple_distance,
    tuple_distance_fn,
)
from .elements import (
    Apply,
    Atomic,
    Chain,
    Constant,
    Decision,
    Element,
    Flip,
    Gamma,
    Geometric,
    If,
    Model,
    Normal,
    Select,
    Uniform,
    World,
    evaluate,
)
from .errors import (
    DecisionValueError,
    DegenerateEvidenceError,
    EvaluationError,
    EvidenceError,
    ModelError,
    NotEnumerableError,
    OracleUnavailableError,
    ParameterError,
    UnknownElementError,
    UnknownParentValueError,
)
from .harness import (
    ExperimentSpec,
    LossReport,
    compute_loss,
    run_experiment,
    static_baselines,
    time_index_queries,
)
from .index import LinearIndex, VPTree, build_index, build_linear, build_vptree, query_knn
from .policy import (
    ApproxPolicy,
    ExactPolicy,
    backward_induction,
    collect_samples,
    compile_policy,
    get_decision,
    knn_expected_utility,
    set_policy_exact,
)
from .sampling import (
    ExploreStrategy,
    SamplerConfig,
    exact_enumerate,
    expected_utility_oracle,
    marginal,
    run_sampler,
)
from .store import Sample, SampleStore, dump_store, load_store
from . import zoo

__version__ = "0.1.0"
