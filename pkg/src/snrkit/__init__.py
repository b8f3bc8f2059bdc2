"""snrkit: tight two-moment probability bounds, the extremal distributions
attaining them, an arccos-weighted Bernoulli classifier, and an SNR-based
classification loss with a desk-scale MLP trainer and CLI."""

from .bounds import (
    CdfEnvelope,
    DegenerateThresholdError,
    Interval,
    Moments,
    cdf_envelope,
    inside_interval_lower_bound,
    inside_interval_upper_bound,
    outside_interval_upper_bound,
    tp_bound_from_snr,
    upper_tail_bound,
)
from .extremal import (
    DiscreteDist,
    GenerationError,
    Grid,
    InfeasibleError,
    InsideEvent,
    OracleResult,
    OutsideEvent,
    TailEvent,
    construct_outside_extremal,
    construct_spike,
    construct_tail_extremal,
    moments_of,
    oracle_max_event,
    random_moment_dist,
)
from .parametric import (
    BernoulliProblem,
    LinearClassifier,
    SimProtocol,
    SimResult,
    calibrate_tau,
    fisher_information_bernoulli,
    ml_classifier_weights,
    benchmark_configuration,
    simulate_accuracy,
    snr_classifier_weights,
)
from .snr_loss import (
    EtaState,
    LogitClassStats,
    SnrLossConfig,
    class_conditional_stats,
    eta_update,
    snr_loss_backward,
    snr_pair_loss,
    snr_total_loss,
)
from .data_io import (
    BatchStream,
    Dataset,
    load_idx,
    split_and_batch,
    split_dataset,
    synth_blobs,
    write_idx,
)
from .nn import (
    DivergenceError,
    MetricsRecord,
    MlpModel,
    TrainConfig,
    init_mlp,
    train,
)

__version__ = "0.1.0"
