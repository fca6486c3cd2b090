"""Cluster-based deep ensemble learning for 3-class meme emotion
classification: face-encoding clustering, validity-driven model selection,
one-hot cluster fusion, and the evaluation harness."""

from .data import (
    CLASSES,
    ClassPriors,
    ClusterAssignment,
    EmbeddingMatrix,
    FaceEncodingSet,
    SampleRecord,
    SampleTable,
    load_embeddings,
    load_manifest,
)
from .clustering import (
    DistanceMatrix,
    assign_unseen,
    attach_faceless_cluster,
    hierarchical_flat_clusters,
    kmeans_cluster,
    pairwise_distances,
    spectral_cluster,
)
from .validity import (
    SelectionReport,
    SweepResult,
    ValidityScores,
    calinski_harabasz_score,
    comprehensive_indicator,
    davies_bouldin_index,
    elbow_select,
    minmax_normalize,
    select_algorithm,
    select_optimal_threshold,
    silhouette_coefficient,
    sweep_thresholds,
)
from .fusion import (
    FusionModel,
    ModelSpec,
    TrainConfig,
    head_forward,
    logit_adjusted_loss,
    one_hot_encode,
    predict,
    train_model,
)
from .evaluation import (
    ConfusionMatrix,
    MetricsReport,
    accuracy,
    class_prf,
    confusion_matrix,
    kfold_crossval,
    macro_f1,
    metrics_report,
    stratified_split,
)

__version__ = "0.1.0"
