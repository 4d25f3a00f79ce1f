"""Speaker-nulling residual features for synthetic-speech detection."""

from .store import (
    LabeledEmbeddingSet,
    UtteranceRecord,
    load_container,
    read_container,
    read_text_table,
    save_container,
    stratified_split,
    write_container,
    write_text_table,
)
from .features import concat_layers, l2_normalize, pool_mean, prepare_set
from .subspace import (
    CentroidTable,
    SpeakerSubspace,
    fit_speaker_subspace,
    null_project,
    null_project_matrix,
    null_project_set,
    speaker_centroids,
)
from .classifier import (
    LinearClassifier,
    TrainConfig,
    bce_gradient,
    bce_loss,
    predict,
    predict_batch,
    train,
)
from .model_io import load_model, save_model
from .metrics import (
    EvalReport,
    ScoredSet,
    compute_eer,
    confusion_metrics,
    entanglement_report,
    evaluate,
    silhouette_cosine,
)
from .synth import (
    GroundTruth,
    SynthConfig,
    generate,
    run_entanglement_experiment,
    run_speaker_sweep,
)

__version__ = "0.1.0"
