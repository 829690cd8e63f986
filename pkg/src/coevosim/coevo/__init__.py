from .actions import ACTION_ORDER, ActionLabel
from .predictor import (
    Context,
    ObservationRecord,
    PredictionRecord,
    Predictor,
    tally_counts,
)
from .evaluation import (
    CandidateEvaluation,
    CoevoError,
    DisabledError,
    DivergenceReport,
    EmptyHoldoutError,
    EmptyWindowError,
    InsufficientDataError,
    LearningConfig,
    LearningConfigError,
    NotAuthorizedError,
    PredictorRegistry,
    evaluate_divergence,
    pre_evaluate,
    split_window,
    train_candidate,
)
from .messaging import (
    MalformedPayloadError,
    Message,
    MessageKind,
    MessageQueue,
    MessagingError,
    Preference,
    UnknownReceiverError,
    validate_message,
)
from .monitor import GuardAction, ProgressReport, StationProgress, novelty_guard
