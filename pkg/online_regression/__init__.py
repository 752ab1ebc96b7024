from .commands import cli
from .core import LearnerConfig, ObservedPair, PredictionTriple, decode_learner, learner_names, shortlist
from .datagen import DatasetSpec, enumerate_suite, generate
from .learners import build_learner
from .simulation import aggregate, ingest_measurements, run_matrix, run_session
