"""Learn zone-level routing preferences from historical delivery routes."""

from .core import RoutingInstance, Stop, Tour, ZoneIndex, zone_sequence_of
from .data import Corpus, SplitSpec, SynthConfig, generate_synthetic, load_corpus, save_corpus, stratified_split
from .exceptions import (
    CorpusFormatError,
    InvalidInputError,
    MissingLabelError,
    SizeExceededError,
    ZoneRouteError,
)
from .perceptron import StructuredPerceptron, TrainConfig, TrainTrace, train
from .pipeline import RoutePrediction, TwoStageRouter
from .scoring import ScoreReport, erp, score, sequence_deviation, zone_score
from .stops import PenaltyCategory, penalty_cost, violation_report
from .transitions import TransitionEstimator, TransitionMatrix
from .tsp import SolveBudget, solve, solve_anytime, solve_exact
from .zones import ZoneOrdering, ZoneProblem, order_zones

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "CorpusFormatError",
    "InvalidInputError",
    "MissingLabelError",
    "PenaltyCategory",
    "RoutePrediction",
    "RoutingInstance",
    "ScoreReport",
    "SizeExceededError",
    "SolveBudget",
    "SplitSpec",
    "Stop",
    "StructuredPerceptron",
    "SynthConfig",
    "Tour",
    "TrainConfig",
    "TrainTrace",
    "TransitionEstimator",
    "TransitionMatrix",
    "TwoStageRouter",
    "ZoneIndex",
    "ZoneOrdering",
    "ZoneProblem",
    "ZoneRouteError",
    "erp",
    "generate_synthetic",
    "load_corpus",
    "order_zones",
    "penalty_cost",
    "save_corpus",
    "score",
    "sequence_deviation",
    "solve",
    "solve_anytime",
    "solve_exact",
    "stratified_split",
    "train",
    "violation_report",
    "zone_score",
    "zone_sequence_of",
]
