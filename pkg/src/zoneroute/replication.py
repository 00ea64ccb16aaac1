"""End-to-end comparison of the zone and stop models on a synthetic corpus."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import SplitSpec, SynthConfig, generate_synthetic, stratified_split
from .pipeline import TwoStageRouter, distance_zone_orderings, travel_time_routes
from .scoring import score, zone_score
from .tsp import SolveBudget

ZONE_MODELS = ("distance", "markov", "markov_distance", "sop")


@dataclass(frozen=True)
class ReplicationConfig:
    synth: SynthConfig = field(default_factory=lambda: SynthConfig(seed=42, n_instances=250))
    test_fraction: float = 0.2
    split_seed: int = 42
    zone_learning_rate: float = 1e-3
    zone_epochs: int = 2
    stop_learning_rate: float = 1e-5
    stop_epochs: int = 1
    max_iter: int = 30


def run_replication(cfg: ReplicationConfig = ReplicationConfig()) -> dict:
    """Mean test scores of every model; lower is better."""
    start = time.perf_counter()
    corpus = generate_synthetic(cfg.synth)
    train, test = stratified_split(corpus, SplitSpec(cfg.test_fraction, cfg.split_seed))
    budget = SolveBudget(seed=cfg.split_seed, max_iter=cfg.max_iter)
    common = dict(max_iter=cfg.max_iter, seed=cfg.split_seed)

    markov = TwoStageRouter(zone_weights=(0.0, 1.0), train_stages=(), **common).fit(train)
    mixed = TwoStageRouter(zone_weights=(1.0, 1.0), train_stages=(), **common).fit(train)
    zone_sop = TwoStageRouter(zone_weights=(1.0, 1.0), train_stages=("zone",), learning_rate=cfg.zone_learning_rate,
                              epochs=cfg.zone_epochs, **common).fit(train)
    stop_sop = TwoStageRouter(train_stages=("stop",), learning_rate=cfg.stop_learning_rate, epochs=cfg.stop_epochs,
                              **common).fit(train)
    sop = TwoStageRouter(zone_weights=zone_sop.zone_coef_, stop_weights=stop_sop.stop_coef_, train_stages=(),
                         **common).fit(train)
    orderings = {
        "distance": distance_zone_orderings(test, budget),
        "markov": markov.predict_zones(test),
        "markov_distance": mixed.predict_zones(test),
        "sop": sop.predict_zones(test),
    }
    zone = {name: float(np.mean([zone_score(inst, o).score for inst, o in zip(test, orderings[name])]))
            for name in ZONE_MODELS}

    travel = [score(inst, t).score for inst, t in zip(test, travel_time_routes(test, budget))]
    two_stage = [score(inst, p.tour).score for inst, p in zip(test, sop.predict(test))]
    return {
        "config": asdict(cfg),
        "n_train": len(train),
        "n_test": len(test),
        "zone_scores": zone,
        "stop_scores": {"travel_time": float(np.mean(travel)), "two_stage": float(np.mean(two_stage))},
        "zone_weights": zone_sop.zone_coef_.tolist(),
        "stop_weights": stop_sop.stop_coef_.tolist(),
        "zone_updates": list(zone_sop.zone_trace_.updates),
        "stop_updates": list(stop_sop.stop_trace_.updates),
        "seconds": time.perf_counter() - start,
    }
