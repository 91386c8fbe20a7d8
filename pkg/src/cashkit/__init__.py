"""Cost-asymmetric password hashing: attacker models, defense optimization and a record store."""

__version__ = "0.1.0"

from .adversary import (BestResponse, CashDistribution, cash_best_response,
                        deterministic_best_response, uniform_cash_hash_cost, uniform_success_rate)
from .distribution import PasswordDistribution, ingest_frequency_corpus, ingest_plaintext, validate
from .mechanism import RecordStore, hash_eval
from .optimizer import (DefenseSolution, OptimizerConfig, ThresholdSolution, find_cash_distribution,
                        optimize_for_threshold, server_cost)

__all__ = [
    "BestResponse", "CashDistribution", "DefenseSolution", "OptimizerConfig", "PasswordDistribution",
    "RecordStore", "ThresholdSolution", "cash_best_response", "deterministic_best_response",
    "find_cash_distribution", "hash_eval", "ingest_frequency_corpus", "ingest_plaintext",
    "optimize_for_threshold", "server_cost", "uniform_cash_hash_cost", "uniform_success_rate",
    "validate",
]
