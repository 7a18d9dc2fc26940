"""Invertible Bloom filters with partial extraction, exact failure bounds and
iterative set reconciliation."""
from .counting import (
    failure_bound,
    goodrich_main_term,
    prob_at_least,
    prob_none,
    psi,
    stopping_count,
    theta,
    theta1,
)
from .hashing import FIELD, MODULUS, HashSpec, checksum, cell_index, sample_distinct_elements, set_hash
from .ibf import ExtractOutcome, IncompatibleFilterError, Ibf, extract_all, extraction_rate, new_ibf
from .markov import MarkovConfig, expected_rounds, transition_row
from .protocol import Mode, Outcome, run_iterative, run_single_round, run_variant
from .thresholds import C_TABLE, classify, compute_c_h

__version__ = "0.1.0"
