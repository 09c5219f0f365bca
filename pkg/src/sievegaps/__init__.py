"""Cycles of gaps among the generators of Z mod N, their driving-term
censuses, and the exact count and ratio recursions across sieve stages."""

from .census import DrivingTermTable, StreamingCensus, census, closure_audit, first_occurrence_stage, max_gap, stream_census, streaming_census_sink
from .dynamics import (
    RatioTable,
    advance_counts,
    advance_to,
    asymptotic_from_table,
    predict_vs_construct,
    ratio_advance,
    ratio_sum,
    stage_ratio_sum,
    total_driving_terms,
)
from .gapcycle import GapCycle, base_cycle, extend, extend_streaming, generators_of, primorial_cycle, validate
from .numtheory import (
    ExactRational,
    FactoredInteger,
    convergence_factor,
    euler_phi,
    factorize,
    hl_ratio,
    primes_up_to,
    primorial,
    radical,
)
from .snapshot import read_snapshot, write_snapshot

__version__ = "0.1.0"
