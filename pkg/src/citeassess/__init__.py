"""Candidate/commission citation networks from open bibliographic data, and an
exhaustive metric-subset classifier sweep over them."""

from .citegraph import (
    METRIC_NAMES,
    CitationNetwork,
    MetricVector,
    NodeClass,
    PublicationKind,
    build_network,
    compute_metrics,
    kind_of,
)
from .mlharness import (
    Algorithm,
    EvalResult,
    FeatureMatrix,
    SignificanceReport,
    SubsetMask,
    SweepPlan,
    Verdict,
    enumerate_subsets,
    oversample,
    significance,
    stratified_folds,
    sweep,
    train_eval,
    weighted_f1,
)
from .resolver import (
    CvEntry,
    Dossier,
    Label,
    Method,
    Person,
    Resolver,
    Section,
    classify_section,
    load_roster,
)
from .store import CorpusStore, IngestStats, KeyKind, Publication, SourceKind, normalize_title

__version__ = "0.1.0"
