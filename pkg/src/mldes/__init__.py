"""Multilevel supervisory control synthesis for modular discrete-event systems.

Decomposes a plant/requirement model into a tree of synthesis subproblems
via dependency-matrix clustering with recursive local-bus detection,
synthesizes a maximally permissive supervisor per tree node, and reports the
controlled state-space sizes.
"""

from .clustering import (
    ClusterParams,
    MultilevelClustering,
    cluster,
    clustering_to_json,
    clustering_to_text,
    detect_bus,
    flow_scores,
    load_clustering,
    markov_partition,
    validate_clustering,
)
from .depmatrix import DMM, DSM, build_dmm, dsm_from_dmm, referenced_components
from .errors import (
    ClusteringError,
    ConvergenceError,
    MldesError,
    ModelError,
    PipelineError,
    StateBudgetExceeded,
    TransformError,
)
from .model import (
    And,
    Atom,
    Automaton,
    AutomatonRequirement,
    Event,
    InvariantRequirement,
    ModelSet,
    Not,
    Or,
    Predicate,
    Requirement,
    automaton_from_parts,
    language_equivalent,
    sync_compose,
)
from .modelio import (
    load_model,
    model_from_json,
    model_to_json,
    model_to_text,
    parse_model,
    parse_predicate,
)
from .pipeline import (
    PipelineConfig,
    PipelineSummary,
    config_from_file,
    render_css_profile,
    run_pipeline,
)
from .product import ProductSystem, refine
from .synthesis import (
    GlobalCheck,
    Supervisor,
    TreeSynthesisResult,
    check_controllability,
    check_nonblocking,
    global_check,
    global_equivalence,
    synthesize,
    synthesize_tree,
)
from .transform import (
    SynthesisNode,
    SynthesisTree,
    check_plant_conservation,
    check_requirement_conservation,
    check_valid_synthesis,
    compute_related_clusters,
    transform,
    tree_from_json,
    tree_to_dot,
    tree_to_json,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
