"""Decision-tree extraction from feedforward neural networks.

The package turns a trained network into a layered intermediate form,
prunes edges that interval analysis shows can never matter, traces which
neurons carried a concrete decision, and folds the per-input traces into
a hierarchical decision tree that can be exported as JSON or DOT.
"""

from .analysis import (
    AnalysisError,
    DimensionError,
    IntervalBounds,
    Scope,
    decision_label,
    forward,
    propagate_bounds,
    prune_static,
    relevance,
)
from .archive import (
    ArchiveError,
    network_digest,
    parse_interchange,
    serialize_interchange,
)
from .derivation import (
    DecisionPath,
    DerivationError,
    PathEdge,
    SymbolTuple,
    derive_path,
)
from .export import (
    ExportError,
    ExportOptions,
    path_from_doc,
    path_to_doc,
    to_dot,
    to_json,
    tree_from_doc,
    tree_from_json,
    tree_to_doc,
)
from .ir import (
    ActivationKind,
    InputFunction,
    InputSpec,
    IRValidationError,
    LayerKind,
    NetworkIR,
    NeuronId,
    network_from_dense_weights,
    uniform_input_spec,
)
from .keras_import import ModelArchiveError, parse_model_archive
from .merging import DecisionTree, MergeError, merge_paths, tree_lookup
from .pipeline import RunParams, derive_paths, merge_path_docs, tree_for_inputs

__version__ = "1.0.0"

__all__ = [
    "ActivationKind",
    "AnalysisError",
    "ArchiveError",
    "DecisionPath",
    "DecisionTree",
    "DerivationError",
    "DimensionError",
    "ExportError",
    "ExportOptions",
    "InputFunction",
    "InputSpec",
    "IntervalBounds",
    "IRValidationError",
    "LayerKind",
    "MergeError",
    "ModelArchiveError",
    "NetworkIR",
    "NeuronId",
    "PathEdge",
    "RunParams",
    "Scope",
    "SymbolTuple",
    "decision_label",
    "derive_path",
    "derive_paths",
    "forward",
    "merge_path_docs",
    "merge_paths",
    "network_digest",
    "network_from_dense_weights",
    "parse_interchange",
    "parse_model_archive",
    "path_from_doc",
    "path_to_doc",
    "propagate_bounds",
    "prune_static",
    "relevance",
    "serialize_interchange",
    "to_dot",
    "to_json",
    "tree_for_inputs",
    "tree_from_doc",
    "tree_from_json",
    "tree_lookup",
    "tree_to_doc",
    "uniform_input_spec",
    "__version__",
]
