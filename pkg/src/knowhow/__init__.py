"""Community know-how as linked data: an RDF toolkit, a query subset,
HTTP endpoints, federation, and execution tracking."""

from .rdf import (
    BlankNode,
    Graph,
    Iri,
    Literal,
    Triple,
    TurtleParseError,
    parse_turtle,
    serialize_turtle,
)
from .sparql import (
    BindingSet,
    ContainsFilter,
    Query,
    QueryParseError,
    TriplePattern,
    Variable,
    evaluate,
    keyword_search,
    parse_query,
    serialize_query,
)
from .extract import (
    ArticleDoc,
    ArticleError,
    MethodSection,
    MintingPolicy,
    Step,
    article_to_graph,
    mint_iri,
    parse_article_html,
    parse_article_json,
)
from .store import StoreError, StoreHandle
from .server import EndpointConfig, KnowHowEndpoint
from .federation import (
    EndpointDescriptor,
    ExploreResult,
    FederatedResult,
    FederationError,
    explore,
    federated_query,
    federated_search,
    incomplete_steps,
    load_federation,
    publish_turtle,
)
from .execution import (
    ExecutionView,
    ReadyEvent,
    RequiresCycleError,
    UnknownExecutionError,
    Watcher,
    assert_outcome,
    compute_view,
    derive_view,
    start_execution,
    watch,
)

__version__ = "0.1.0"

__all__ = [
    "ArticleDoc",
    "ArticleError",
    "BindingSet",
    "BlankNode",
    "ContainsFilter",
    "EndpointConfig",
    "EndpointDescriptor",
    "ExecutionView",
    "ExploreResult",
    "FederatedResult",
    "FederationError",
    "Graph",
    "Iri",
    "KnowHowEndpoint",
    "Literal",
    "MethodSection",
    "MintingPolicy",
    "Query",
    "QueryParseError",
    "ReadyEvent",
    "RequiresCycleError",
    "Step",
    "StoreError",
    "StoreHandle",
    "Triple",
    "TriplePattern",
    "TurtleParseError",
    "UnknownExecutionError",
    "Variable",
    "Watcher",
    "article_to_graph",
    "assert_outcome",
    "compute_view",
    "derive_view",
    "evaluate",
    "explore",
    "federated_query",
    "federated_search",
    "incomplete_steps",
    "keyword_search",
    "load_federation",
    "mint_iri",
    "parse_article_html",
    "parse_article_json",
    "parse_query",
    "parse_turtle",
    "publish_turtle",
    "serialize_query",
    "serialize_turtle",
    "start_execution",
    "watch",
]
