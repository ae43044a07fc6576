"""Self-contained reference twin of the threatlight engine.

Pure standard library, no numpy: every stage (log parsing, HTTP and
flow features, network inference, threat scoring) is reimplemented
from the file formats and wire contracts alone. Interchange happens
only through files (model container, ruleset, calculator config) and
the line-in, dicts-out engine protocol, which makes this package an
independent check on the production implementation rather than a
re-export of it.
"""

from .engine import OracleEngine, SchemaMismatch, assemble, schema_digest
from .flowstat import FLOW_FEATURE_NAMES, FlowState, FlowTable, finalize, flow_key
from .logparse import HttpRecord, MalformedLine, PacketRecord, parse_line
from .netio import ModelFormatError, Network, forward, load_network, sigmoid
from .score import (
    Calculator,
    CalculatorConfig,
    load_calculator_config,
    map_band,
    subnet_key,
)
from .webfeat import (
    HTTP_FEATURE_NAMES,
    Ruleset,
    extract_features,
    load_ruleset,
    normalize_decode,
)

__version__ = "0.1.0"

__all__ = [
    "OracleEngine",
    "SchemaMismatch",
    "assemble",
    "schema_digest",
    "FLOW_FEATURE_NAMES",
    "FlowState",
    "FlowTable",
    "finalize",
    "flow_key",
    "HttpRecord",
    "MalformedLine",
    "PacketRecord",
    "parse_line",
    "ModelFormatError",
    "Network",
    "forward",
    "load_network",
    "sigmoid",
    "Calculator",
    "CalculatorConfig",
    "load_calculator_config",
    "map_band",
    "subnet_key",
    "HTTP_FEATURE_NAMES",
    "Ruleset",
    "extract_features",
    "load_ruleset",
    "normalize_decode",
]
