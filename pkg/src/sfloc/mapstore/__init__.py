"""Visual-structure-frame map: records, gated insertion, spatial index and file format."""

from .codec import (
    HEADER,
    MAGIC,
    RECORD_OVERHEAD,
    TRAILER,
    VERSION,
    SizeReport,
    decode_frames,
    deserialize,
    encode_frames,
    encode_map,
    serialize,
    size_report,
)
from .frame import QUANT_LEVELS, QuantizedDepth, VisualStructureFrame, synthetic_payload
from .store import (
    CANDIDATE_RADIUS_M,
    DEFAULT_XI,
    InsertDecision,
    InsertKind,
    InsertPolicy,
    PolicyKind,
    StructureFrameMap,
)

__all__ = [
    "CANDIDATE_RADIUS_M",
    "DEFAULT_XI",
    "HEADER",
    "MAGIC",
    "QUANT_LEVELS",
    "RECORD_OVERHEAD",
    "TRAILER",
    "VERSION",
    "InsertDecision",
    "InsertKind",
    "InsertPolicy",
    "PolicyKind",
    "QuantizedDepth",
    "SizeReport",
    "StructureFrameMap",
    "VisualStructureFrame",
    "decode_frames",
    "deserialize",
    "encode_frames",
    "encode_map",
    "serialize",
    "size_report",
    "synthetic_payload",
]
