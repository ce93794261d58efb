from .address import address_of, base58check_decode, base58check_encode, hash160
from .opreturn import ProtocolTable, classify_protocol, extract_metadata, is_op_return
from .rates import RateTable, get_rate
from .tags import TagMap, load_tags

__all__ = [
    "address_of", "base58check_decode", "base58check_encode", "hash160",
    "ProtocolTable", "classify_protocol", "extract_metadata", "is_op_return",
    "RateTable", "get_rate", "TagMap", "load_tags",
]
