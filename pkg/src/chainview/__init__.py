"""Bitcoin chain scanning into enriched, queryable views."""
from .model import Block, BlockHeader, Hash256, OutPoint, Transaction, TxInput, TxOutput

__version__ = "0.1.0"

__all__ = ["Block", "BlockHeader", "Hash256", "OutPoint", "Transaction", "TxInput", "TxOutput"]
