"""Simulator and epistemic-temporal model checker for blockchain-style ledgers."""

from .model import (
    Event,
    GlobalState,
    Interpretation,
    InterpretedSystem,
    Ledger,
    LocalState,
    Point,
    Run,
    Transaction,
    indistinguishable,
    is_prefix,
    is_t_prefix,
    knowledge_set,
)

__version__ = "0.1.0"
