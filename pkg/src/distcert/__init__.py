"""Simulator and numerical laboratory for distributed quantum state certification."""

__version__ = "0.1.0"

from .linalg import Bipartition, DensityMatrix, partial_trace, schatten_norm, vectorize, devectorize
from .randomness import SeededStream, haar_unitary
from .channels import ChannelBundle, compression_channel
from .protocol import NodeMessage, ProtocolConfig, budget_enforcer
from .certify import Decision, Outcome, Verdict, hs_certify, run_algorithm1

__all__ = [
    "Bipartition",
    "ChannelBundle",
    "Decision",
    "DensityMatrix",
    "NodeMessage",
    "Outcome",
    "ProtocolConfig",
    "SeededStream",
    "Verdict",
    "budget_enforcer",
    "compression_channel",
    "devectorize",
    "haar_unitary",
    "hs_certify",
    "partial_trace",
    "run_algorithm1",
    "schatten_norm",
    "vectorize",
]
