"""Hard-attention coupled-memory machine with evolutionary training.

The package implements a modular machine that splits information into a
control stream and a data stream.  Learned algorithmic modules (controller,
memory interface, operation bus) act on control signals only; task specific
data modules (input, ALU) bridge the two streams.  Training is done with
natural evolution strategies on a step-accurate fitness signal.
"""

from algomem.memory import ExternalMemory, InterfaceSignals, MemoryFull
from algomem.genome import ArchitectureConfig, genome_size, pack_params, unpack_params

__all__ = [
    "ExternalMemory",
    "InterfaceSignals",
    "MemoryFull",
    "ArchitectureConfig",
    "genome_size",
    "pack_params",
    "unpack_params",
]

__version__ = "0.1.0"
