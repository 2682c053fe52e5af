"""Architecture configuration and the flat parameter vector layout.

All learned parameters live in one flat vector.  The layout is frozen:
controller weights and bias, then the memory interface blocks in the
order write vectors, previous write vectors, previous erase vectors,
previous write gate, read modes, write free gate, read free gate, and
finally the bus weights and bias.  Matrices are stored row-major, each
immediately followed by its bias.  Disabled blocks (free gates off,
previous-location update off) are omitted entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ArchitectureConfig:
    controller_width: int = 6  # L_C
    control_word: int = 4  # C
    data_word: int = 1  # D
    bus_width: int = 2  # L_B, number of ALU operations
    num_write_heads: int = 1
    num_read_heads: int = 1
    ctrl_in_width: int = 4  # width of the input module's controller signal
    mem_in_width: int = 4  # width of the input module's memory signal
    bus_in_width: int = 4  # width of the input module's bus signal
    alu_ctrl_width: int = 0  # width of the ALU's control output
    feedback_bus: bool = False
    feedback_alu: bool = False
    free_gates: bool = False
    ancestry: bool = True
    prev_update: bool = True

    def __post_init__(self):
        if min(self.controller_width, self.control_word, self.data_word,
               self.bus_width, self.num_write_heads, self.num_read_heads) < 1:
            raise ValueError("all architecture dimensions must be >= 1")

    @property
    def num_modes(self) -> int:
        per_write = 4 if self.ancestry else 2
        return self.num_read_heads + per_write * self.num_write_heads

    @property
    def controller_in(self) -> int:
        width = self.ctrl_in_width
        if self.feedback_bus:
            width += self.bus_width
        if self.feedback_alu:
            width += self.alu_ctrl_width
        width += self.num_read_heads * self.control_word
        return width

    @property
    def interface_in(self) -> int:
        return self.mem_in_width + self.controller_width

    @property
    def bus_in(self) -> int:
        return self.bus_in_width + self.controller_width + self.num_read_heads * self.control_word


def ablated(config: ArchitectureConfig, *, ancestry=None, prev_update=None) -> ArchitectureConfig:
    """Derive an ablation config; removing the previous-location update
    compensates with a second write head."""
    kwargs = {}
    if ancestry is not None:
        kwargs["ancestry"] = ancestry
    if prev_update is not None:
        kwargs["prev_update"] = prev_update
        if not prev_update:
            kwargs["num_write_heads"] = 2
    from dataclasses import replace

    return replace(config, **kwargs)


def _blocks(config: ArchitectureConfig):
    """Yield (name, rows, cols) for every parameter matrix in layout order.

    The bias of each matrix is implicit: ``rows`` extra values follow the
    ``rows * cols`` matrix entries.
    """
    c, lc = config.control_word, config.controller_width
    hw, hr = config.num_write_heads, config.num_read_heads
    xm = config.interface_in
    yield "controller", lc, config.controller_in
    yield "write_vec", hw * c, xm
    if config.prev_update:
        yield "prev_write_vec", hr * c, xm
        yield "prev_erase_vec", hr * c, xm
        yield "prev_gate", hr, xm
    yield "read_mode", hr * config.num_modes, xm
    if config.free_gates:
        yield "free_write", hw, xm
        yield "free_read", hr, xm
    yield "bus", config.bus_width, config.bus_in


def genome_size(config: ArchitectureConfig) -> int:
    """Total number of trainable parameters."""
    return sum(rows * cols + rows for _, rows, cols in _blocks(config))


def unpack_params(theta: np.ndarray, config: ArchitectureConfig) -> dict:
    """Split a flat vector into named (W, b) pairs per the frozen layout."""
    if theta.shape != (genome_size(config),):
        raise ValueError(
            f"genome length {theta.shape} does not match config ({genome_size(config)})")
    params = {}
    offset = 0
    for name, rows, cols in _blocks(config):
        w = theta[offset:offset + rows * cols].reshape(rows, cols)
        offset += rows * cols
        b = theta[offset:offset + rows]
        offset += rows
        params[name] = (w, b)
    return params


def pack_params(params: dict, config: ArchitectureConfig) -> np.ndarray:
    """Inverse of :func:`unpack_params`; bit-exact roundtrip."""
    parts = []
    for name, rows, cols in _blocks(config):
        w, b = params[name]
        if w.shape != (rows, cols) or b.shape != (rows,):
            raise ValueError(f"block {name!r} has wrong shape")
        parts.append(np.asarray(w).reshape(-1))
        parts.append(np.asarray(b))
    return np.concatenate(parts)


def init_genome(config: ArchitectureConfig, rng: np.random.Generator,
                scale: float = 0.1) -> np.ndarray:
    """Fresh parameter vector, Gaussian at the search-distribution scale."""
    return rng.normal(0.0, scale, genome_size(config))
