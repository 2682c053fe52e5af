"""Per-step wiring of the full machine and the episode loop.

One computational step runs: input module -> controller -> memory
interface -> previous-location update -> write -> read -> bus -> ALU,
with the ALU output fed back to the input module on the next step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from algomem.genome import ArchitectureConfig
from algomem.memory import ExternalMemory, MemoryFull
from algomem.network import Network


@dataclass
class EpisodeTrace:
    """Recorded outputs of one episode, one entry per executed step."""

    reads: list = field(default_factory=list)  # data readout per step
    ops: list = field(default_factory=list)  # chosen bus operation index
    raw_bus: list = field(default_factory=list)  # bus pre-activation
    outputs: list = field(default_factory=list)  # ALU data output
    head_log: list = field(default_factory=list)  # (write locs, read locs, modes, frees)
    halted: bool = False
    memory_full: bool = False

    def __len__(self):
        return len(self.ops)


class Machine:
    """Stepwise executor binding a network to a data module."""

    def __init__(self, net: Network, module, n_locations: int):
        cfg = net.config
        # the data module only touches the signal widths; head counts and
        # memory-mode ablations may differ (ablation studies)
        widths = ("data_word", "bus_width", "ctrl_in_width", "mem_in_width",
                  "bus_in_width", "alu_ctrl_width")
        if any(getattr(module.config, w) != getattr(cfg, w) for w in widths):
            raise ValueError("data module signal widths do not match network")
        self.net = net
        self.cfg = cfg
        self.module = module
        self.memory = ExternalMemory(
            n_locations, cfg.control_word, cfg.data_word,
            num_write_heads=cfg.num_write_heads,
            num_read_heads=cfg.num_read_heads,
            ancestry=cfg.ancestry,
        )
        hr, c = cfg.num_read_heads, cfg.control_word
        self.prev_mem_ctrl = np.zeros(hr * c)
        self.prev_bus = np.zeros(cfg.bus_width)
        self.prev_alu = np.zeros(cfg.alu_ctrl_width)
        self.d_out = np.zeros(cfg.data_word)

    def step(self):
        """Execute one step; returns None when the input module halts."""
        cfg, net, mem = self.cfg, self.net, self.memory
        inp = self.module.input_step(self.d_out)
        if inp is None:
            return None
        d_i, c_ctrl, c_mem, c_bus = inp

        parts = [c_ctrl]
        if cfg.feedback_bus:
            parts.append(self.prev_bus)
        if cfg.feedback_alu:
            parts.append(self.prev_alu)
        parts.append(self.prev_mem_ctrl)
        cc = net.controller(np.concatenate(parts))

        signals = net.interface(np.concatenate([c_mem, cc]))
        if cfg.prev_update:
            mem.update_previous(signals)
        written = mem.write_step(signals, d_i)
        fallback = written[0]
        locations = [
            mem.resolve_read(j, int(signals.read_modes[j]), fallback)
            for j in range(cfg.num_read_heads)
        ]
        c_m, d_m = mem.read_step(locations, signals.free_read)

        raw, op = net.bus(np.concatenate([c_bus, cc, c_m]))
        bus_onehot = np.zeros(cfg.bus_width)
        bus_onehot[op] = 1.0
        d_out, c_a = self.module.alu(d_m, op)

        self.prev_mem_ctrl = c_m
        self.prev_bus = bus_onehot
        self.prev_alu = np.asarray(c_a, dtype=np.float64)
        self.d_out = d_out
        return d_m, op, raw, d_out, (written, locations, signals)


def run_episode(net: Network, module, t_max: int, record_heads: bool = False) -> EpisodeTrace:
    """Run up to ``t_max`` steps, recording every step's outputs."""
    trace = EpisodeTrace()
    machine = Machine(net, module, n_locations=net.config.num_write_heads * t_max + 2)
    for _ in range(t_max):
        try:
            out = machine.step()
        except MemoryFull:
            trace.memory_full = True
            break
        if out is None:
            trace.halted = True
            break
        d_m, op, raw, d_out, (written, locations, signals) = out
        trace.reads.append(d_m)
        trace.ops.append(op)
        trace.raw_bus.append(raw)
        trace.outputs.append(d_out)
        if record_heads:
            trace.head_log.append({
                "write": list(written),
                "read": [int(l) for l in locations],
                "modes": [int(m) for m in signals.read_modes],
                "free_write": [int(f) for f in signals.free_write],
                "free_read": [int(f) for f in signals.free_read],
            })
    return trace


def margin_penalty(first: float, second: float, m_max: float) -> float:
    """Confidence factor for a correct operation choice.

    Ratio-based separation of the winning raw bus value over the runner
    up, clipped to [0, 1].  Degenerate signs: a non-positive winner gives
    no credit, a non-positive runner up under a positive winner gives
    full credit.
    """
    if first <= 0.0:
        return 0.0
    if second <= 0.0:
        return 1.0
    v = (first / second - 1.0) / m_max
    return 0.0 if v < 0.0 else (1.0 if v > 1.0 else v)


def top_two(raw: np.ndarray):
    v = sorted(raw.tolist())
    return v[-1], v[-2]


def score_episode(net: Network, module, oracle_steps, t_max: int, m_max: float):
    """Step-accurate fitness of one sample.

    Each step contributes two separate rewards: 1 for an exact data
    readout and ``margin`` for a correct operation choice.  The sum runs
    up to and including the first faulty step (partial credit for the
    signal that was still right), then normalizes by ``t_max``.
    Returns (fitness, index of the first faulty step or 0 if none).
    """
    machine = Machine(net, module, n_locations=net.config.num_write_heads * t_max + 2)
    total = 0.0
    t_e = 0
    for k, (expected_read, expected_op) in enumerate(oracle_steps, 1):
        if k > t_max:
            break
        try:
            out = machine.step()
        except MemoryFull:
            break
        if out is None:
            break
        d_m, op, raw, _, _ = out
        data_ok = bool((d_m == np.asarray(expected_read)).all())
        op_ok = op == expected_op
        if data_ok:
            total += 1.0
        if op_ok:
            c1, c2 = top_two(raw)
            total += margin_penalty(c1, c2, m_max)
        if not (data_ok and op_ok):
            t_e = k
            break
    return total / t_max, t_e
