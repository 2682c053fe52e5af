"""Compiled scoring path.

Fitness only accumulates while the machine still follows the expected
trace, so every signal the data module produces along that trajectory
(inputs, bus feedback, ALU feedback) is a pure function of the sample
and can be tabulated once.  The remaining work per evaluation - the
three linear layers and the memory bookkeeping - is a single numba
kernel over flat arrays, bit-compatible with the reference episode loop
in :mod:`algomem.machine` (manual dot products, same tie breaking, same
degenerate margin cases).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from algomem.memory import (MODE_BACK, MODE_CHILD, MODE_FWD, MODE_HALT,
                            MODE_PARENT, mode_layout)

_FAMILY_CODE = {MODE_HALT: 0, MODE_BACK: 1, MODE_FWD: 2,
                MODE_PARENT: 3, MODE_CHILD: 4}


@dataclass
class ScoreTable:
    """Per-sample tabulation of everything outside the learned genome."""

    ctrl_prefix: np.ndarray  # (T, controller_in - h_r * C)
    mem_prefix: np.ndarray  # (T, mem_in_width)
    bus_prefix: np.ndarray  # (T, bus_in_width)
    data_in: np.ndarray  # (T, D)
    exp_reads: np.ndarray  # (T, h_r * D)
    exp_ops: np.ndarray  # (T,)
    mode_family: np.ndarray  # (num_modes,)
    mode_head: np.ndarray  # (num_modes,)
    t_max: int

    @classmethod
    def build(cls, task, sample, config=None):
        cfg = config or task.config(sample.variant)
        module = task.make_module(sample)
        d_out = np.zeros(cfg.data_word)
        prev_bus = np.zeros(cfg.bus_width)
        prev_alu = np.zeros(cfg.alu_ctrl_width)
        ctrl_rows, mem_rows, bus_rows, data_rows = [], [], [], []
        reads, ops = [], []
        for expected_read, op in task.oracle_steps(sample):
            inp = module.input_step(d_out)
            d_i, c_ctrl, c_mem, c_bus = inp
            parts = [c_ctrl]
            if cfg.feedback_bus:
                parts.append(prev_bus)
            if cfg.feedback_alu:
                parts.append(prev_alu)
            ctrl_rows.append(np.concatenate(parts))
            mem_rows.append(np.asarray(c_mem, dtype=np.float64))
            bus_rows.append(np.asarray(c_bus, dtype=np.float64))
            data_rows.append(np.asarray(d_i, dtype=np.float64))
            expected_read = np.asarray(expected_read, dtype=np.float64)
            d_out, c_a = module.alu(expected_read, int(op))
            prev_bus = np.zeros(cfg.bus_width)
            prev_bus[int(op)] = 1.0
            prev_alu = np.asarray(c_a, dtype=np.float64)
            reads.append(expected_read)
            ops.append(int(op))
        layout = mode_layout(cfg.num_read_heads, cfg.num_write_heads, cfg.ancestry)
        return cls(
            ctrl_prefix=np.array(ctrl_rows),
            mem_prefix=np.array(mem_rows),
            bus_prefix=np.array(bus_rows),
            data_in=np.array(data_rows),
            exp_reads=np.array(reads),
            exp_ops=np.array(ops, dtype=np.int64),
            mode_family=np.array([_FAMILY_CODE[f] for f, _ in layout], dtype=np.int64),
            mode_head=np.array([h for _, h in layout], dtype=np.int64),
            t_max=sample.t_max,
        )


def score_table(net, table: ScoreTable, m_max: float) -> float:
    """Fitness of one genome against a tabulated sample."""
    cfg = net.config
    total = _kernel(
        net.w_c, net.b_c, net._w_iface, net._b_iface, net.w_b, net.b_b,
        table.ctrl_prefix, table.mem_prefix, table.bus_prefix,
        table.data_in, table.exp_reads, table.exp_ops,
        table.mode_family, table.mode_head,
        cfg.num_write_heads, cfg.num_read_heads,
        cfg.control_word, cfg.data_word,
        cfg.num_write_heads * table.t_max + 2,
        cfg.prev_update, cfg.free_gates, m_max,
    )
    return total / table.t_max


@njit(cache=True)
def _kernel(w_c, b_c, w_m, b_m, w_b, b_b,
            ctrl_prefix, mem_prefix, bus_prefix, data_in, exp_reads, exp_ops,
            mode_family, mode_head, hw, hr, c, d, n_loc,
            prev_update, free_gates, m_max):
    T = exp_ops.shape[0]
    lc = w_c.shape[0]
    lb = w_b.shape[0]
    num_modes = mode_family.shape[0]
    pw = ctrl_prefix.shape[1]
    mw = mem_prefix.shape[1]
    bw = bus_prefix.shape[1]

    # interface row offsets, mirroring the fused layout in Network
    o_write = 0
    if prev_update:
        o_pwrite = hw * c
        o_perase = o_pwrite + hr * c
        o_pgate = o_perase + hr * c
        o_mode = o_pgate + hr
    else:
        o_pwrite = o_perase = o_pgate = 0
        o_mode = hw * c
    o_fwrite = o_mode + hr * num_modes
    o_fread = o_fwrite + hw

    mc = np.zeros((n_loc, c))
    md = np.zeros((n_loc, d))
    usage = np.zeros(n_loc, np.bool_)
    succ = np.full((hw, n_loc), -1, np.int64)
    pred = np.full((hw, n_loc), -1, np.int64)
    parent = np.full((hw, hr, n_loc), -1, np.int64)
    history = np.full(n_loc, -1, np.int64)
    prev_read = np.full(hr, -1, np.int64)
    prev_write = np.full(hw, -1, np.int64)
    written = np.empty(hw, np.int64)
    locs = np.empty(hr, np.int64)
    cc = np.empty(lc)
    raw_m = np.empty(w_m.shape[0])
    raw_b = np.empty(lb)
    prev_cm = np.zeros(hr * c)
    used_count = 0
    step_no = 0
    total = 0.0

    for t in range(T):
        # controller: tanh of prefix ++ previous control readout
        for i in range(lc):
            acc = b_c[i]
            for k in range(pw):
                acc += w_c[i, k] * ctrl_prefix[t, k]
            for k in range(hr * c):
                acc += w_c[i, pw + k] * prev_cm[k]
            cc[i] = np.tanh(acc)
        # interface: fused linear bank over mem prefix ++ controller
        for r in range(raw_m.shape[0]):
            acc = b_m[r]
            for k in range(mw):
                acc += w_m[r, k] * mem_prefix[t, k]
            for k in range(lc):
                acc += w_m[r, mw + k] * cc[k]
            raw_m[r] = acc

        # previous-location update
        if prev_update:
            for j in range(hr):
                loc = prev_read[j]
                if raw_m[o_pgate + j] >= 0.0 and loc >= 0 and usage[loc]:
                    for k in range(c):
                        z = raw_m[o_perase + j * c + k]
                        if z > 60.0:
                            z = 60.0
                        elif z < -60.0:
                            z = -60.0
                        erase = 1.0 / (1.0 + np.exp(-z))
                        mc[loc, k] = (mc[loc, k] * (1.0 - erase)
                                      + raw_m[o_pwrite + j * c + k])

        # write step
        step_no += 1
        for i in range(hw):
            loc = -1
            for k in range(n_loc):
                if not usage[k]:
                    loc = k
                    break
            if loc < 0:
                return total  # memory full: episode ends, no more credit
            scratch = free_gates and raw_m[o_fwrite + i] >= 0.0
            for k in range(c):
                mc[loc, k] = raw_m[o_write + i * c + k]
            for k in range(d):
                md[loc, k] = data_in[t, k]
            written[i] = loc
            if scratch:
                continue
            usage[loc] = True
            used_count += 1
            p = prev_write[i]
            if p >= 0:
                succ[i, p] = loc
                pred[i, loc] = p
            for j in range(hr):
                r0 = prev_read[j]
                if r0 >= 0 and usage[r0]:
                    parent[i, j, loc] = r0
            history[loc] = step_no
            prev_write[i] = loc

        # read heads: pick mode (arg-max, lowest index wins) and resolve
        for j in range(hr):
            best = 0
            base = o_mode + j * num_modes
            for m in range(1, num_modes):
                if raw_m[base + m] > raw_m[base + best]:
                    best = m
            fam = mode_family[best]
            idx = mode_head[best]
            if fam == 0:
                start = prev_read[idx]
            else:
                start = prev_read[j]
            if start < 0:
                locs[j] = 0 if used_count > 0 else written[0]
                continue
            if fam == 0:
                locs[j] = start
                continue
            if fam == 1:
                link = pred[idx, start]
            elif fam == 2:
                link = succ[idx, start]
            elif fam == 3:
                link = parent[idx, j, start]
            else:  # newest child; ties break toward the lower index
                link = -1
                best_h = np.int64(-1)
                for k in range(n_loc):
                    if parent[idx, j, k] == start and history[k] > best_h:
                        best_h = history[k]
                        link = k
                if link < 0:
                    locs[j] = start
                    continue
            locs[j] = link if link >= 0 else start

        # read both matrices, advance heads, then apply read free gates
        data_ok = True
        for j in range(hr):
            loc = locs[j]
            for k in range(c):
                prev_cm[j * c + k] = mc[loc, k]
            for k in range(d):
                if md[loc, k] != exp_reads[t, j * d + k]:
                    data_ok = False
        for j in range(hr):
            prev_read[j] = locs[j]
        if free_gates:
            for j in range(hr):
                if raw_m[o_fread + j] >= 0.0:
                    loc = locs[j]
                    if not usage[loc]:
                        continue
                    usage[loc] = False
                    used_count -= 1
                    for i in range(hw):
                        p = pred[i, loc]
                        s = succ[i, loc]
                        if p >= 0:
                            succ[i, p] = s
                        if s >= 0:
                            pred[i, s] = p
                        succ[i, loc] = -1
                        pred[i, loc] = -1
                        if prev_write[i] == loc:
                            prev_write[i] = p if p >= 0 else -1
                        for jj in range(hr):
                            grand = parent[i, jj, loc]
                            for k in range(n_loc):
                                if parent[i, jj, k] == loc:
                                    parent[i, jj, k] = grand
                            parent[i, jj, loc] = -1
                    history[loc] = -1

        # bus: linear layer over bus prefix ++ controller ++ control reads
        for i in range(lb):
            acc = b_b[i]
            for k in range(bw):
                acc += w_b[i, k] * bus_prefix[t, k]
            for k in range(lc):
                acc += w_b[i, bw + k] * cc[k]
            for k in range(hr * c):
                acc += w_b[i, bw + lc + k] * prev_cm[k]
            raw_b[i] = acc
        op = 0
        for i in range(1, lb):
            if raw_b[i] > raw_b[op]:
                op = i
        op_ok = op == exp_ops[t]

        if data_ok:
            total += 1.0
        if op_ok:
            first = raw_b[0]
            second = -np.inf
            for i in range(lb):
                v = raw_b[i]
                if v > first:
                    second = first
                    first = v
                elif i > 0 and v > second:
                    second = v
            if first <= 0.0:
                pass
            elif second <= 0.0:
                total += 1.0
            else:
                margin = (first / second - 1.0) / m_max
                if margin > 1.0:
                    margin = 1.0
                if margin > 0.0:
                    total += margin
        if not (data_ok and op_ok):
            break
    return total
