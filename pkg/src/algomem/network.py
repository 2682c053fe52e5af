"""Forward passes of the three learned modules.

The controller is a single tanh layer, the bus a single linear layer
followed by a hard arg-max, and the memory interface a bank of linear
heads over the shared control input.  For speed the interface heads are
fused into one matrix at construction time; the genome layout itself is
unchanged.
"""

from __future__ import annotations

import numpy as np

from algomem.genome import ArchitectureConfig, genome_size, unpack_params
from algomem.memory import InterfaceSignals


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -60.0, 60.0)))


def heaviside(x):
    # H(0) = 1 by convention; booleans behave as exact 0/1 integers
    return np.asarray(x) >= 0.0


def onehot_argmax(x):
    """One-hot at the first maximum (lowest index wins on ties)."""
    out = np.zeros_like(x)
    out[np.argmax(x)] = 1.0
    return out


class Network:
    """A parameter vector bound to an architecture, ready to run."""

    def __init__(self, theta: np.ndarray, config: ArchitectureConfig):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (genome_size(config),):
            raise ValueError("genome length does not match architecture")
        self.config = config
        self.theta = theta
        p = unpack_params(theta, config)
        self.w_c, self.b_c = p["controller"]
        self.w_b, self.b_b = p["bus"]

        # Fuse every interface head into a single matvec; record slices.
        names = ["write_vec"]
        if config.prev_update:
            names += ["prev_write_vec", "prev_erase_vec", "prev_gate"]
        names.append("read_mode")
        if config.free_gates:
            names += ["free_write", "free_read"]
        ws, bs, self._slices = [], [], {}
        offset = 0
        for name in names:
            w, b = p[name]
            ws.append(w)
            bs.append(b)
            self._slices[name] = slice(offset, offset + w.shape[0])
            offset += w.shape[0]
        self._w_iface = np.vstack(ws)
        self._b_iface = np.concatenate(bs)

        # constant defaults for disabled or inactive signal groups; the
        # memory never mutates these, so they are shared across steps
        hr, hw, c = config.num_read_heads, config.num_write_heads, config.control_word
        self._half_erase = np.full((hr, c), 0.5)
        self._zero_prev = np.zeros((hr, c))
        self._zero_gates = np.zeros(hr, dtype=np.int64)
        self._zero_free_w = np.zeros(hw, dtype=np.int64)
        self._zero_free_r = np.zeros(hr, dtype=np.int64)

    def controller(self, x_c: np.ndarray) -> np.ndarray:
        return np.tanh(self.w_c @ x_c + self.b_c)

    def bus(self, x_b: np.ndarray):
        """Return (raw pre-activation, chosen operation index)."""
        raw = self.w_b @ x_b + self.b_b
        return raw, int(np.argmax(raw))

    def interface(self, x_m: np.ndarray) -> InterfaceSignals:
        cfg = self.config
        c, hw, hr = cfg.control_word, cfg.num_write_heads, cfg.num_read_heads
        raw = self._w_iface @ x_m + self._b_iface
        sl = self._slices
        write_vecs = raw[sl["write_vec"]].reshape(hw, c)
        if cfg.prev_update:
            prev_gates = heaviside(raw[sl["prev_gate"]])
            if prev_gates.any():
                prev_write = raw[sl["prev_write_vec"]].reshape(hr, c)
                prev_erase = sigmoid(raw[sl["prev_erase_vec"]]).reshape(hr, c)
            else:
                # ungated heads never touch memory; skip the sigmoid
                prev_write = self._zero_prev
                prev_erase = self._half_erase
        else:
            prev_write = self._zero_prev
            prev_erase = self._half_erase
            prev_gates = self._zero_gates
        mode_logits = raw[sl["read_mode"]].reshape(hr, cfg.num_modes)
        read_modes = np.argmax(mode_logits, axis=1)
        if cfg.free_gates:
            free_write = heaviside(raw[sl["free_write"]])
            free_read = heaviside(raw[sl["free_read"]])
        else:
            free_write = self._zero_free_w
            free_read = self._zero_free_r
        return InterfaceSignals(
            write_vecs=write_vecs,
            prev_write_vecs=prev_write,
            prev_erase_vecs=prev_erase,
            prev_gates=prev_gates,
            read_modes=read_modes,
            free_write=free_write,
            free_read=free_read,
        )
