"""Slot-vector arithmetic engine with exact and leveled fixed-point backends.

A SlotVector plays the role of a ciphertext: a fixed-length vector of real
slots that supports componentwise add/multiply, multiplication by a plaintext
mask, and cyclic rotation.  The ``exact`` backend is plain float64 arithmetic
(a ring-homomorphism image of the cleartext computation); the ``leveled``
backend additionally quantizes every multiplication result to a fixed-point
scale of 2**logp and charges one level per rescaling, raising DepthExhausted
when the budget floor(logQ / logp) runs out.  No lattice noise is modeled, so
all arithmetic is deterministic.

All operations are pure: inputs are never mutated and every result is a fresh
vector.  An engine may carry an OpTrace; traces are not locked and must stay
confined to one thread (ops on engines with distinct traces never interfere).
"""

import itertools
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DepthExhausted, InputTooLong, LengthMismatch

BACKENDS = ("exact", "leveled")


@dataclass(frozen=True)
class EngineConfig:
    """Engine parameters. Defaults mirror the reference experiment setup."""

    logN: int = 16
    logQ: int = 990
    logp: int = 30
    slots: int = 32768
    backend: str = "leveled"

    def __post_init__(self):
        if self.slots < 1 or (self.slots & (self.slots - 1)) != 0:
            raise ValueError(f"slots must be a power of two, got {self.slots}")
        if self.logp <= 0:
            raise ValueError("logp must be positive")
        if self.logQ < self.logp:
            raise ValueError("logQ must be >= logp")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")

    @property
    def level_budget(self) -> int:
        return self.logQ // self.logp

    def to_dict(self) -> dict:
        return {
            "logN": self.logN,
            "logQ": self.logQ,
            "logp": self.logp,
            "slots": self.slots,
            "backend": self.backend,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EngineConfig":
        known = {k: d[k] for k in ("logN", "logQ", "logp", "slots", "backend") if k in d}
        return cls(**known)


class SlotVector:
    """Immutable vector of slots plus level bookkeeping (leveled backend)."""

    __slots__ = ("slots", "level", "scale_bits", "uid")

    def __init__(self, slots: np.ndarray, level, scale_bits, uid: int):
        slots.flags.writeable = False
        self.slots = slots
        self.level = level            # None on the exact backend
        self.scale_bits = scale_bits  # None on the exact backend
        self.uid = uid

    def __len__(self):
        return self.slots.shape[0]

    def __repr__(self):
        head = np.array2string(self.slots[:4], precision=6)
        return f"SlotVector(len={len(self)}, level={self.level}, slots={head}...)"


class PlainMask:
    """Plaintext slot vector used as the second operand of cmult."""

    __slots__ = ("slots",)

    def __init__(self, slots: np.ndarray):
        slots.flags.writeable = False
        self.slots = slots

    def __len__(self):
        return self.slots.shape[0]


# Trace entry: (phase_index, op, in_uids, out_uid, consumed, out_level)
class OpTrace:
    """Append-only log of engine operations, grouped into labeled phases."""

    def __init__(self):
        self.phase_labels = [""]
        self.entries = []

    def begin_phase(self, label: str) -> None:
        self.phase_labels.append(label)

    @contextmanager
    def phase(self, label: str):
        self.begin_phase(label)
        yield
        self.begin_phase(f"(after {label})")

    def record(self, op, in_uids, out_uid, consumed, out_level):
        self.entries.append(
            (len(self.phase_labels) - 1, op, in_uids, out_uid, consumed, out_level)
        )


@dataclass
class PhaseDepth:
    label: str
    depth: int
    op_counts: Counter = field(default_factory=Counter)
    min_level: int | None = None


@dataclass
class DepthReport:
    phases: list
    max_phase_depth: int
    min_level: int | None

    def phase(self, label: str) -> PhaseDepth:
        for p in self.phases:
            if p.label == label:
                return p
        raise KeyError(label)


def depth_report(trace: OpTrace) -> DepthReport:
    """Cumulative multiplicative depth per phase and minimum remaining level.

    Depth is derived by replaying the recorded dataflow: within each phase,
    a vector produced before the phase counts as depth zero, and each
    level-consuming op extends the deepest chain among its inputs by one.
    """
    phases = []
    current = None
    current_idx = -1
    local_depth = {}
    min_level = None
    for phase_idx, op, in_uids, out_uid, consumed, out_level in trace.entries:
        if phase_idx != current_idx:
            current = PhaseDepth(trace.phase_labels[phase_idx], 0)
            phases.append(current)
            current_idx = phase_idx
            local_depth = {}
        base = max((local_depth.get(u, 0) for u in in_uids), default=0)
        d = base + consumed
        local_depth[out_uid] = d
        current.depth = max(current.depth, d)
        current.op_counts[op] += 1
        if out_level is not None:
            current.min_level = (
                out_level if current.min_level is None else min(current.min_level, out_level)
            )
            min_level = out_level if min_level is None else min(min_level, out_level)
    max_depth = max((p.depth for p in phases), default=0)
    return DepthReport(phases=phases, max_phase_depth=max_depth, min_level=min_level)


class SlotEngine:
    """Arithmetic over SlotVectors under one EngineConfig.

    Holds no mutable state besides the optional trace, so one engine can be
    shared across threads as long as each trace stays thread-confined.
    """

    def __init__(self, config: EngineConfig | None = None, trace: OpTrace | None = None):
        self.config = config if config is not None else EngineConfig()
        self.trace = trace
        self._uid = itertools.count(1)
        self._scale = float(2 ** self.config.logp)
        self._leveled = self.config.backend == "leveled"

    # --- construction -----------------------------------------------------

    def _pad(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64).ravel()
        S = self.config.slots
        if values.shape[0] > S:
            raise InputTooLong(f"{values.shape[0]} values > {S} slots")
        out = np.zeros(S, dtype=np.float64)
        out[: values.shape[0]] = values
        return out

    def encrypt(self, values) -> SlotVector:
        """Pack values into a fresh vector, zero-padded on the right.

        Leveled backend: slots are quantized to the 2**logp fixed-point grid
        and the vector starts at the full level budget.
        """
        out = self._pad(values)
        if self._leveled:
            out = _kernels.quantize(out, self._scale)
            sv = self._new(out, self.config.level_budget)
        else:
            sv = self._new(out, None)
        self._record("encrypt", (), sv, 0)
        return sv

    def mask(self, values) -> PlainMask:
        return PlainMask(self._pad(values))

    def decrypt(self, v: SlotVector) -> np.ndarray:
        return v.slots.copy()

    def _new(self, slots: np.ndarray, level) -> SlotVector:
        bits = self.config.logp if self._leveled else None
        return SlotVector(slots, level, bits, next(self._uid))

    def _record(self, op, ins, out, consumed):
        if self.trace is not None:
            self.trace.record(op, tuple(i.uid for i in ins), out.uid, consumed, out.level)

    def _check_pair(self, a: SlotVector, b) -> None:
        if len(a) != len(b):
            raise LengthMismatch(f"{len(a)} vs {len(b)} slots")

    def _require_level(self, op, *vs):
        for v in vs:
            if v.level is not None and v.level < 1:
                raise DepthExhausted(f"{op}: operand at level 0 (budget {self.config.level_budget})")

    # --- operations ---------------------------------------------------------

    def add(self, a: SlotVector, b: SlotVector) -> SlotVector:
        """Slotwise sum; leveled result drops to the lower operand level."""
        self._check_pair(a, b)
        out = a.slots + b.slots
        level = min(a.level, b.level) if self._leveled else None
        sv = self._new(out, level)
        self._record("add", (a, b), sv, 0)
        return sv

    def sub(self, a: SlotVector, b: SlotVector) -> SlotVector:
        """Slotwise difference (additive inverse is free, like add)."""
        self._check_pair(a, b)
        out = a.slots - b.slots
        level = min(a.level, b.level) if self._leveled else None
        sv = self._new(out, level)
        self._record("sub", (a, b), sv, 0)
        return sv

    def mult(self, a: SlotVector, b: SlotVector) -> SlotVector:
        """Slotwise product; leveled backend rescales and consumes one level."""
        self._check_pair(a, b)
        if self._leveled:
            self._require_level("mult", a, b)
            out = _kernels.mult_rescale(a.slots, b.slots, self._scale)
            sv = self._new(out, min(a.level, b.level) - 1)
        else:
            sv = self._new(a.slots * b.slots, None)
        self._record("mult", (a, b), sv, 1)
        return sv

    def cmult(self, a: SlotVector, m: PlainMask) -> SlotVector:
        """Product with a plaintext mask; consumes one level (rescale)."""
        self._check_pair(a, m)
        if self._leveled:
            self._require_level("cmult", a)
            out = _kernels.cmult_rescale(a.slots, m.slots, self._scale)
            sv = self._new(out, a.level - 1)
        else:
            sv = self._new(a.slots * m.slots, None)
        self._record("cmult", (a,), sv, 1)
        return sv

    def rotate(self, a: SlotVector, k: int) -> SlotVector:
        """Left cyclic rotation by k slots (negative k rotates right). Free."""
        k %= len(a)
        sv = self._new(_kernels.rotate(a.slots, k), a.level)
        self._record("rotate", (a,), sv, 0)
        return sv

    def rotate_add(self, a: SlotVector, k: int) -> SlotVector:
        """Fused add(a, rotate(a, k)); same semantics, one kernel pass."""
        k %= len(a)
        sv = self._new(_kernels.rotate_add(a.slots, k), a.level)
        if self.trace is not None:
            rot_uid = next(self._uid)
            self.trace.record("rotate", (a.uid,), rot_uid, 0, a.level)
            self.trace.record("add", (a.uid, rot_uid), sv.uid, 0, sv.level)
        return sv
