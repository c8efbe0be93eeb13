"""Phase-space states and sampled trajectories."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PhaseState:
    """A point (q, p) of T*R^n, paired so that omega = sum dp_i ^ dq_i."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(-1)
        p = np.asarray(self.p, dtype=float).reshape(-1)
        if q.shape != p.shape:
            raise ValueError(f"dim(q)={q.size} != dim(p)={p.size}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def dim(self) -> int:
        return self.q.size

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_x(cls, x) -> "PhaseState":
        x = np.asarray(x, dtype=float)
        n = x.size // 2
        return cls(x[:n], x[n:])


def as_state(state) -> PhaseState:
    if isinstance(state, PhaseState):
        return state
    if isinstance(state, tuple) and len(state) == 2:
        return PhaseState(*state)
    return PhaseState.from_x(state)


@dataclass
class Trajectory:
    """Time-stamped phase states plus named scalar monitors.

    ``states`` has one row per sample laid out as ``[q_1..q_n, p_1..p_n]``.
    """

    times: np.ndarray
    states: np.ndarray
    monitors: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if self.times.ndim != 1 or len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if self.states.shape[1] % 2:
            raise ValueError("state rows must have even width (q, p)")
        self.monitors = {k: np.asarray(v, dtype=float) for k, v in self.monitors.items()}

    def __len__(self):
        return len(self.times)

    @property
    def dim(self) -> int:
        return self.states.shape[1] // 2

    @property
    def q(self) -> np.ndarray:
        return self.states[:, : self.dim]

    @property
    def p(self) -> np.ndarray:
        return self.states[:, self.dim :]

    def state(self, i: int) -> PhaseState:
        return PhaseState.from_x(self.states[i])

    @property
    def final(self) -> PhaseState:
        return self.state(-1)
