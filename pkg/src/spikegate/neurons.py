"""Discrete-time IF/LIF dynamics, surrogate gradients, and rate decoding.

Membrane update (forward Euler, unit step):

    IF :  U <- U + I(t)
    LIF:  U <- U + (1/tau) * (-U + I(t))

A spike fires where the charged potential reaches the threshold; hard reset
zeroes the fired potential, soft reset subtracts the threshold. The Heaviside
fire decision is non-differentiable, so training substitutes one of four
normalized surrogate windows centered on the threshold; each integrates to 1
over the membrane potential.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr

from .errors import NonFiniteError, SpikeGateError
from .tensor import require_finite

IF = "if"
LIF = "lif"
HARD = "hard"
SOFT = "soft"

RECTANGULAR = "rectangular"
POLYNOMIAL = "polynomial"
SIGMOID = "sigmoid"
GAUSSIAN_CDF = "gaussian_cdf"
SURROGATE_KINDS = (RECTANGULAR, POLYNOMIAL, SIGMOID, GAUSSIAN_CDF)


@dataclass(frozen=True)
class NeuronConfig:
    """Spiking-unit parameters shared by a whole layer."""

    kind: str = IF
    threshold: float = 1.0
    tau: float = 2.0          # membrane decay constant; ignored for IF
    reset: str = HARD

    def __post_init__(self):
        if self.kind not in (IF, LIF):
            raise SpikeGateError(f"unknown neuron kind {self.kind!r}")
        if self.reset not in (HARD, SOFT):
            raise SpikeGateError(f"unknown reset mode {self.reset!r}")
        if self.threshold <= 0:
            raise SpikeGateError("threshold must be positive")
        if self.kind == LIF and self.tau <= 1.0:
            raise SpikeGateError("LIF requires tau > 1 for Euler stability")


@dataclass(frozen=True)
class SurrogateKind:
    """One of the four surrogate-gradient families plus its width."""

    kind: str = RECTANGULAR
    a: float = 1.0

    def __post_init__(self):
        if self.kind not in SURROGATE_KINDS:
            raise SpikeGateError(f"unknown surrogate kind {self.kind!r}")
        if self.a <= 0:
            raise SpikeGateError("surrogate width a must be positive")


@dataclass
class MembraneState:
    """Per-neuron voltage and last-spike bookkeeping for one layer."""

    u: np.ndarray
    last_spike_time: np.ndarray

    @classmethod
    def zeros(cls, shape) -> "MembraneState":
        return cls(u=np.zeros(shape), last_spike_time=np.full(shape, -1, dtype=np.int64))

    def copy(self) -> "MembraneState":
        return MembraneState(self.u.copy(), self.last_spike_time.copy())


@dataclass(frozen=True)
class SpikeTensor:
    """Time-major binary spike train, the currency between spike layers."""

    frames: np.ndarray

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim < 1 or frames.shape[0] < 1:
            raise SpikeGateError("spike train needs at least one timestep")
        if not np.all((frames == 0.0) | (frames == 1.0)):
            raise SpikeGateError("spike train must be binary")
        object.__setattr__(self, "frames", frames)

    @property
    def t(self) -> int:
        return self.frames.shape[0]


def charge(cfg: NeuronConfig, u: np.ndarray, weighted_input: np.ndarray) -> np.ndarray:
    """Membrane potential after integrating one step of input current."""
    if cfg.kind == IF:
        return u + weighted_input
    return u + (-u + weighted_input) / cfg.tau


def step_neuron(cfg: NeuronConfig, state: MembraneState,
                weighted_input: np.ndarray, t: int):
    """Advance one timestep; returns (binary spikes, new state)."""
    weighted_input = np.asarray(weighted_input, dtype=np.float64)
    if weighted_input.shape != state.u.shape:
        raise SpikeGateError(
            f"input shape {weighted_input.shape} != membrane shape {state.u.shape}"
        )
    if not np.all(np.isfinite(weighted_input)):
        raise NonFiniteError("weighted input contains NaN or Inf")
    u = charge(cfg, state.u, weighted_input)
    spikes = (u >= cfg.threshold).astype(np.float64)
    fired = spikes == 1.0
    if cfg.reset == HARD:
        u_next = np.where(fired, 0.0, u)
    else:
        u_next = np.where(fired, u - cfg.threshold, u)
    last = np.where(fired, t, state.last_spike_time)
    return spikes, MembraneState(u=u_next, last_spike_time=last.astype(np.int64))


# ---------------------------------------------------------------------------
# surrogate gradients
#
# x = u - threshold. Each family is symmetric about the threshold,
# non-negative, maximal at x = 0, and integrates to 1 in u.

_SQRT2PI = float(np.sqrt(2.0 * np.pi))


def surrogate_grad(kind: SurrogateKind, u, threshold: float):
    """Value of the surrogate window at membrane potential ``u``."""
    x = np.asarray(u, dtype=np.float64) - threshold
    a = kind.a
    if kind.kind == RECTANGULAR:
        return np.where(np.abs(x) < a / 2.0, 1.0 / a, 0.0)
    if kind.kind == POLYNOMIAL:
        return np.maximum(0.0, 1.0 / a - np.abs(x) / (a * a))
    if kind.kind == SIGMOID:
        s = 1.0 / (1.0 + np.exp(-x / a))
        return s * (1.0 - s) / a
    # gaussian_cdf: the window is the Gaussian density of the scaled distance
    z = x / a
    return np.exp(-0.5 * z * z) / (_SQRT2PI * a)


def surrogate_smooth_spike(kind: SurrogateKind, u, threshold: float):
    """Antiderivative of the window: a smooth 0->1 relaxation of the fire
    decision, used by gradient checks (its derivative is exactly
    :func:`surrogate_grad`)."""
    x = np.asarray(u, dtype=np.float64) - threshold
    a = kind.a
    if kind.kind == RECTANGULAR:
        return np.clip(x / a + 0.5, 0.0, 1.0)
    if kind.kind == POLYNOMIAL:
        y = np.where(
            x <= 0.0,
            0.5 * np.square(np.maximum(x + a, 0.0)) / (a * a),
            1.0 - 0.5 * np.square(np.maximum(a - x, 0.0)) / (a * a),
        )
        return y
    if kind.kind == SIGMOID:
        return 1.0 / (1.0 + np.exp(-x / a))
    return ndtr(x / a)


def stdb_kernel(delta_t, never_spiked, gamma: float = 0.3, tau_s: float = 5.0):
    """Spike-timing-dependent fire-decision gradient: gamma * exp(-dt/tau_s),
    zero for neurons that have not spiked yet."""
    g = gamma * np.exp(-np.asarray(delta_t, dtype=np.float64) / tau_s)
    return np.where(never_spiked, 0.0, g)


@dataclass(frozen=True)
class StdbSurrogate:
    """Marker selecting the time-kernel surrogate for fine-tuning."""

    gamma: float = 0.3
    tau_s: float = 5.0


# ---------------------------------------------------------------------------
# rate decoding


def rate_decode(output) -> np.ndarray:
    """Per-class scores: mean over time of the output train.

    Accepts a SpikeTensor or a raw time-major array [T, classes] /
    [T, N, classes]; real-valued tails (networks ending in an affine layer)
    decode the same way.
    """
    frames = output.frames if isinstance(output, SpikeTensor) else np.asarray(output, dtype=np.float64)
    if frames.shape[0] < 1:
        raise SpikeGateError("cannot decode an empty train")
    return frames.mean(axis=0)


def predict(scores: np.ndarray) -> np.ndarray:
    """Argmax with lowest-index tie-break (numpy argmax keeps first max)."""
    return np.argmax(scores, axis=-1)
