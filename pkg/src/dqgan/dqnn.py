"""
Dissipative quantum neural networks.

A network with layer widths ``m_0, ..., m_{L+1}`` owns one perceptron unitary
``U_j^l`` per qubit ``j`` of every layer ``l >= 1``. The perceptron acts on all
``m_{l-1}`` qubits of the previous layer followed by qubit ``j`` of layer
``l``, so it has dimension ``2**(m_{l-1} + 1)``. Layer ``l`` maps a state of
layer ``l-1`` to layer ``l`` by appending fresh ``|0...0>`` qubits, applying
``U_1^l`` first and ``U_{m_l}^l`` last, and tracing out layer ``l-1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from dqgan.linalg import (
    dagger,
    embed,
    fidelity,
    haar_unitary,
    is_unitary,
    partial_trace,
    to_density,
)

UNITARY_ATOL = 1e-9


@dataclass(frozen=True)
class Architecture:
    """Qubit counts per layer, input layer first."""

    widths: tuple[int, ...]

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        if len(widths) < 2:
            raise ValueError("an architecture needs at least an input and an output layer")
        if min(widths) < 1:
            raise ValueError(f"layer widths must be positive, got {widths}")
        object.__setattr__(self, "widths", widths)

    @classmethod
    def parse(cls, text: str) -> "Architecture":
        """Parse the usual dash notation, e.g. ``"1-3-1"``."""
        try:
            return cls(tuple(int(w) for w in text.strip().split("-")))
        except ValueError as err:
            raise ValueError(f"invalid architecture {text!r}: {err}") from None

    @property
    def num_layers(self) -> int:
        """Number of perceptron layers, i.e. ``L + 1``."""
        return len(self.widths) - 1

    @property
    def hidden_layers(self) -> int:
        return len(self.widths) - 2

    def __str__(self) -> str:
        return "-".join(map(str, self.widths))


@dataclass(frozen=True, eq=False)
class PerceptronSet:
    """Perceptron unitaries of a network; ``unitaries[l-1][j-1]`` is ``U_j^l``."""

    arch: Architecture
    unitaries: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        unitaries = tuple(tuple(np.asarray(u, dtype=complex) for u in layer) for layer in self.unitaries)
        w = self.arch.widths
        if len(unitaries) != self.arch.num_layers:
            raise ValueError(f"expected {self.arch.num_layers} perceptron layers, got {len(unitaries)}")
        for l, layer in enumerate(unitaries, start=1):
            if len(layer) != w[l]:
                raise ValueError(f"layer {l} needs {w[l]} perceptrons, got {len(layer)}")
            dim = 2 ** (w[l - 1] + 1)
            for j, u in enumerate(layer, start=1):
                if u.shape != (dim, dim):
                    raise ValueError(f"U_{j}^{l} must be {dim}x{dim}, got {u.shape}")
                if not is_unitary(u, UNITARY_ATOL):
                    raise ValueError(f"U_{j}^{l} is not unitary")
        object.__setattr__(self, "unitaries", unitaries)

    @property
    def widths(self) -> tuple[int, ...]:
        return self.arch.widths

    def perceptron(self, layer: int, j: int) -> np.ndarray:
        return self.unitaries[layer - 1][j - 1]

    def replace(self, updates: dict[tuple[int, int], np.ndarray]) -> "PerceptronSet":
        """New set with ``{(l, j): U}`` swapped in."""
        layers = [list(layer) for layer in self.unitaries]
        for (l, j), u in updates.items():
            layers[l - 1][j - 1] = u
        return PerceptronSet(self.arch, tuple(tuple(layer) for layer in layers))

    def layer_unitary(self, layer: int) -> np.ndarray:
        """``U_{m_l}^l ... U_1^l`` on the ``m_{l-1} + m_l`` qubits of two layers."""
        m_in, m_out = self.widths[layer - 1], self.widths[layer]
        n = m_in + m_out
        total = np.eye(2**n, dtype=complex)
        for j, u in enumerate(self.unitaries[layer - 1]):
            total = embed(u, list(range(m_in)) + [m_in + j], n) @ total
        return total

    def layer_isometry(self, layer: int) -> np.ndarray:
        """Layer unitary restricted to a ``|0...0>`` output register.

        Appending the register and applying the layer unitary equals applying
        this ``2**(m_{l-1}+m_l) x 2**m_{l-1}`` isometry.
        """
        d_out = 2 ** self.widths[layer]
        return self.layer_unitary(layer)[:, ::d_out]


def init_perceptrons(arch: Architecture | Sequence[int], rng: np.random.Generator) -> PerceptronSet:
    """Independent Haar-random perceptrons for every layer."""
    if not isinstance(arch, Architecture):
        arch = Architecture(tuple(arch))
    w = arch.widths
    layers = tuple(
        tuple(haar_unitary(2 ** (w[l - 1] + 1), rng) for _ in range(w[l]))
        for l in range(1, len(w))
    )
    return PerceptronSet(arch, layers)


def identity_perceptrons(arch: Architecture | Sequence[int]) -> PerceptronSet:
    if not isinstance(arch, Architecture):
        arch = Architecture(tuple(arch))
    w = arch.widths
    layers = tuple(
        tuple(np.eye(2 ** (w[l - 1] + 1), dtype=complex) for _ in range(w[l]))
        for l in range(1, len(w))
    )
    return PerceptronSet(arch, layers)


def _apply_isometry(rho: np.ndarray, v: np.ndarray, m_in: int, m_out: int) -> np.ndarray:
    out = v @ rho @ dagger(v)
    return partial_trace(out, range(m_in, m_in + m_out))


def layer_map(rho: np.ndarray, layer: int, net: PerceptronSet) -> np.ndarray:
    """Transition map of perceptron layer ``layer`` (1-based).

    ``rho`` is a state of layer ``layer - 1`` (vector, matrix or a batch of
    matrices); the result is the density matrix of layer ``layer``.
    """
    if not 1 <= layer <= net.arch.num_layers:
        raise ValueError(f"layer {layer} out of range 1..{net.arch.num_layers}")
    m_in, m_out = net.widths[layer - 1], net.widths[layer]
    rho = to_density(rho)
    if rho.shape[-1] != 2**m_in:
        raise ValueError(
            f"layer {layer} expects a {m_in}-qubit state, got dimension {rho.shape[-1]}"
        )
    return _apply_isometry(rho, net.layer_isometry(layer), m_in, m_out)


def adjoint_layer_map(effect: np.ndarray, layer: int, net: PerceptronSet) -> np.ndarray:
    """Heisenberg-picture pull-back of an operator on layer ``layer`` to layer ``layer - 1``."""
    m_in = net.widths[layer - 1]
    v = net.layer_isometry(layer)
    lifted = np.kron(np.eye(2**m_in), effect)
    return dagger(v) @ lifted @ v


def forward(rho_in: np.ndarray, net: PerceptronSet, layers: Iterable[int] | None = None) -> np.ndarray:
    """Propagate through the network (or through the given consecutive ``layers``)."""
    if layers is None:
        layers = range(1, net.arch.num_layers + 1)
    rho = to_density(rho_in)
    for l in layers:
        rho = layer_map(rho, l, net)
    return rho


def supervised_loss(pairs: Sequence[tuple[np.ndarray, np.ndarray]], net: PerceptronSet) -> float:
    """Mean fidelity between network outputs and pure targets."""
    if not pairs:
        raise ValueError("supervised_loss needs at least one pair")
    inputs = np.array([to_density(p[0]) for p in pairs])
    outputs = forward(inputs, net)
    return float(np.mean([fidelity(t, out) for (_, t), out in zip(pairs, outputs)]))
