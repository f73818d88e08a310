"""
Parameterised-circuit realisation of a DQNN and its adversarial training.

Qubits are numbered globally, layer after layer. Each perceptron layer ``l``
puts a ``u`` gate on every input qubit, then a CAN gate on every
(input ``i``, output ``j``) pair with ``j`` in the outer loop, and finally
discards its input qubits. After the last layer a ``u`` gate goes on every
output qubit. The ``+`` variant repeats the CAN block once more with a fresh
``u`` on every live qubit in between; both blocks have their own parameters.

CAN parameters are in units of pi, ``u`` parameters are angles in radians.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from dqgan.dqnn import Architecture, PerceptronSet
from dqgan.gan import (
    adversarial_training,
    check_seam,
    density_batch,
)
from dqgan.linalg import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    apply_local,
    embed,
    partial_trace,
    to_density,
)

_XX = np.kron(PAULI_X, PAULI_X)
_YY = np.kron(PAULI_Y, PAULI_Y)
_ZZ = np.kron(PAULI_Z, PAULI_Z)
_I4 = np.eye(4, dtype=complex)


def _rpp(pp: np.ndarray, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)[..., None, None]
    return np.cos(theta / 2) * _I4 - 1j * np.sin(theta / 2) * pp


def can_gate(tx, ty, tz) -> np.ndarray:
    """Canonical two-qubit gate ``RXX(tx pi) RYY(ty pi) RZZ(tz pi)``.

    Array arguments give a stack of gates.
    """
    return _rpp(_XX, np.multiply(tx, np.pi)) @ _rpp(_YY, np.multiply(ty, np.pi)) @ _rpp(_ZZ, np.multiply(tz, np.pi))


def u3_gate(t1, t2, t3) -> np.ndarray:
    """Single-qubit ``u(t1, t2, t3) = RZ(t2) RY(t1) RZ(t3)`` up to global phase.

    Array arguments give a stack of gates.
    """
    t1, t2, t3 = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in (t1, t2, t3)))
    c, s = np.cos(t1 / 2), np.sin(t1 / 2)
    out = np.empty(t1.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -np.exp(1j * t3) * s
    out[..., 1, 0] = np.exp(1j * t2) * s
    out[..., 1, 1] = np.exp(1j * (t2 + t3)) * c
    return out


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    slots: tuple[int, int, int]

    def __post_init__(self):
        if self.kind == "CAN":
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError(f"CAN needs two distinct qubits, got {self.qubits}")
        elif self.kind == "U3":
            if len(self.qubits) != 1:
                raise ValueError(f"U3 acts on one qubit, got {self.qubits}")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.slots) != 3:
            raise ValueError("every gate takes three parameter slots")

    def matrix(self, params: np.ndarray) -> np.ndarray:
        """Gate matrix for a parameter vector, or a stack for a ``(P, n)`` array."""
        a, b, c = (params[..., s] for s in self.slots)
        return can_gate(a, b, c) if self.kind == "CAN" else u3_gate(a, b, c)


@dataclass(frozen=True)
class Trace:
    qubits: tuple[int, ...]


@dataclass(frozen=True)
class CircuitPlan:
    arch: Architecture
    plus: bool
    ops: tuple[Gate | Trace, ...]
    num_params: int

    @property
    def widths(self) -> tuple[int, ...]:
        return self.arch.widths

    @property
    def gates(self) -> list[Gate]:
        return [op for op in self.ops if isinstance(op, Gate)]

    def layer_qubits(self, layer: int) -> list[int]:
        start = sum(self.widths[:layer])
        return list(range(start, start + self.widths[layer]))

    def to_text(self) -> str:
        lines = [f"# dqnn {self.arch}{'+' if self.plus else ''}"]
        for op in self.ops:
            if isinstance(op, Trace):
                lines.append("TRACE " + " ".join(map(str, op.qubits)))
            else:
                lines.append(" ".join([op.kind, *map(str, op.qubits), *map(str, op.slots)]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CircuitPlan":
        """Parse the output of :meth:`to_text`; the header line is required."""
        arch = plus = None
        ops: list[Gate | Trace] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                words = line[1:].split()
                if len(words) == 2 and words[0] == "dqnn":
                    plus = words[1].endswith("+")
                    arch = Architecture.parse(words[1].rstrip("+"))
                continue
            kind, *rest = line.split()
            try:
                nums = tuple(int(x) for x in rest)
                if kind == "TRACE":
                    ops.append(Trace(nums))
                elif kind == "CAN":
                    ops.append(Gate("CAN", nums[:2], nums[2:]))
                elif kind == "U3":
                    ops.append(Gate("U3", nums[:1], nums[1:]))
                else:
                    raise ValueError(f"unknown operation {kind!r}")
            except ValueError as err:
                raise ValueError(f"line {lineno}: {err}") from None
        if arch is None:
            raise ValueError("missing '# dqnn <architecture>' header")
        slots = [s for op in ops if isinstance(op, Gate) for s in op.slots]
        return cls(arch, plus, tuple(ops), max(slots, default=-1) + 1)


def standard_param_count(arch: Architecture | Sequence[int]) -> int:
    """Closed-form parameter count ``3m + 3 sum_l m_{l-1}(1 + m_l)`` of a standard circuit."""
    w = arch.widths if isinstance(arch, Architecture) else tuple(arch)
    return 3 * w[-1] + 3 * sum(w[l - 1] * (1 + w[l]) for l in range(1, len(w)))


def build_circuit(arch: Architecture | str, plus: bool = False) -> CircuitPlan:
    if isinstance(arch, str):
        arch = Architecture.parse(arch)
    w = arch.widths
    offsets = [0, *itertools.accumulate(w)]
    ops: list[Gate | Trace] = []
    slot = 0

    def add(kind, *qubits):
        nonlocal slot
        ops.append(Gate(kind, tuple(qubits), (slot, slot + 1, slot + 2)))
        slot += 3

    def can_block(ins, outs):
        for j in outs:
            for i in ins:
                add("CAN", i, j)

    for l in range(1, len(w)):
        ins = list(range(offsets[l - 1], offsets[l]))
        outs = list(range(offsets[l], offsets[l + 1]))
        for q in ins:
            add("U3", q)
        can_block(ins, outs)
        if plus:
            for q in ins + outs:
                add("U3", q)
            can_block(ins, outs)
        ops.append(Trace(tuple(ins)))
    for q in range(offsets[-2], offsets[-1]):
        add("U3", q)
    return CircuitPlan(arch, plus, tuple(ops), slot)


def init_params(plan: CircuitPlan, rng: np.random.Generator) -> np.ndarray:
    """Uniform over one period: ``[0, 2)`` for CAN slots, ``[0, 2 pi)`` for u slots."""
    params = np.empty(plan.num_params)
    for gate in plan.gates:
        high = 2.0 if gate.kind == "CAN" else 2 * np.pi
        params[list(gate.slots)] = rng.uniform(0.0, high, 3)
    return params


def _append_zero(rho: np.ndarray) -> np.ndarray:
    d = rho.shape[-1]
    out = np.zeros(rho.shape[:-2] + (2 * d, 2 * d), dtype=complex)
    out[..., ::2, ::2] = rho
    return out


def evaluate_circuit(plan: CircuitPlan, params, rho_in: np.ndarray) -> np.ndarray:
    """Density-matrix simulation of the circuit on an input-layer state.

    Output qubits start in ``|0>`` and join the simulated register when a gate
    first touches them; TRACE entries discard qubits. ``rho_in`` may be a
    vector, a matrix or a batch of matrices.

    ``params`` of shape ``(P, num_params)`` evaluates ``P`` parameter vectors
    in one pass; the result then gains a leading axis of length ``P``.
    """
    params = np.asarray(params, dtype=float)
    if params.ndim not in (1, 2) or params.shape[-1] != plan.num_params:
        raise ValueError(f"expected {plan.num_params} parameters, got shape {params.shape}")
    rho = to_density(rho_in)
    m0 = plan.widths[0]
    if rho.shape[-1] != 2**m0:
        raise ValueError(f"circuit expects a {m0}-qubit input, got dimension {rho.shape[-1]}")
    if params.ndim == 2:
        rho = np.repeat(rho[None], len(params), axis=0)
    live = list(range(m0))
    for op in plan.ops:
        if isinstance(op, Trace):
            keep = [i for i, q in enumerate(live) if q not in op.qubits]
            rho = partial_trace(rho, keep)
            live = [live[i] for i in keep]
            continue
        for q in op.qubits:
            if q not in live:
                rho = _append_zero(rho)
                live.append(q)
        rho = apply_local(rho, op.matrix(params), [live.index(q) for q in op.qubits])
    final = plan.layer_qubits(len(plan.widths) - 1)
    for q in final:
        if q not in live:
            rho = _append_zero(rho)
            live.append(q)
    order = [live.index(q) for q in final]
    if order != list(range(len(live))):
        rho = partial_trace(rho, order)
    return rho


def circuit_to_perceptrons(plan: CircuitPlan, params) -> PerceptronSet:
    """Compose the gates of a circuit into the equivalent perceptron unitaries.

    Input ``u`` gates join the first perceptron of their layer and the closing
    ``u`` gates join the perceptron of their output qubit, where they commute
    past the later perceptrons. ``+`` circuits only split into perceptrons
    when every non-input layer has width 1.
    """
    w = plan.widths
    if plan.plus and max(w[1:]) > 1:
        raise ValueError("a '+' layer with several outputs is not a product of perceptrons")
    params = np.asarray(params, dtype=float)
    last = len(w) - 1
    units = {
        (l, j): np.eye(2 ** (w[l - 1] + 1), dtype=complex)
        for l in range(1, last + 1)
        for j in range(1, w[l] + 1)
    }
    layer = 1
    for op in plan.ops:
        if isinstance(op, Trace):
            layer += 1
            continue
        l = min(layer, last)
        ins, outs = plan.layer_qubits(l - 1), plan.layer_qubits(l)
        out_q = [q for q in op.qubits if q in outs]
        j = outs.index(out_q[0]) + 1 if out_q else 1
        local = ins + [outs[j - 1]]
        pos = [local.index(q) for q in op.qubits]
        units[(l, j)] = embed(op.matrix(params), pos, len(local)) @ units[(l, j)]
    layers = tuple(tuple(units[(l, j)] for j in range(1, w[l] + 1)) for l in range(1, last + 1))
    return PerceptronSet(plan.arch, layers)


# -- gradient training ------------------------------------------------------


def fd_gradient(
    loss_fn: Callable[[np.ndarray], float], params, fd_step: float = 1e-3, batched: bool = False
) -> np.ndarray:
    """Central finite-difference gradient.

    With ``batched=True``, ``loss_fn`` maps a ``(P, n)`` stack of parameter
    vectors to ``P`` losses and all ``2n`` shifted points go in one call.
    """
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    params = np.asarray(params, dtype=float)
    if batched:
        shifts = fd_step * np.eye(len(params))
        losses = np.asarray(loss_fn(np.concatenate([params + shifts, params - shifts])), dtype=float)
        if not np.all(np.isfinite(losses)):
            raise FloatingPointError("non-finite loss in finite-difference gradient")
        up, down = losses[: len(params)], losses[len(params) :]
        return (up - down) / (2 * fd_step)
    grad = np.empty_like(params)
    for k in range(len(params)):
        shift = np.zeros_like(params)
        shift[k] = fd_step
        up, down = loss_fn(params + shift), loss_fn(params - shift)
        if not (np.isfinite(up) and np.isfinite(down)):
            raise FloatingPointError(f"non-finite loss while differentiating parameter {k}")
        grad[k] = (up - down) / (2 * fd_step)
    return grad


@dataclass(frozen=True, eq=False)
class CircuitGan:
    gen_plan: CircuitPlan
    dis_plan: CircuitPlan
    gen_params: np.ndarray
    dis_params: np.ndarray

    def __post_init__(self):
        check_seam(self.gen_plan.arch, self.dis_plan.arch)

    @classmethod
    def create(cls, gen_plan: CircuitPlan, dis_plan: CircuitPlan, rng: np.random.Generator) -> "CircuitGan":
        return cls(gen_plan, dis_plan, init_params(gen_plan, rng), init_params(dis_plan, rng))

    @property
    def input_qubits(self) -> int:
        return self.gen_plan.widths[0]

    def generate(self, rho: np.ndarray) -> np.ndarray:
        return evaluate_circuit(self.gen_plan, self.gen_params, rho)

    def discriminate(self, rho: np.ndarray) -> np.ndarray:
        return evaluate_circuit(self.dis_plan, self.dis_params, rho)


@dataclass(frozen=True)
class CircuitHyper:
    r_T: int
    r_D: int = 4
    r_G: int = 1
    S: int = 10
    V: int = 100
    eta_D: float = 0.5
    eta_G: float = 0.1
    fd_step: float = 1e-3

    def __post_init__(self):
        if self.fd_step <= 0 or self.eta_D <= 0 or self.eta_G <= 0:
            raise ValueError("learning rates and fd_step must be positive")
        if self.S < 1 or self.V < 1:
            raise ValueError("S and V must be at least 1")


def train_dqgan_q(model: CircuitGan, training_pool, dataset_states, hyper: CircuitHyper, rng, callback=None):
    """Alternating gradient ascent on the discriminator and generator parameters.

    Returns ``(model, records)``; the record time axis is the epoch number.
    """

    # every map is linear in its input, so losses over a batch equal losses
    # on the batch-mean density matrix
    def dis_step(m: CircuitGan, inputs, training):
        fake = m.generate(density_batch(inputs).mean(axis=0))
        real = density_batch(training).mean(axis=0)
        pair = np.stack([fake, real])

        def objective(p):
            out = evaluate_circuit(m.dis_plan, p, pair)
            return out[:, 0, 0, 0].real + out[:, 1, 1, 1].real

        grad = fd_gradient(objective, m.dis_params, hyper.fd_step, batched=True)
        return replace(m, dis_params=m.dis_params + hyper.eta_D * grad)

    def gen_step(m: CircuitGan, inputs):
        mean_in = density_batch(inputs).mean(axis=0)

        def objective(p):
            return m.discriminate(evaluate_circuit(m.gen_plan, p, mean_in))[:, 1, 1].real

        grad = fd_gradient(objective, m.gen_params, hyper.fd_step, batched=True)
        return replace(m, gen_params=m.gen_params + hyper.eta_G * grad)

    return adversarial_training(
        model,
        training_pool,
        dataset_states,
        r_T=hyper.r_T,
        r_D=hyper.r_D,
        r_G=hyper.r_G,
        S=hyper.S,
        V=hyper.V,
        dis_step=dis_step,
        gen_step=gen_step,
        rng=rng,
        time_step=1.0,
        callback=callback,
    )
