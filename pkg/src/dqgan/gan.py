"""
Adversarial training of a generator DQNN against a discriminator DQNN.

The generator maps random pure input states to states on the seam register,
the discriminator maps seam states to a single qubit. The discriminator is
trained to put training data on ``|1>`` and generated data on ``|0>``; the
generator is trained to push its own data onto ``|1>``.

Losses, validation and the diversity histogram only need a model exposing
``input_qubits``, ``generate(rho)`` and ``discriminate(rho)``, so they serve
both the exact perceptron model here and the circuit model in
:mod:`dqgan.pqc`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

from dqgan.dqnn import (
    Architecture,
    PerceptronSet,
    adjoint_layer_map,
    forward,
    identity_perceptrons,
    init_perceptrons,
)
from dqgan.linalg import (
    dagger,
    embed,
    exp_i_hermitian,
    is_hermitian,
    partial_trace,
    random_pure_states,
    to_density,
)

Branch = Literal["generated", "training"]
Which = Literal["generator", "discriminator"]

PROJ_1 = np.diag([0.0, 1.0]).astype(complex)


def check_seam(gen: Architecture, dis: Architecture) -> None:
    if gen.widths[-1] != dis.widths[0]:
        raise ValueError(
            f"generator output width {gen.widths[-1]} does not match "
            f"discriminator input width {dis.widths[0]}"
        )
    if dis.widths[-1] != 1:
        raise ValueError(f"discriminator must end in one qubit, got width {dis.widths[-1]}")


def density_batch(states: np.ndarray | Sequence[np.ndarray]) -> np.ndarray:
    """Stack of density matrices from a list of pure vectors or matrices."""
    states = [np.asarray(s) for s in states]
    if not states:
        raise ValueError("empty list of states")
    return np.array([to_density(s) for s in states])


@dataclass(frozen=True, eq=False)
class DqganModel:
    """Generator and discriminator perceptrons in one combined network.

    Perceptron layers ``1..g`` belong to the generator, ``g+1..L+1`` to the
    discriminator.
    """

    net: PerceptronSet
    g: int

    def __post_init__(self):
        check_seam(self.generator_arch, self.discriminator_arch)

    @classmethod
    def create(
        cls,
        gen: Architecture | str,
        dis: Architecture | str,
        rng: np.random.Generator | None = None,
    ) -> "DqganModel":
        """Haar-random model, or all-identity perceptrons when ``rng`` is None."""
        gen = Architecture.parse(gen) if isinstance(gen, str) else gen
        dis = Architecture.parse(dis) if isinstance(dis, str) else dis
        check_seam(gen, dis)
        arch = Architecture(gen.widths + dis.widths[1:])
        net = identity_perceptrons(arch) if rng is None else init_perceptrons(arch, rng)
        return cls(net, gen.num_layers)

    @property
    def generator_arch(self) -> Architecture:
        return Architecture(self.net.widths[: self.g + 1])

    @property
    def discriminator_arch(self) -> Architecture:
        return Architecture(self.net.widths[self.g :])

    @property
    def input_qubits(self) -> int:
        return self.net.widths[0]

    def generator_layers(self) -> range:
        return range(1, self.g + 1)

    def discriminator_layers(self) -> range:
        return range(self.g + 1, self.net.arch.num_layers + 1)

    def generate(self, rho: np.ndarray) -> np.ndarray:
        return forward(rho, self.net, self.generator_layers())

    def discriminate(self, rho: np.ndarray) -> np.ndarray:
        return forward(rho, self.net, self.discriminator_layers())


@dataclass(frozen=True)
class TrainHyper:
    r_T: int
    r_D: int = 1
    r_G: int = 1
    S: int = 10
    V: int = 100
    eta: float = 1.0
    epsilon: float = 0.01

    def __post_init__(self):
        if self.eta <= 0 or self.epsilon <= 0:
            raise ValueError("eta and epsilon must be positive")
        if self.S < 1 or self.V < 1:
            raise ValueError("S and V must be at least 1")
        if min(self.r_T, self.r_D, self.r_G) < 0:
            raise ValueError("round counts must be non-negative")

    @property
    def lagrange_multiplier(self) -> float:
        return 1.0 / self.eta


@dataclass(frozen=True)
class TrainingRecord:
    epoch: int
    t: float
    loss_D: float
    loss_G: float
    loss_V: float


@dataclass(frozen=True, eq=False)
class Histogram:
    """Nearest-dataset-element counts of generated samples."""

    counts: np.ndarray
    is_training: np.ndarray

    def training(self) -> tuple[np.ndarray, np.ndarray]:
        idx = np.flatnonzero(self.is_training)
        return idx, self.counts[idx]

    def validation(self) -> tuple[np.ndarray, np.ndarray]:
        idx = np.flatnonzero(~self.is_training)
        return idx, self.counts[idx]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def coverage(self) -> float:
        """Fraction of dataset indices hit at least once."""
        return float(np.count_nonzero(self.counts)) / len(self.counts)


# -- losses -----------------------------------------------------------------


def discriminator_output(model, state: np.ndarray, branch: Branch) -> np.ndarray:
    """One-qubit output of the discriminator for one pure input.

    ``branch="generated"`` feeds ``state`` through the generator first,
    ``branch="training"`` feeds it to the discriminator directly.
    """
    rho = to_density(state)
    if branch == "generated":
        rho = model.generate(rho)
    elif branch != "training":
        raise ValueError(f"unknown branch {branch!r}")
    return model.discriminate(rho)


def discriminator_objective(discriminate: Callable, generated: np.ndarray, training: np.ndarray) -> float:
    """Mean ``<0|D(rho)|0>`` over generated states plus mean ``<1|D(rho)|1>`` over training states."""
    fake = discriminate(generated)
    real = discriminate(training)
    return float(np.mean(fake[:, 0, 0].real) + np.mean(real[:, 1, 1].real))


def loss_D(model, inputs, training) -> float:
    """Discriminator objective: generated data on ``|0>``, training data on ``|1>``."""
    return discriminator_objective(
        model.discriminate, model.generate(density_batch(inputs)), density_batch(training)
    )


def loss_G(model, inputs) -> float:
    """Generator objective: probability the discriminator labels generated data ``|1>``."""
    fake = model.discriminate(model.generate(density_batch(inputs)))
    return float(np.mean(fake[:, 1, 1].real))


def fidelity_table(outputs: np.ndarray, dataset_states: np.ndarray) -> np.ndarray:
    """``F[i, x] = <phi_x|rho_i|phi_x>`` for generated states against a dataset."""
    phi = np.asarray(dataset_states, dtype=complex)
    return np.einsum("xa,iab,xb->ix", phi.conj(), outputs, phi).real


def validation_loss(model, validation_inputs, dataset_states) -> float:
    """Mean over generated samples of the best fidelity to any dataset state."""
    dataset_states = np.asarray(dataset_states)
    if len(dataset_states) == 0:
        raise ValueError("empty dataset")
    outputs = model.generate(density_batch(validation_inputs))
    best = fidelity_table(outputs, dataset_states).max(axis=1)
    return float(np.clip(best.mean(), 0.0, 1.0))


def diversity_histogram(
    model,
    sample_count: int,
    dataset_states,
    training_indices: Sequence[int],
    rng: np.random.Generator,
) -> Histogram:
    """Assign ``sample_count`` generated states to their nearest dataset element.

    Ties go to the lowest index. ``training_indices`` are 0-based.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    dataset_states = np.asarray(dataset_states)
    inputs = random_pure_states(model.input_qubits, sample_count, rng)
    outputs = model.generate(density_batch(inputs))
    nearest = np.argmax(fidelity_table(outputs, dataset_states), axis=1)
    counts = np.bincount(nearest, minlength=len(dataset_states))
    is_training = np.zeros(len(dataset_states), dtype=bool)
    is_training[list(training_indices)] = True
    return Histogram(counts, is_training)


# -- update matrices --------------------------------------------------------


def _mean_density(states) -> np.ndarray:
    return density_batch(states).mean(axis=0)


def _derivative_operators(model: DqganModel, which: Which, inputs, training=None, layers=None):
    """``A_j^l = i tr_rest(M_j^l)`` averaged over the batch.

    ``A`` is Hermitian and the loss changes as ``eps * tr(A K)`` under
    ``U -> exp(i eps K) U``. Every map involved is linear in the input state,
    so the batch sum of commutators is the commutator of the mean state.
    """
    net = model.net
    w = net.widths
    last = net.arch.num_layers

    # Heisenberg-picture |1><1| on the output qubit, pulled back to each layer
    effects = {last: PROJ_1}
    for l in range(last, 1, -1):
        effects[l - 1] = adjoint_layer_map(effects[l], l, net)

    rho_in = _mean_density(inputs)
    if which == "generator":
        targets = model.generator_layers()
        sigma = rho_in
    elif which == "discriminator":
        if training is None:
            raise ValueError("discriminator updates need a training batch")
        targets = model.discriminator_layers()
        sigma = _mean_density(training) - model.generate(rho_in)
    else:
        raise ValueError(f"unknown sub-network {which!r}")

    wanted = set(targets if layers is None else layers)
    out = {}
    for l in targets:
        m_in, m_out = w[l - 1], w[l]
        n = m_in + m_out
        if l in wanted:
            embedded = [embed(u, list(range(m_in)) + [m_in + j], n) for j, u in enumerate(net.unitaries[l - 1])]
            # Q_j = U_{j+1}^dag ... U_m^dag (1 x B_l) U_m ... U_{j+1}
            qs = [None] * (m_out + 1)
            qs[m_out] = np.kron(np.eye(2**m_in), effects[l])
            for j in range(m_out, 0, -1):
                qs[j - 1] = dagger(embedded[j - 1]) @ qs[j] @ embedded[j - 1]
            s = np.zeros((2**n, 2**n), dtype=complex)
            s[:: 2**m_out, :: 2**m_out] = sigma
            for j in range(1, m_out + 1):
                s = embedded[j - 1] @ s @ dagger(embedded[j - 1])
                comm = s @ qs[j] - qs[j] @ s
                out[(l, j)] = 1j * partial_trace(comm, list(range(m_in)) + [m_in + j - 1])
        sigma = forward(sigma, net, [l])
    return out


def update_matrices(model: DqganModel, which: Which, inputs, training=None, eta: float = 1.0):
    """Update generators ``K_j^l`` for every perceptron of one sub-network.

    ``K_j^l = eta 2**m_{l-1} i/(2S) sum_x tr_rest(M_j^l(x))``. Returns a dict
    keyed by ``(l, j)``.
    """
    ops = _derivative_operators(model, which, inputs, training)
    w = model.net.widths
    return {key: eta * 2 ** w[key[0] - 1] / 2 * a for key, a in ops.items()}


def update_matrix(model: DqganModel, inputs, training, layer: int, j: int, eta: float = 1.0) -> np.ndarray:
    """``K_j^l`` for a single perceptron; ``training`` is ignored for generator layers."""
    num = model.net.arch.num_layers
    if not 1 <= layer <= num or not 1 <= j <= model.net.widths[layer]:
        raise IndexError(f"no perceptron U_{j}^{layer}")
    which = "generator" if layer <= model.g else "discriminator"
    a = _derivative_operators(model, which, inputs, training, layers=[layer])[(layer, j)]
    return eta * 2 ** model.net.widths[layer - 1] / 2 * a


def apply_updates(model: DqganModel, which: Which, ks: dict, epsilon: float) -> DqganModel:
    """Replace every targeted ``U_j^l`` by ``exp(i eps K_j^l) U_j^l``."""
    layers = model.generator_layers() if which == "generator" else model.discriminator_layers()
    expected = {(l, j) for l in layers for j in range(1, model.net.widths[l] + 1)}
    if set(ks) != expected:
        raise ValueError(f"K-set must cover exactly the {which} perceptrons {sorted(expected)}")
    new = {}
    for key, k in ks.items():
        if not is_hermitian(k, 1e-9 * max(1.0, np.abs(k).max())):
            raise ValueError(f"K for perceptron {key} is not Hermitian")
        new[key] = exp_i_hermitian(k, epsilon) @ model.net.perceptron(*key)
    return DqganModel(model.net.replace(new), model.g)


# -- training loop ----------------------------------------------------------


def rng_stream(base: int, *keys: int) -> np.random.Generator:
    """Independent generator for one ``(epoch, phase, round)`` slot."""
    return np.random.default_rng([base, *keys])


_PHASE_BATCH, _PHASE_DIS, _PHASE_GEN, _PHASE_RECORD, _PHASE_VALID = range(5)


def adversarial_training(
    model,
    training_pool,
    dataset_states,
    *,
    r_T: int,
    r_D: int,
    r_G: int,
    S: int,
    V: int,
    dis_step: Callable,
    gen_step: Callable,
    rng: np.random.Generator,
    time_step: float = 1.0,
    callback: Callable | None = None,
):
    """Epoch loop shared by the exact and circuit trainers.

    ``dis_step(model, inputs, training)`` and ``gen_step(model, inputs)``
    return the updated model. Each epoch draws ``S`` training states without
    replacement from the pool and reuses them for all discriminator rounds;
    every round draws fresh random inputs. ``callback(epoch, model)`` runs
    after each epoch.
    """
    training_pool = np.asarray(training_pool)
    dataset_states = np.asarray(dataset_states)
    if S > len(training_pool):
        raise ValueError(f"batch size S={S} exceeds the {len(training_pool)} available training states")
    base = int(rng.integers(2**63))
    m0 = model.input_qubits
    records = []
    for epoch in range(1, r_T + 1):
        pick = rng_stream(base, epoch, _PHASE_BATCH).choice(len(training_pool), S, replace=False)
        training = training_pool[np.sort(pick)]
        for r in range(r_D):
            inputs = random_pure_states(m0, S, rng_stream(base, epoch, _PHASE_DIS, r))
            model = dis_step(model, inputs, training)
        for r in range(r_G):
            inputs = random_pure_states(m0, S, rng_stream(base, epoch, _PHASE_GEN, r))
            model = gen_step(model, inputs)
        inputs = random_pure_states(m0, S, rng_stream(base, epoch, _PHASE_RECORD))
        val_inputs = random_pure_states(m0, V, rng_stream(base, epoch, _PHASE_VALID))
        records.append(
            TrainingRecord(
                epoch=epoch,
                t=epoch * time_step,
                loss_D=loss_D(model, inputs, training),
                loss_G=loss_G(model, inputs),
                loss_V=validation_loss(model, val_inputs, dataset_states),
            )
        )
        if callback is not None:
            callback(epoch, model)
    return model, records


def train(
    model: DqganModel,
    training_pool,
    dataset_states,
    hyper: TrainHyper,
    rng: np.random.Generator,
    callback: Callable | None = None,
) -> tuple[DqganModel, list[TrainingRecord]]:
    """Alternating discriminator/generator training with exact unitary updates.

    ``training_pool`` holds the states available for training batches;
    ``dataset_states`` is the full dataset the validation loss compares with.
    """

    def dis_step(m, inputs, training):
        ks = update_matrices(m, "discriminator", inputs, training, hyper.eta)
        return apply_updates(m, "discriminator", ks, hyper.epsilon)

    def gen_step(m, inputs):
        ks = update_matrices(m, "generator", inputs, eta=hyper.eta)
        return apply_updates(m, "generator", ks, hyper.epsilon)

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
        time_step=hyper.epsilon,
        callback=callback,
    )
