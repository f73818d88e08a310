import numpy as np
import pytest

from dqgan.datasets import data_line
from dqgan.dqnn import PerceptronSet, identity_perceptrons
from dqgan.gan import (
    DqganModel,
    TrainHyper,
    apply_updates,
    discriminator_output,
    diversity_histogram,
    loss_D,
    loss_G,
    train,
    update_matrices,
    update_matrix,
    validation_loss,
)
from dqgan.linalg import exp_i_hermitian, is_unitary, ket, random_pure_states, to_density

from oracles import global_losses

SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def random_hermitian(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


def batch(model, rng, s=4):
    inputs = random_pure_states(model.input_qubits, s, rng)
    training = random_pure_states(model.discriminator_arch.widths[0], s, rng)
    return inputs, training


def test_seam_mismatch_names_both_widths():
    with pytest.raises(ValueError, match="width 2.*width 1"):
        DqganModel.create("1-2", "1-1")
    with pytest.raises(ValueError, match="one qubit"):
        DqganModel.create("1-1", "1-2")


def test_model_layout(rng):
    model = DqganModel.create("1-2-1", "1-3-1", rng)
    assert model.g == 2
    assert model.net.widths == (1, 2, 1, 3, 1)
    assert str(model.generator_arch) == "1-2-1"
    assert str(model.discriminator_arch) == "1-3-1"
    assert list(model.discriminator_layers()) == [3, 4]


def test_identity_model_outputs_and_losses(rng):
    model = DqganModel.create("1-1", "1-1")
    psi = random_pure_states(1, 1, rng)[0]
    zero = to_density(ket("0"))
    assert np.allclose(discriminator_output(model, psi, "generated"), zero)
    assert np.allclose(discriminator_output(model, psi, "training"), zero)
    inputs, training = batch(model, rng)
    assert np.isclose(loss_D(model, inputs, training), 1.0)
    assert np.isclose(loss_G(model, inputs), 0.0)


def test_swap_chain_forwards_input():
    net = PerceptronSet(identity_perceptrons((1, 1, 1)).arch, ((SWAP,), (SWAP,)))
    model = DqganModel(net, 1)
    assert np.allclose(discriminator_output(model, ket("1"), "generated"), to_density(ket("1")))
    with pytest.raises(ValueError):
        discriminator_output(model, ket("1"), "other")


@pytest.mark.parametrize("gen,dis", [("1-1", "1-1"), ("1-2", "2-1"), ("2-1", "1-1"), ("1-1-1", "1-1")])
def test_losses_match_global_oracle(gen, dis, rng):
    model = DqganModel.create(gen, dis, rng)
    inputs, training = batch(model, rng, 3)
    ld, lg = global_losses(model.net.widths, model.g, model.net.unitaries, inputs, training)
    assert abs(loss_D(model, inputs, training) - ld) < 1e-10
    assert abs(loss_G(model, inputs) - lg) < 1e-10


def test_loss_completeness(rng):
    # per sample <0|rho|0> + <1|rho|1> = 1, so the generated part of L_D is 1 - L_G
    model = DqganModel.create("1-2", "2-1", rng)
    inputs, training = batch(model, rng)
    real = np.mean([discriminator_output(model, t, "training")[1, 1].real for t in training])
    assert np.isclose(loss_D(model, inputs, training), 1 - loss_G(model, inputs) + real)


def _fd_slope(loss, model, key, h, step=1e-5):
    def shifted(t):
        u = exp_i_hermitian(h, t) @ model.net.perceptron(*key)
        return loss(DqganModel(model.net.replace({key: u}), model.g))

    return (shifted(step) - shifted(-step)) / (2 * step)


@pytest.mark.parametrize("gen,dis", [("1-1", "1-1"), ("1-2", "2-1"), ("2-2-1", "1-2-1")])
def test_update_matrix_matches_finite_differences(gen, dis, rng):
    # dL/dt of U -> exp(itH) U is tr(A H) with K = eta 2**m_in / 2 * A
    model = DqganModel.create(gen, dis, rng)
    inputs, training = batch(model, rng, 3)
    w = model.net.widths
    for which, loss in (
        ("discriminator", lambda m: loss_D(m, inputs, training)),
        ("generator", lambda m: loss_G(m, inputs)),
    ):
        ks = update_matrices(model, which, inputs, training, eta=1.0)
        for key, k in ks.items():
            a = k / (2 ** w[key[0] - 1] / 2)
            h = random_hermitian(k.shape[0], rng)
            assert abs(_fd_slope(loss, model, key, h) - np.trace(a @ h).real) < 1e-8


def test_identity_model_update_matrices_match_finite_differences():
    # the identity model is a critical point of both losses: every
    # commutator vanishes, and finite differences agree
    model = DqganModel.create("1-1", "1-1")
    rng = np.random.default_rng(3)
    inputs, training = batch(model, rng)
    cases = [
        ("discriminator", (2, 1), lambda m: loss_D(m, inputs, training)),
        ("generator", (1, 1), lambda m: loss_G(m, inputs)),
    ]
    for which, key, loss in cases:
        k = update_matrices(model, which, inputs, training)[key]
        for _ in range(5):
            h = random_hermitian(4, rng)
            assert abs(_fd_slope(loss, model, key, h) - np.trace(k @ h).real) < 1e-8


def test_update_matrices_hermitian_and_scale_with_eta(rng):
    model = DqganModel.create("1-2", "2-1", rng)
    inputs, training = batch(model, rng)
    k1 = update_matrices(model, "discriminator", inputs, training, eta=1.0)
    k3 = update_matrices(model, "discriminator", inputs, training, eta=3.0)
    for key in k1:
        assert np.allclose(k1[key], k1[key].conj().T, atol=1e-12)
        assert np.allclose(k3[key], 3 * k1[key], rtol=0, atol=1e-14)
    assert set(k1) == {(2, 1)}
    assert set(update_matrices(model, "generator", inputs)) == {(1, 1), (1, 2)}


def test_update_matrix_single_entry(rng):
    model = DqganModel.create("1-2", "2-1", rng)
    inputs, training = batch(model, rng)
    full = update_matrices(model, "generator", inputs, eta=0.5)
    assert np.allclose(update_matrix(model, inputs, training, 1, 2, eta=0.5), full[(1, 2)])
    with pytest.raises(IndexError):
        update_matrix(model, inputs, training, 3, 1)
    with pytest.raises(IndexError):
        update_matrix(model, inputs, training, 1, 3)
    with pytest.raises(ValueError):
        update_matrices(model, "discriminator", inputs)


def test_apply_updates_zero_and_inverse(rng):
    model = DqganModel.create("1-1", "1-1", rng)
    inputs, training = batch(model, rng)
    zero = {(2, 1): np.zeros((4, 4))}
    same = apply_updates(model, "discriminator", zero, 0.1)
    assert np.allclose(same.net.perceptron(2, 1), model.net.perceptron(2, 1))
    ks = update_matrices(model, "discriminator", inputs, training)
    there = apply_updates(model, "discriminator", ks, 0.1)
    back = apply_updates(there, "discriminator", {k: -v for k, v in ks.items()}, 0.1)
    assert np.allclose(back.net.perceptron(2, 1), model.net.perceptron(2, 1), atol=1e-9)
    assert np.array_equal(there.net.perceptron(1, 1), model.net.perceptron(1, 1))


def test_apply_updates_rejects_bad_sets(rng):
    model = DqganModel.create("1-1", "1-1", rng)
    with pytest.raises(ValueError):
        apply_updates(model, "discriminator", {(1, 1): np.zeros((4, 4))}, 0.1)
    bad = np.zeros((4, 4), dtype=complex)
    bad[0, 1] = 1
    with pytest.raises(ValueError):
        apply_updates(model, "discriminator", {(2, 1): bad}, 0.1)


def test_small_discriminator_steps_ascend():
    rng = np.random.default_rng(21)
    for _ in range(20):
        model = DqganModel.create("1-1", "1-1", rng)
        inputs, training = batch(model, rng)
        ks = update_matrices(model, "discriminator", inputs, training)
        after = apply_updates(model, "discriminator", ks, 1e-3)
        assert loss_D(after, inputs, training) >= loss_D(model, inputs, training)


def test_small_generator_steps_ascend():
    rng = np.random.default_rng(22)
    for _ in range(20):
        model = DqganModel.create("1-2", "2-1", rng)
        inputs, _ = batch(model, rng)
        ks = update_matrices(model, "generator", inputs)
        assert loss_G(apply_updates(model, "generator", ks, 1e-3), inputs) >= loss_G(model, inputs)


def test_validation_loss_identity_generator_hits_first_line_state(rng):
    model = DqganModel.create("1-1", "1-1")
    data = data_line(50)
    assert np.isclose(validation_loss(model, random_pure_states(1, 20, rng), data.states), 1.0)
    random_model = DqganModel.create("1-1", "1-1", rng)
    assert 0 <= validation_loss(random_model, random_pure_states(1, 20, rng), data.states) <= 1


def test_diversity_histogram_constant_generator():
    model = DqganModel.create("1-1", "1-1")
    hist = diversity_histogram(model, 100, data_line(50).states, [0, 10, 20], np.random.default_rng(0))
    assert hist.counts[0] == 100 and hist.total == 100
    idx, counts = hist.training()
    assert list(idx) == [0, 10, 20] and list(counts) == [100, 0, 0]
    vidx, vcounts = hist.validation()
    assert len(vidx) == 47 and vcounts.sum() == 0
    assert hist.coverage == 1 / 50


def test_diversity_histogram_is_seeded(rng):
    model = DqganModel.create("1-1", "1-1", rng)
    states = data_line(50).states
    a = diversity_histogram(model, 100, states, [1, 2], np.random.default_rng(9))
    b = diversity_histogram(model, 100, states, [1, 2], np.random.default_rng(9))
    assert np.array_equal(a.counts, b.counts)
    assert a.total == 100


def _train(seed, r_T=5, **kw):
    model = DqganModel.create("1-1", "1-1", np.random.default_rng(seed))
    data = data_line(20)
    hyper = TrainHyper(r_T=r_T, S=5, V=20, **kw)
    return model, train(model, data.states[:8], data.states, hyper, np.random.default_rng(seed))


def test_train_zero_epochs_is_noop():
    model, (trained, records) = _train(0, r_T=0)
    assert trained is model and records == []


def test_train_records_and_unitarity():
    _, (trained, records) = _train(1, r_T=10, r_D=2, r_G=2)
    assert [r.epoch for r in records] == list(range(1, 11))
    assert np.allclose([r.t for r in records], 0.01 * np.arange(1, 11))
    for r in records:
        assert 0 <= r.loss_D <= 2 and 0 <= r.loss_G <= 1 and 0 <= r.loss_V <= 1
    for layer in trained.net.unitaries:
        for u in layer:
            assert is_unitary(u, 1e-9)


def test_train_is_deterministic():
    _, (_, a) = _train(2)
    _, (_, b) = _train(2)
    assert a == b


def test_train_rejects_batch_larger_than_pool():
    model = DqganModel.create("1-1", "1-1")
    data = data_line(20)
    with pytest.raises(ValueError):
        train(model, data.states[:3], data.states, TrainHyper(r_T=1, S=5), np.random.default_rng(0))


def test_hyper_validation():
    with pytest.raises(ValueError):
        TrainHyper(r_T=1, eta=0)
    with pytest.raises(ValueError):
        TrainHyper(r_T=1, S=0)
    assert TrainHyper(r_T=1, eta=4.0).lagrange_multiplier == 0.25
