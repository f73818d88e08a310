"""Simulator for dissipative quantum neural networks and quantum GANs built from them."""

from dqgan.datasets import StateDataset, data_cl, data_cl_plus, data_line, data_line_prime, select_training
from dqgan.dqnn import Architecture, PerceptronSet, forward, init_perceptrons, layer_map
from dqgan.gan import DqganModel, TrainHyper, loss_D, loss_G, train, update_matrices, validation_loss
from dqgan.pqc import CircuitGan, CircuitHyper, build_circuit, evaluate_circuit, train_dqgan_q

__version__ = "0.1.0"
