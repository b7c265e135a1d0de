"""Minimal LSTM engine: layers, BPTT, MSE loss, Adam, gradient checking."""

from .gradcheck import gradient_check
from .init import glorot_limit, init_weights, make_rng
from .layers import DenseParams, LSTMLayerParams, lstm_cell_forward, sigmoid
from .loss import mse_loss
from .network import DenseNetwork, LSTMNetwork, backward_sequence, forward_sequence
from .optim import AdamState, adam_step
from .params import ParamSet

__all__ = [
    "AdamState",
    "DenseNetwork",
    "DenseParams",
    "LSTMLayerParams",
    "LSTMNetwork",
    "ParamSet",
    "adam_step",
    "backward_sequence",
    "forward_sequence",
    "glorot_limit",
    "gradient_check",
    "init_weights",
    "lstm_cell_forward",
    "make_rng",
    "mse_loss",
    "sigmoid",
]
