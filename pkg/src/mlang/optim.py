"""SGD and Adam parameter updates over engine tensors."""

from __future__ import annotations

import numpy as np

from .errors import MissingGrad
from .tensor import Tensor


class AdamState:
    def __init__(self, params: list[Tensor], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]


def _require_grads(params: list[Tensor], op: str):
    for p in params:
        if p.grad is None:
            raise MissingGrad(f"{op}: parameter has no gradient buffer")


def sgd_step(params: list[Tensor], lr: float):
    _require_grads(params, "sgd")
    lr32 = np.float32(lr)
    for p in params:
        p.data -= lr32 * p.grad


def adam_step(state: AdamState, params: list[Tensor]):
    _require_grads(params, "adam")
    state.t += 1
    b1 = np.float32(state.beta1)
    b2 = np.float32(state.beta2)
    lr = np.float32(state.lr)
    eps = np.float32(state.eps)
    bc1 = np.float32(1.0 - state.beta1 ** state.t)
    bc2 = np.float32(1.0 - state.beta2 ** state.t)
    for p, m, v in zip(params, state.m, state.v):
        g = p.grad
        m *= b1
        m += (np.float32(1.0) - b1) * g
        v *= b2
        v += (np.float32(1.0) - b2) * g * g
        m_hat = m / bc1
        v_hat = v / bc2
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)


def zero_grad(params: list[Tensor]):
    for p in params:
        p.zero_grad()
