"""
First-order optimizers updating numpy parameter arrays in place.
"""

from typing import Dict, Hashable, List

import numpy as np

from voiceface.core.errors import InvalidConfig


class Sgd:
    """Plain stochastic gradient descent."""

    def step(self, keys: List[Hashable], params: List[np.ndarray], grads: List[np.ndarray], lrs: List[float]):
        for param, grad, lr in zip(params, grads, lrs):
            param -= lr * grad


class Adam:
    """Adam with bias correction; moment state is keyed per parameter."""

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: Dict[Hashable, np.ndarray] = {}
        self._v: Dict[Hashable, np.ndarray] = {}

    def step(self, keys: List[Hashable], params: List[np.ndarray], grads: List[np.ndarray], lrs: List[float]):
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for key, param, grad, lr in zip(keys, params, grads, lrs):
            m = self._m.setdefault(key, np.zeros_like(param))
            v = self._v.setdefault(key, np.zeros_like(param))
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            param -= lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)


OPTIMIZERS = {
    "sgd": Sgd,
    "adam": Adam,
}


def create_optimizer(name: str, **kwargs):
    """
    Create an optimizer by name.

    Args:
        name: "sgd" or "adam"
        **kwargs: Optimizer hyper-parameters

    Returns:
        Optimizer instance
    """
    if name not in OPTIMIZERS:
        raise InvalidConfig(f"Unknown optimizer: {name}")
    if name == "sgd":
        return Sgd()
    return OPTIMIZERS[name](**kwargs)
