"""Adam optimizer with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autograd import Parameter
from .errors import ContractError


@dataclass
class AdamState:
    """Step counter, hyperparameters, and per-parameter moment buffers."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)


class Adam:
    def __init__(self, params: list[Parameter], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ContractError(f"learning rate must be positive, got {lr}")
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ContractError("parameter names must be unique within one optimizer")
        self.params = list(params)
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
        for p in self.params:
            self.state.first_moment[p.name] = np.zeros_like(p.data)
            self.state.second_moment[p.name] = np.zeros_like(p.data)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        """One bias-corrected update; every parameter must carry a gradient."""
        missing = [p.name for p in self.params if p.grad is None]
        if missing:
            raise ContractError(f"adam step before backward: no gradient for {missing}")
        s = self.state
        s.step += 1
        c1 = 1.0 - s.beta1 ** s.step
        c2 = 1.0 - s.beta2 ** s.step
        for p in self.params:
            m = s.first_moment[p.name]
            v = s.second_moment[p.name]
            m *= s.beta1
            m += (1.0 - s.beta1) * p.grad
            v *= s.beta2
            v += (1.0 - s.beta2) * (p.grad * p.grad)
            p.data -= s.lr * (m / c1) / (np.sqrt(v / c2) + s.eps)
