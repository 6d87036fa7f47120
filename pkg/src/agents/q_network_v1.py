#!/usr/bin/env python3
"""
Q-Network v1 - Small feedforward action-value approximator with experience replay
torch float64 layers, SGD updates, reward-compressed targets and target-network syncing
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn
import torch.optim as optim

from ..core.domain_v1 import PerfMeasurement, TestObjective
from ..core.errors_v1 import ArchMismatch, InvalidValue

TARGET_TRANSFORMS = ('identity', 'log1p')


class QNetwork(nn.Module):
    """
    Layers: input (normalized RT, ER) -> ReLU hidden layers -> one Q-value per action
    weights[l] has torch's (out, in) shape; biases[l] has shape (out,)
    """

    def __init__(self, layer_sizes: Sequence[int]):
        super().__init__()
        sizes = tuple(int(s) for s in layer_sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise InvalidValue(f"network needs at least input and output sizes >= 1, got {sizes}")
        layers: List[nn.Module] = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            layers.append(nn.Linear(fan_in, fan_out).double())
            layers.append(nn.ReLU())
        self.layers = nn.Sequential(*layers[:-1])
        self._sizes = sizes

    @classmethod
    def build(cls, layer_sizes: Sequence[int], rng: np.random.Generator,
              output_scale: float = 1.0) -> 'QNetwork':
        """
        He-uniform weights drawn from rng, zero biases

        Args:
            layer_sizes: Input, hidden and output widths
            rng: Keyed generator; the same key gives the same weights
            output_scale: Multiplier on the last layer's weights (0 starts every Q-value at 0)
        """
        weights, biases = [], []
        sizes = list(layer_sizes)
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = math.sqrt(6.0 / fan_in)
            weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        weights[-1] = weights[-1] * output_scale
        return cls.from_arrays(weights, biases)

    @classmethod
    def zeros(cls, layer_sizes: Sequence[int]) -> 'QNetwork':
        net = cls(layer_sizes)
        with torch.no_grad():
            for p in net.parameters():
                p.zero_()
        return net

    @classmethod
    def from_arrays(cls, weights: Sequence, biases: Sequence) -> 'QNetwork':
        """Rebuild a network from (out, in) weight matrices and bias vectors"""
        weights = [np.asarray(w, dtype=np.float64) for w in weights]
        biases = [np.asarray(b, dtype=np.float64) for b in biases]
        if not weights or len(weights) != len(biases):
            raise InvalidValue("network needs matching, nonempty weight and bias lists")
        for layer, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise InvalidValue(f"layer {layer} has inconsistent shapes {w.shape} / {b.shape}")
            if layer > 0 and w.shape[1] != weights[layer - 1].shape[0]:
                raise InvalidValue(f"layer {layer} input does not match previous output")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InvalidValue("network weights must be finite")
        net = cls((weights[0].shape[1],) + tuple(w.shape[0] for w in weights))
        with torch.no_grad():
            for linear, w, b in zip(net.linears, weights, biases):
                linear.weight.copy_(torch.from_numpy(w))
                linear.bias.copy_(torch.from_numpy(b))
        return net

    @property
    def linears(self) -> List[nn.Linear]:
        return [m for m in self.layers if isinstance(m, nn.Linear)]

    @property
    def layer_sizes(self) -> Tuple[int, ...]:
        return self._sizes

    @property
    def num_actions(self) -> int:
        return self._sizes[-1]

    @property
    def weights(self) -> List[np.ndarray]:
        return [m.weight.detach().numpy().copy() for m in self.linears]

    @property
    def biases(self) -> List[np.ndarray]:
        return [m.bias.detach().numpy().copy() for m in self.linears]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.layers(x)

    def copy(self) -> 'QNetwork':
        return QNetwork.from_arrays(self.weights, self.biases)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QNetwork):
            return NotImplemented
        return (self.layer_sizes == other.layer_sizes
                and all(torch.equal(a, b) for a, b in zip(self.parameters(), other.parameters())))

    __hash__ = nn.Module.__hash__

    def __repr__(self) -> str:
        return f"QNetwork({'-'.join(str(s) for s in self.layer_sizes)})"


def forward(net: QNetwork, features) -> np.ndarray:
    """
    Deterministic forward pass

    Args:
        net: Network to evaluate
        features: Shape (in,) or (batch, in)

    Returns:
        Q-values as numpy, shape (T,) or (batch, T)
    """
    with torch.no_grad():
        out = net(torch.as_tensor(np.asarray(features, dtype=np.float64)))
    return out.numpy()


def loss_and_gradients(net: QNetwork, states, actions, targets) -> Tuple[float, List[np.ndarray], List[np.ndarray]]:
    """
    Mean squared error between Q(s, a) and fixed targets, gradients by autograd

    Returns:
        (loss, weight gradients, bias gradients) with the same shapes as net.weights / net.biases
    """
    net.zero_grad()
    loss = _batch_loss(net, torch.as_tensor(np.atleast_2d(np.asarray(states, dtype=np.float64))),
                       torch.as_tensor(np.asarray(actions, dtype=np.int64)),
                       torch.as_tensor(np.asarray(targets, dtype=np.float64)))
    loss.backward()
    grad_w = [m.weight.grad.numpy().copy() for m in net.linears]
    grad_b = [m.bias.grad.numpy().copy() for m in net.linears]
    net.zero_grad()
    return float(loss.item()), grad_w, grad_b


def _batch_loss(net: QNetwork, states: torch.Tensor, actions: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    q = net(states).gather(1, actions.unsqueeze(1)).squeeze(1)
    return nn.functional.mse_loss(q, targets)


def compress_reward(r: np.ndarray, transform: str) -> np.ndarray:
    """Maps rewards onto the scale the network is trained on; log1p keeps order and caps overshoot spikes"""
    if transform == 'identity':
        return r
    if transform == 'log1p':
        return np.log1p(r)
    raise InvalidValue(f"unknown target transform {transform!r}, expected one of {TARGET_TRANSFORMS}")


@dataclass(frozen=True)
class Transition:
    features: Tuple[float, ...]
    action: int
    reward: float
    next_features: Tuple[float, ...]
    terminal: bool


def train_step(net: QNetwork, target_net: QNetwork, batch: Sequence[Transition],
               alpha: float, gamma: float, grad_clip: Optional[float] = None,
               target_transform: str = 'identity') -> float:
    """
    One SGD step on (Q(s,a) - [f(r) + gamma max_a' Q_target(s', a')])^2; terminal targets are f(r)

    Args:
        net: Online network, updated in place
        target_net: Network providing bootstrap targets
        batch: Nonempty list of transitions
        alpha: SGD step size
        gamma: Discount factor
        grad_clip: Optional cap on the global gradient norm
        target_transform: Reward compression f, 'identity' or 'log1p'

    Returns:
        Batch loss before the update
    """
    if not batch:
        raise InvalidValue("train_step needs a nonempty batch")
    rewards = compress_reward(np.array([t.reward for t in batch], dtype=np.float64), target_transform)
    states = torch.tensor([t.features for t in batch], dtype=torch.float64)
    actions = torch.tensor([t.action for t in batch], dtype=torch.int64)
    next_states = torch.tensor([t.next_features for t in batch], dtype=torch.float64)
    not_terminal = torch.tensor([0.0 if t.terminal else 1.0 for t in batch], dtype=torch.float64)

    with torch.no_grad():
        next_q = target_net(next_states).max(dim=1).values
        targets = torch.from_numpy(rewards) + gamma * not_terminal * next_q

    optimizer = optim.SGD(net.parameters(), lr=alpha)
    optimizer.zero_grad()
    loss = _batch_loss(net, states, actions, targets)
    loss.backward()
    if grad_clip is not None:
        nn.utils.clip_grad_norm_(net.parameters(), max_norm=grad_clip)
    optimizer.step()
    return float(loss.item())


def sync_target(net: QNetwork, target_net: QNetwork) -> None:
    """Copy online weights into the target network"""
    if net.layer_sizes != target_net.layer_sizes:
        raise ArchMismatch(f"cannot sync {net!r} into {target_net!r}", module='agent-dqn')
    target_net.load_state_dict(net.state_dict())


class ReplayBuffer:
    """Fixed-capacity ring buffer of transitions"""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise InvalidValue(f"replay capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: List[Transition] = []
        self._next = 0

    def append(self, transition: Transition):
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._next] = transition
        self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> List[Transition]:
        if len(self._items) < batch_size:
            raise InvalidValue(f"buffer holds {len(self._items)} transitions, batch needs {batch_size}")
        picks = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[i] for i in picks]

    def __len__(self) -> int:
        return len(self._items)


def state_features(m: PerfMeasurement, objective: TestObjective, cap: float = 3.0) -> Tuple[float, float]:
    """Continuous state: RT and ER divided by their thresholds, clipped to [0, cap]"""
    return (min(m.avg_response_time / objective.rt_threshold, cap),
            min(m.error_rate / objective.er_threshold, cap))
