"""Serializing gates for agents that are not safe under concurrency.

Scripted doubles are stateful and declare ``concurrent_safe = False``; when
rollouts run in parallel the framework wraps them so calls are serialized
behind a lock.  Already-safe agents are returned unchanged.
"""

from __future__ import annotations

import threading

from ..core import Aggregation, Task, Trajectory, ValueEstimate
from .policies import Policy
from .values import ValueModel


class SerializedPolicy(Policy):
    def __init__(self, inner: Policy) -> None:
        self.inner = inner
        self._lock = threading.Lock()
        self.concurrent_safe = True

    def propose(self, task, trajectory, branching, disallowed=frozenset()):
        with self._lock:
            return self.inner.propose(task, trajectory, branching, disallowed)


class SerializedValueModel(ValueModel):
    def __init__(self, inner: ValueModel) -> None:
        self.inner = inner
        self.scale = inner.scale
        self._lock = threading.Lock()
        self.concurrent_safe = True

    def evaluate(
        self,
        task: Task,
        trajectory: Trajectory,
        n_samples: int = 1,
        aggregation: Aggregation = Aggregation.MEDIAN,
        *,
        prior_value: float | None = None,
        candidate_actions: list[str] | None = None,
    ) -> ValueEstimate:
        with self._lock:
            return self.inner.evaluate(
                task,
                trajectory,
                n_samples,
                aggregation,
                prior_value=prior_value,
                candidate_actions=candidate_actions,
            )


def ensure_concurrent_policy(policy: Policy) -> Policy:
    return policy if policy.concurrent_safe else SerializedPolicy(policy)


def ensure_concurrent_value_model(model: ValueModel) -> ValueModel:
    return model if model.concurrent_safe else SerializedValueModel(model)
