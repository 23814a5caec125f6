"""
Progress events spread by the solvers.
A run with a notifier attached calls every hook with each event, in the order the events happen.
"""
from typing import Callable, Dict


class Notification:  # Base class for one-off events
    ...


class LongLasting:  # Base class for events describing an ongoing operation
    ...


class SolveStarted(Notification):
    def __init__(self, delta: float):
        self.delta = delta


class IterationProgress(LongLasting):
    """Issued after every application of the profile map."""

    def __init__(self, delta: float, iteration: int, residual: float, ratio, eps: float, teps: float):
        self.delta = delta
        self.iteration = iteration
        self.residual = residual
        self.ratio = ratio
        self.eps = eps
        self.teps = teps


class SolveFinished(Notification):
    def __init__(self, result):
        self.result = result


class SweepProgress(LongLasting):
    def __init__(self, total: int):
        self.done = 0
        self.total = total
        self.failed = 0

    @property
    def finished(self):
        return self.done >= self.total


class Notifier:
    def __init__(self):
        self._hook_list: Dict[str, Callable[[object], None]] = {}

    def spread_event(self, event: object):
        for hook in tuple(self._hook_list.values()):
            hook(event)

    def add_hook(self, hook_id: str, hook: Callable[[object], None]):
        self._hook_list[hook_id] = hook

    def remove_hook(self, hook_id: str):
        del self._hook_list[hook_id]


def spread(notifier, event: object):
    if notifier is not None:
        notifier.spread_event(event)
