"""Feedback-model evaluation harness.

Thin wrapper over the native core: states, snapshots, configs and reports
are plain dicts here and JSON inside the extension.
"""

import json

from . import _core
from ._core import ConfigError, Error, TransportError

__all__ = [
    "ConfigError", "Error", "TransportError", "Tables", "domains", "solve",
    "build_dataset", "prompt", "parse_feedback", "oracle_answer", "query",
    "run_gen", "run_eval", "run_report", "verbalize",
]


def _dump(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


def domains():
    return list(_core.domains())


class Tables:
    """Exact optimal values of one domain, keyed by encoded states."""

    def __init__(self, domain):
        self._t = _core.Tables(domain)

    def __len__(self):
        return len(self._t)

    def summary(self):
        return json.loads(self._t.summary())

    def actions(self):
        return list(self._t.actions())

    def initial_states(self):
        return json.loads(self._t.initial_states())

    def distance(self, state):
        """Steps to the goal, or None when unreachable."""
        return self._t.distance(_dump(state))

    def value(self, state):
        return self._t.value(_dump(state))

    def q(self, state, action):
        return self._t.q(_dump(state), action)

    def optimal_actions(self, state):
        return list(self._t.optimal_actions(_dump(state)))

    def legal_actions(self, state):
        return list(self._t.legal_actions(_dump(state)))

    def step(self, state, action):
        return json.loads(self._t.step(_dump(state), action))

    def render(self, state, egocentric=False):
        return self._t.render(_dump(state), egocentric)

    def build(self, spec):
        """Snapshots for a dataset spec (the domain is implied)."""
        text = self._t.build(_dump(spec))
        return [json.loads(line) for line in text.splitlines() if line]

    def prompt(self, snapshot, condition=None):
        return self._t.prompt(_dump(snapshot), _dump(condition or {}))


def solve(domain):
    return Tables(domain)


def build_dataset(spec):
    return Tables(spec["domain"]).build(spec)


def prompt(snapshot, condition=None):
    return Tables(snapshot["domain"]).prompt(snapshot, condition)


def parse_feedback(snapshot, raw):
    """Parses and scores a raw response: {"error", "parsed", "correct"}."""
    return json.loads(_core.parse_feedback(_dump(snapshot), raw))


def oracle_answer(snapshot):
    return _core.oracle_answer(_dump(snapshot))


def query(model, snapshot, condition=None):
    return _core.query(_dump(model), _dump(snapshot), _dump(condition or {}))


def run_gen(config):
    return json.loads(_core.run_gen(_dump(config)))


def run_eval(config, stop_after=0):
    return json.loads(_core.run_eval(_dump(config), stop_after))


def run_report(output_dir, baseline="baseline"):
    return json.loads(_core.run_report(str(output_dir), baseline))


def verbalize(dataset, snapshot_id, condition=None):
    return _core.verbalize(str(dataset), snapshot_id, _dump(condition or {}))
