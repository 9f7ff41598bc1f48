"""Python access to the autograph reward server kernels."""

import json

from ._core import (
    AutographError,
    answer_f1,
    compose_reward,
    group_advantages,
    grpo_objective,
    indexing_reward,
    parse_triples,
    repetition_penalty,
)
from ._core import Scorer as _Scorer

__all__ = [
    "AutographError",
    "Scorer",
    "answer_f1",
    "compose_reward",
    "group_advantages",
    "grpo_objective",
    "indexing_reward",
    "parse_triples",
    "repetition_penalty",
]


class Scorer:
    """In-process equivalent of POST /v1/score.

    `config` uses the same keys as the server's JSON config file.
    """

    def __init__(self, config=None):
        self._impl = _Scorer(json.dumps(config or {}))

    @property
    def config(self):
        return json.loads(self._impl.config())

    def score(self, request):
        """Returns (status, body) with the body decoded."""
        body = request if isinstance(request, str) else json.dumps(request)
        status, text = self._impl.score(body)
        return status, json.loads(text)
