"""Python access to the oceanbo search, surrogate and data routines."""

import json

from . import _core
from ._core import (
    ConfigError,
    ExtraTrees,
    FormatError,
    ShapeError,
    generate_ensemble,
    hypervolume2d,
    non_dominated,
    quantile_transform,
    rfft2,
    sample_c,
    scalarize,
    ucb,
)

__all__ = [
    "ConfigError",
    "ExtraTrees",
    "FormatError",
    "Optimizer",
    "ShapeError",
    "decode",
    "default_space",
    "encode",
    "generate_ensemble",
    "hypervolume2d",
    "non_dominated",
    "quantile_transform",
    "rfft2",
    "sample_c",
    "sample_random",
    "scalarize",
    "space_hash",
    "synthetic_space",
    "ucb",
    "validation_errors",
]


def _space_json(space):
    return "" if space is None else json.dumps(space)


def default_space():
    return json.loads(_core.default_space_json())


def synthetic_space():
    return json.loads(_core.synthetic_space_json())


def space_hash(space=None):
    return _core.space_hash(_space_json(space))


def validation_errors(config, space=None):
    return _core.validation_errors(_space_json(space), json.dumps(config))


def encode(config, space=None):
    return _core.encode(_space_json(space), json.dumps(config))


def decode(coords, space=None):
    return json.loads(_core.decode(_space_json(space), list(coords)))


def sample_random(seed, space=None):
    return json.loads(_core.sample_random(_space_json(space), seed))


class Optimizer:
    """Ask/tell front end of the native optimizer; configurations are dicts."""

    def __init__(self, space=None, seed=0, n_initial=10):
        self._opt = _core.Optimizer(_space_json(space), seed, n_initial)

    def ask(self, q=1):
        return [json.loads(c) for c in self._opt.ask(q)]

    def tell(self, config, objectives=None, failure=None):
        self._opt.tell(json.dumps(config), objectives, failure)

    def synthetic(self, config):
        return self._opt.synthetic(json.dumps(config))

    @property
    def n_trials(self):
        return self._opt.n_trials
