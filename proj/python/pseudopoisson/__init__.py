"""Bivariate pseudo-Poisson models with exponential and Lomax regression.

Results are plain dicts mirroring the command-line JSON output.
"""

import json

from . import _core
from ._core import DomainError, Error, ExistenceError, UsageError

__all__ = [
    "DomainError",
    "Error",
    "ExistenceError",
    "UsageError",
    "fit",
    "lrt",
    "population_moments",
    "report",
    "rho_bounds",
    "run_cli",
    "sample_moments",
    "simulate",
    "version",
]

__version__ = _core.version()


def _pairs(data):
    return [(int(a), int(b)) for a, b in data]


def version():
    return _core.version()


def population_moments(params):
    """params: {"family": "exp" | "lomax", "alpha", "beta", "gamma", "delta"[, "eta"]}"""
    return json.loads(_core.population_moments(json.dumps(params)))


def sample_moments(data):
    return json.loads(_core.sample_moments(_pairs(data)))


def fit(data, model="exp:full", method="mle", restarts=None):
    """Fits one model to (x1, x2) pairs; method is "mle" or "mme"."""
    args = {} if restarts is None else {"restarts": restarts}
    return json.loads(_core.fit(model, _pairs(data), method, **args))


def report(data, models=(), tests=True):
    """Fits every model (or the given selectors) and ranks them by AIC."""
    return json.loads(_core.report(_pairs(data), list(models), tests))


def lrt(full, sub, level=0.05, data=None):
    """Likelihood-ratio test between two fit dicts from fit()."""
    pairs = [] if data is None else _pairs(data)
    return json.loads(_core.lrt(json.dumps(full), json.dumps(sub), level, pairs))


def rho_bounds(model):
    return json.loads(_core.rho_bounds(model))


def simulate(model, params, n, seed=1):
    return _core.simulate(model, json.dumps(params), n, seed)


def run_cli(*args):
    """Runs the command-line tool in-process; returns (exit_code, stdout, stderr)."""
    return _core.run_cli([str(a) for a in args])
