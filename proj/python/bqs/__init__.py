import json

from ._bqs import *  # noqa: F401,F403
from ._bqs import BqsError, run_acceptance as _run_acceptance, verify_bounds_sampled as _verify_bounds_sampled


def acceptance(ids=()):
    return json.loads(_run_acceptance(list(ids)))


def bounds(p, samples=1000, seed=1):
    return json.loads(_verify_bounds_sampled(p, samples=samples, seed=seed))
