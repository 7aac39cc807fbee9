"""Pointwise checks of the corecursor equations on sampled inputs."""

import random

from corec.interp import arity_desc
from corec.mixed import mixed_equation_rhs
from corec.registry import random_args, sample_pool
from corec.runtime import characteristic_rhs, corecursor, deep, observe


def sample_inputs(fn, prog, samples, rng):
    """Argument tuples for fn: random rational codata and naturals below 7."""
    codt = fn.codt
    pool = sample_pool(codt, rng)
    params = fn.decl.params
    if not params:
        return [()] * samples
    k = arity_desc(params, codt.name)
    out = []
    for _ in range(samples):
        data = random_args(k, pool, rng).data
        out.append(tuple(x % 7 if isinstance(x, int) and not isinstance(x, bool) else x for x in data))
    return out


def characteristic_failures(fn, prog, samples=200, depth=5, seed=0):
    """Inputs where f a and the seed's right-hand side observe differently."""
    s = fn.seed
    f = lambda b: corecursor(s)(s, b)
    bad = []

    def run():
        for a in sample_inputs(fn, prog, samples, random.Random(seed)):
            if observe(fn.impl(*a), depth) != observe(characteristic_rhs(s, f, a), depth):
                bad.append(a)

    deep(run)
    return bad


def mixed_failures(fn, prog, samples=100, depth=4, seed=0):
    bad = []

    def run():
        for a in sample_inputs(fn, prog, samples, random.Random(seed)):
            if observe(fn.impl(*a), depth) != observe(mixed_equation_rhs(fn.seed, fn.impl, a), depth):
                bad.append(a)

    deep(run)
    return bad
