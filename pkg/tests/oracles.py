"""Independent reference computations on plain Python lists.

Nothing here imports corec; these are the values the package is checked
against, and the frozen constants in the tests were produced by them.
"""

from math import comb, factorial


def primes(k):
    out, n = [], 2
    while len(out) < k:
        if all(n % p for p in range(2, int(n**0.5) + 1)):
            out.append(n)
        n += 1
    return out


def catalan(k):
    return [comb(2 * n, n) // (n + 1) for n in range(1, k + 1)]


def factorials(k):
    return [factorial(n) for n in range(1, k + 1)]


def fib(k):
    a, b, out = 0, 1, []
    for _ in range(k):
        out.append(a)
        a, b = b, a + b
    return out


# stream calculus on finite prefixes


def plus(xs, ys):
    return [x + y for x, y in zip(xs, ys)]


def times(xs, ys):
    """Shuffle product: (xs ⊗ ys)_n = Σ_k C(n,k) xs_k ys_(n-k)."""
    n = min(len(xs), len(ys))
    return [sum(comb(m, k) * xs[k] * ys[m - k] for k in range(m + 1)) for m in range(n)]


def exp(xs):
    """exp xs: head 2^(xs_0), derivative xs' ⊗ exp xs."""
    n = len(xs)
    if n == 0:
        return []
    # e_(m+1) = Σ_k C(m,k) xs_(k+1) e_(m-k)
    e = [2 ** xs[0]]
    for m in range(n - 1):
        e.append(sum(comb(m, k) * xs[k + 1] * e[m - k] for k in range(m + 1)))
    return e


def fac_stream(k):
    """facA = (1:facA) ⊗ (1:facA): the factorials from 0!."""
    out = []
    for _ in range(k):
        s = [1] + out
        out = times(s, s)[: len(out) + 1]
    return out


# trees as (label, [children]) with finite depth


def tree_plus(t, u):
    return (t[0] + u[0], [tree_plus(a, b) for a, b in zip(t[1], u[1])])


def tree_times(t, u):
    return (t[0] * u[0], [tree_plus(tree_times(t, b), tree_times(a, u)) for a, b in zip(t[1], u[1])])


def spine(n, depth):
    if depth == 0:
        return None
    return (n, [x for x in (spine(n + 1, depth - 1), (n, [])) if x is not None])


def lfilter_even(xs):
    return [x for x in xs if x % 2 == 0]


def primes_stall(fuel):
    """Seed (m, n) of primes(1, 2) that asks for one unguarded step more than `fuel` allows."""
    from math import gcd

    m, n = 1, 2
    while True:
        used = 0
        while not ((m == 0 and n > 1) or gcd(m, n) == 1):
            if used >= fuel:
                return (m, n)
            used += 1
            n += 1
        m, n = m * n, n + 1
