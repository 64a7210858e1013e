"""Reference implementations written independently of the package, for cross-checks."""

from __future__ import annotations

import itertools
import math
import re


def truth_table_anf(f, n):
    """Algebraic normal form of a Boolean function by Moebius transform.

    ``f`` takes a tuple (x_1..x_n); returns the set of monomials as sorted tuples of 1-based indices.
    """
    coeffs = {}
    for point in itertools.product((0, 1), repeat=n):
        coeffs[point] = f(point) & 1
    # in-place Moebius transform over the cube
    for i in range(n):
        for point in itertools.product((0, 1), repeat=n):
            if point[i] == 1:
                lower = point[:i] + (0,) + point[i + 1 :]
                coeffs[point] ^= coeffs[lower]
    return {tuple(j + 1 for j in range(n) if p[j]) for p, c in coeffs.items() if c}


def delta_poly(bits):
    """ANF of the indicator of a single bit string, via its truth table."""
    n = len(bits)
    return truth_table_anf(lambda x: int(tuple(x) == tuple(bits)), n)


_TERM = re.compile(r"x_?(\d+)")


def parse_table_poly(text):
    """Parse a LaTeX table cell like ``$1+x_1+x_2x_3$`` into a set of index tuples."""
    out = set()
    for term in text.replace("$", "").replace(" ", "").split("+"):
        if not term:
            continue
        mono = () if term == "1" else tuple(sorted(int(i) for i in _TERM.findall(term)))
        out ^= {mono}
    return out


def eval_monomials(monos, x):
    """Evaluate a set of index tuples at x (tuple of 0/1, x_1 first) mod 2."""
    return sum(all(x[i - 1] for i in m) for m in monos) & 1


def lookup(memory, address):
    return memory[address]


def grover_recurrence(N, marked_count, iterations):
    """Exact amplitude recurrence for uniform marked/unmarked amplitudes."""
    a = b = 1 / math.sqrt(N)  # marked, unmarked amplitude
    k = marked_count
    for _ in range(iterations):
        a = -a
        mean = (k * a + (N - k) * b) / N
        a, b = 2 * mean - a, 2 * mean - b
    return k * a * a


def distill_rounds_bruteforce(p_in, p_out, cap=10):
    p = p_in
    for r in range(1, cap + 1):
        p = 35 * p**3
        if p < p_out:
            return r
    return None


def indicator_by_ckx(S, n, x):
    """Direct semantics of a cascade of multi-controlled NOTs, one per accepted string."""
    return int("".join(map(str, x)) in set(S))
