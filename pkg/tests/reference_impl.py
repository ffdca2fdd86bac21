"""Straight-line transcription of the elimination pseudocode.

Deliberately naive: Fractions for points, one oracle call per query, plain
lists of observations.  Shares nothing with ``bmopt.optimizer`` except the
oracle and the eta / alpha formulas written out again here.
"""

import math
from fractions import Fraction

from bmopt.bm_core import DyadicPoint


def _eta(x, delta):
    return math.sqrt(2.5 * x * math.log(2.0 / (x * delta)))


def _alpha(x, delta):
    return math.sqrt(6.0 * x * math.log(1.0 / (x * delta)))


def reference_run(oracle, delta, sigma2):
    """Returns (ordered list of queried Fractions, epochs completed, truncated)."""
    T = oracle.budget
    obs = {Fraction(0): None}  # W(0) = 0 is known
    queried = []

    def avg(x):
        if x == 0:
            return 0.0
        return math.fsum(obs[x]) / len(obs[x])

    def ask(x):
        y = oracle.query(DyadicPoint.from_fraction(x))
        obs.setdefault(x, []).append(y)
        queried.append(x)

    for _ in range(max(1, math.ceil(sigma2))):
        if len(queried) == T:
            return queried, 0, True
        ask(Fraction(1))

    intervals = [(Fraction(0), Fraction(1))]
    h = 0
    while len(queried) < T:
        width = float(intervals[0][1] - intervals[0][0])
        ucbs, lcbs = [], []
        for a, b in intervals:
            ucbs.append(max(avg(a), avg(b)) + (_eta(width, delta) + _alpha(width, delta)))
            lcbs.append(min(avg(a), avg(b)) - (_eta(width, delta) + _alpha(width, delta)))
        best = max(lcbs)
        chosen = [iv for iv, u in zip(intervals, ucbs) if u >= best]
        new_intervals = set()
        points = set()
        for a, b in chosen:
            m = (a + b) / 2
            new_intervals.add((a, m))
            new_intervals.add((m, b))
            points.update((a, m, b))
        n_h = max(1, math.ceil(sigma2 * 2 ** (h + 1)))
        for x in sorted(points):
            if x == 0:
                continue
            have = len(obs.get(x, []))
            for _ in range(n_h - have):
                if len(queried) == T:
                    return queried, h, True
                ask(x)
        intervals = sorted(new_intervals)
        h += 1
    return queried, h, False
