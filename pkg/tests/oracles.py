"""Independent brute-force oracles used by the test suite.

These deliberately use naive O(n^2) enumeration and direct rule application,
kept separate from the library implementations they verify.
"""

import math

import numpy as np


def auc_pairs(scores, labels):
    """Pairwise AUC: count winning / tied (positive, negative) pairs."""
    wins = 0
    ties = 0
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y != 1]
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1
            elif sp == sn:
                ties += 1
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def eer_threshold_sweep(scores, labels):
    """EER by enumerating every threshold (predict positive iff score >= t),
    then interpolating the FPR/FNR crossing between adjacent points."""
    n_pos = sum(1 for y in labels if y == 1)
    n_neg = len(labels) - n_pos
    thresholds = sorted(set(scores), reverse=True)
    points = [(0.0, 1.0)]
    for t in thresholds:
        tp = sum(1 for s, y in zip(scores, labels) if y == 1 and s >= t)
        fp = sum(1 for s, y in zip(scores, labels) if y != 1 and s >= t)
        points.append((fp / n_neg, (n_pos - tp) / n_pos))
    for (fpr_prev, fnr_prev), (fpr, fnr) in zip(points, points[1:]):
        d_prev = fnr_prev - fpr_prev
        d_here = fnr - fpr
        if d_here <= 0.0:
            t = d_prev / (d_prev - d_here)
            return fpr_prev + t * (fpr - fpr_prev)
    return points[-1][0]


def kendall_tau_b_pairs(a, b):
    """Tau-b from explicit pair loops."""
    n = len(a)
    concordant = discordant = ties_a = ties_b = 0
    for i in range(n):
        for j in range(i + 1, n):
            da = a[i] - a[j]
            db = b[i] - b[j]
            if da == 0:
                ties_a += 1
            if db == 0:
                ties_b += 1
            prod = da * db
            if prod > 0:
                concordant += 1
            elif prod < 0:
                discordant += 1
    n0 = n * (n - 1) // 2
    return (concordant - discordant) / math.sqrt((n0 - ties_a) * (n0 - ties_b))


def normal_quantile_bisect(p, tol=1e-12):
    """Invert the erf-based normal CDF by bisection."""
    lo, hi = -40.0, 40.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if 0.5 * math.erfc(-mid / math.sqrt(2.0)) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def t_sf_quadrature(t, df, grid=2_000_000):
    """P(T_df > t) by trapezoidal quadrature of the t density."""
    # integrate the density from t out to a far tail
    hi = max(abs(t) * 10, 200.0)
    x = np.linspace(t, hi, grid)
    c = math.gamma((df + 1) / 2) / (math.sqrt(df * math.pi) * math.gamma(df / 2))
    pdf = c * (1 + x**2 / df) ** (-(df + 1) / 2)
    return float(np.trapezoid(pdf, x))


def reflect_pad_by_rule(samples, target_len):
    """Direct application of the symmetric reflect-padding rule: the deficit
    splits evenly (odd -> extra sample at the end) and each side mirrors the
    signal around its edge sample without repeating the edge."""
    s = list(samples)
    n = len(s)
    deficit = target_len - n
    if deficit <= 0:
        return s
    left = deficit // 2
    right = deficit - left
    if n == 1:
        return [s[0]] * left + s + [s[0]] * right
    period = list(range(1, n)) + list(range(n - 2, -1, -1))
    left_pad = list(reversed([s[period[k % len(period)]] for k in range(left)]))
    rperiod = list(range(n - 2, -1, -1)) + list(range(1, n))
    right_pad = [s[rperiod[k % len(rperiod)]] for k in range(right)]
    return left_pad + s + right_pad
