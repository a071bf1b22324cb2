"""Scalar metrics and statistics: AUC, EER, equivalent d-prime, Kendall tau-b,
and the dependent paired t-test.

ROC AUC is computed exactly as the pairwise statistic
``P(score_pos > score_neg) + 0.5 * P(tie)`` from integer pair counts, so it
matches a brute-force pair enumeration bit for bit. The equivalent d-prime
maps an AUC to ``sqrt(2) * Z(AUC)`` with the standard-normal quantile ``Z``
accurate to better than 1e-9; averaging d-prime across tasks is the model
ordering scalar used throughout the report layer.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import stdtr

from .errors import DegenerateInputError, InvalidInputError

log = logging.getLogger("melstill.metrics")

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ScoredExamples:
    """Per-example scores with true labels; scores may be a (n, K) matrix."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        labels = np.asarray(self.labels)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels)
        if scores.shape[0] != labels.shape[0]:
            raise InvalidInputError("scores and labels must have equal length")
        if labels.size == 0:
            raise InvalidInputError("empty example set")


@dataclass(frozen=True)
class StatTestResult:
    t_statistic: float
    p_value: float
    n: int
    note: str = ""


def _check_binary(labels) -> np.ndarray:
    labels = np.asarray(labels)
    pos = labels == 1
    if not pos.any() or pos.all():
        raise DegenerateInputError("binary metric requires both classes present")
    return pos


def roc_auc(scores, labels) -> float:
    """Exact ROC AUC: fraction of (pos, neg) pairs correctly ordered, ties half."""
    scores = np.asarray(scores, dtype=np.float64)
    pos = _check_binary(labels)
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    p = pos[order]
    wins = 0
    ties = 0
    neg_below = 0
    i = 0
    n = len(s)
    while i < n:
        j = i
        while j < n and s[j] == s[i]:
            j += 1
        pos_here = int(p[i:j].sum())
        neg_here = (j - i) - pos_here
        wins += pos_here * neg_below
        ties += pos_here * neg_here
        neg_below += neg_here
        i = j
    n_pos = int(pos.sum())
    n_neg = len(s) - n_pos
    return (wins + 0.5 * ties) / (n_pos * n_neg)


# Acklam's rational approximation to the standard normal quantile, refined by
# one Halley step against the erfc-based CDF; absolute error < 1e-14.
_ACKLAM_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
             1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_ACKLAM_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
             6.680131188771972e+01, -1.328068155288572e+01)
_ACKLAM_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
             -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_ACKLAM_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
             3.754408661907416e+00)


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / SQRT2)


def _quantile_lower_half(p: float) -> float:
    """Acklam estimate plus one Halley step, for p <= 0.5. Working in the
    lower tail keeps the CDF residual relatively accurate: the tail
    probability 0.5*erfc(-x/sqrt(2)) is small there, so forming
    ``cdf - p`` loses no precision."""
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    if p < 0.02425:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    else:
        q = p - 0.5
        r = q * q
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    err = 0.5 * math.erfc(-x / SQRT2) - p
    u = err * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def normal_quantile(p: float) -> float:
    """Inverse standard-normal CDF for p in (0, 1).

    Refined against the erfc-based CDF; the upper half maps to the lower
    half by symmetry (1 - p is exact there), giving absolute error below
    1e-12 wherever float64 can represent the answer.
    """
    if not 0.0 < p < 1.0:
        raise InvalidInputError(f"quantile argument must lie in (0, 1), got {p}")
    if p > 0.5:
        return -_quantile_lower_half(1.0 - p)
    return _quantile_lower_half(p)


def d_prime(auc: float) -> float:
    """Equivalent d-prime of an AUC: sqrt(2) * Z(AUC)."""
    if not 0.0 <= auc <= 1.0:
        raise InvalidInputError(f"AUC must lie in [0, 1], got {auc}")
    if auc == 0.0 or auc == 1.0:
        sentinel = math.inf if auc == 1.0 else -math.inf
        log.warning("degenerate AUC %s: d-prime is unbounded, returning %s", auc, sentinel)
        return sentinel
    return SQRT2 * normal_quantile(auc)


def equal_error_rate(scores, labels) -> float:
    """Rate where FPR and FNR cross, linearly interpolated between adjacent
    ROC operating points (threshold sweep over the sorted unique scores)."""
    scores = np.asarray(scores, dtype=np.float64)
    pos = _check_binary(labels)
    n_pos = int(pos.sum())
    n_neg = len(scores) - n_pos
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    p = pos[order]

    fpr_prev, fnr_prev = 0.0, 1.0
    tp = 0
    fp = 0
    i = 0
    n = len(s)
    while i < n:
        j = i
        while j < n and s[j] == s[i]:
            j += 1
        tp += int(p[i:j].sum())
        fp += (j - i) - int(p[i:j].sum())
        fpr = fp / n_neg
        fnr = (n_pos - tp) / n_pos
        d_here = fnr - fpr
        if d_here <= 0.0:
            d_prev = fnr_prev - fpr_prev
            t = d_prev / (d_prev - d_here)
            return fpr_prev + t * (fpr - fpr_prev)
        fpr_prev, fnr_prev = fpr, fnr
        i = j
    return fpr_prev  # unreachable: the final operating point has fnr = 0


def macro_ovr_auc(scores, labels) -> float:
    """Macro-averaged one-vs-rest AUC for a (n, K) class-score matrix."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim == 1:
        return roc_auc(scores, labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise DegenerateInputError("macro AUC requires at least two classes present")
    per_class = [roc_auc(scores[:, int(k)], (labels == k).astype(int)) for k in classes]
    return float(np.mean(per_class))


def average_d_prime(aucs) -> float:
    """Unweighted mean of per-task equivalent d-prime values.

    Degenerate AUCs propagate their infinite sentinel into the mean; callers
    ordering models must exclude non-finite aggregates.
    """
    aucs = list(aucs)
    if not aucs:
        raise InvalidInputError("average_d_prime requires at least one task AUC")
    values = [d_prime(a) for a in aucs]
    if not all(math.isfinite(v) for v in values):
        log.warning("average d-prime over %s contains an unbounded task value", aucs)
    return float(np.mean(values))


def kendall_tau(order_a, order_b) -> float:
    """Tie-corrected Kendall rank coefficient (tau-b) between two score lists."""
    a = np.asarray(order_a, dtype=np.float64)
    b = np.asarray(order_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise InvalidInputError("kendall_tau requires two equal-length 1-D score lists")
    n = a.size
    if n < 2:
        raise InvalidInputError("kendall_tau requires n >= 2")
    iu = np.triu_indices(n, k=1)
    da = np.sign(a[:, None] - a[None, :])[iu]
    db = np.sign(b[:, None] - b[None, :])[iu]
    prod = da * db
    concordant = int((prod > 0).sum())
    discordant = int((prod < 0).sum())
    n0 = n * (n - 1) // 2
    n1 = int((da == 0).sum())
    n2 = int((db == 0).sum())
    if n0 == n1 or n0 == n2:
        raise DegenerateInputError("kendall_tau undefined for an all-tied score list")
    return (concordant - discordant) / math.sqrt((n0 - n1) * (n0 - n2))


def paired_t_test(a, b) -> StatTestResult:
    """Dependent t-test on paired samples; two-sided p from Student's t."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise InvalidInputError("paired_t_test requires two equal-length 1-D samples")
    n = a.size
    if n < 2:
        raise InvalidInputError("paired_t_test requires n >= 2")
    diff = a - b
    mean = float(diff.mean())
    sd = float(diff.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return StatTestResult(0.0, 1.0, n, note="no-effect: all differences zero")
        t = math.inf if mean > 0 else -math.inf
        return StatTestResult(t, 0.0, n, note="zero-variance differences with nonzero mean")
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * float(stdtr(n - 1, -abs(t)))
    return StatTestResult(t, p, n)


def accuracy(predicted, labels) -> float:
    predicted = np.asarray(predicted)
    labels = np.asarray(labels)
    if predicted.shape != labels.shape:
        raise InvalidInputError("predictions and labels must have equal length")
    return float((predicted == labels).mean())
