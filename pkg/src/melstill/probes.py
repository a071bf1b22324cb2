"""Linear-probe evaluation protocol.

For each (model, task) pair: standardize embeddings with train-split
statistics, train three linear model variants on the train split, pick the
variant that scores best on dev, then report that variant's test metric.
Test data never influences the selection.

The three variants are multinomial logistic regression at two L2 strengths
(1.0 and 1e-3 on the mean-loss scale) and shrinkage-regularized LDA. Ties on
the dev score break by the fixed order strong, weak, lda.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import DegenerateInputError, InvalidInputError
from .metrics import accuracy, equal_error_rate, macro_ovr_auc

VARIANT_ORDER = ("logreg-l2-strong", "logreg-l2-weak", "lda")


@dataclass(frozen=True)
class ProbeConfig:
    variant: str
    regularization: float
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANT_ORDER:
            raise InvalidInputError(f"unknown probe variant {self.variant!r}")
        if self.regularization <= 0:
            raise InvalidInputError("regularization must be positive")


DEFAULT_PROBES = (
    ProbeConfig("logreg-l2-strong", 1.0),
    ProbeConfig("logreg-l2-weak", 1e-3),
    ProbeConfig("lda", 0.1),
)


@dataclass
class LinearProbe:
    variant: str
    classes: np.ndarray
    weights: np.ndarray          # (d, K)
    bias: np.ndarray             # (K,)
    mean: np.ndarray             # train-split standardization
    scale: np.ndarray

    def scores(self, x: np.ndarray) -> np.ndarray:
        """Per-class softmax scores, (n, K)."""
        z = (np.asarray(x, dtype=np.float64) - self.mean) / self.scale
        logits = z @ self.weights + self.bias
        logits -= logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.classes[np.argmax(self.scores(x), axis=1)]


@dataclass(frozen=True)
class ProbeResult:
    variant: str
    dev_score: float
    test_score: float
    dev_accuracy: float
    test_accuracy: float
    dev_auc: float
    test_auc: float
    dev_scores: np.ndarray = field(repr=False)
    test_scores: np.ndarray = field(repr=False)
    dev_labels: np.ndarray = field(repr=False)
    test_labels: np.ndarray = field(repr=False)

    def to_row(self, model_id: str, task: str) -> dict:
        return {
            "model_id": model_id,
            "task": task,
            "variant": self.variant,
            "dev_score": self.dev_score,
            "test_score": self.test_score,
            "dev_accuracy": self.dev_accuracy,
            "test_accuracy": self.test_accuracy,
            "dev_auc": self.dev_auc,
            "test_auc": self.test_auc,
        }


def _check_train_set(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    classes = np.unique(y)
    if classes.size < 2:
        raise DegenerateInputError("probe training requires at least two classes")
    std = x.std(axis=0)
    if np.all(std == 0):
        raise DegenerateInputError("all training embeddings are identical")
    return classes


def _fit_logreg(z: np.ndarray, y_idx: np.ndarray, k: int, lam: float):
    """Full-batch multinomial logistic regression with L2 penalty on weights,
    minimized deterministically (L-BFGS, zero init) to gradient tolerance."""
    n, d = z.shape
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y_idx] = 1.0

    def objective(theta):
        w = theta[: d * k].reshape(d, k)
        b = theta[d * k:]
        logits = z @ w + b
        logits -= logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        probs = e / e.sum(axis=1, keepdims=True)
        ce = -np.mean(np.log(np.maximum(probs[np.arange(n), y_idx], 1e-300)))
        loss = ce + 0.5 * lam * np.sum(w * w)
        dlogits = (probs - onehot) / n
        gw = z.T @ dlogits + lam * w
        gb = dlogits.sum(axis=0)
        return loss, np.concatenate([gw.reshape(-1), gb])

    theta0 = np.zeros(d * k + k)
    res = minimize(objective, theta0, jac=True, method="L-BFGS-B",
                   options={"gtol": 1e-6, "ftol": 0.0, "maxiter": 2000})
    w = res.x[: d * k].reshape(d, k)
    b = res.x[d * k:]
    return w, b


def _fit_lda(z: np.ndarray, y_idx: np.ndarray, k: int, shrinkage: float):
    """LDA with shared covariance shrunk toward a scaled identity."""
    n, d = z.shape
    means = np.stack([z[y_idx == c].mean(axis=0) for c in range(k)])
    centered = z - means[y_idx]
    cov = centered.T @ centered / max(n - k, 1)
    cov = (1.0 - shrinkage) * cov + shrinkage * (np.trace(cov) / d) * np.eye(d)
    priors = np.array([(y_idx == c).mean() for c in range(k)])
    inv_means = np.linalg.solve(cov, means.T)          # (d, K)
    w = inv_means
    b = -0.5 * np.sum(means.T * inv_means, axis=0) + np.log(priors)
    return w, b


def train_probe(embeddings: np.ndarray, labels: np.ndarray, pc: ProbeConfig) -> LinearProbe:
    """Fit one linear probe variant on train-split embeddings."""
    x = np.asarray(embeddings, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise InvalidInputError("embeddings must be (n, d) matching labels")
    classes = _check_train_set(x, y)
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale = np.where(scale == 0, 1.0, scale)
    z = (x - mean) / scale
    y_idx = np.searchsorted(classes, y)
    k = classes.size
    if pc.variant == "lda":
        w, b = _fit_lda(z, y_idx, k, pc.regularization)
    else:
        w, b = _fit_logreg(z, y_idx, k, pc.regularization)
    return LinearProbe(pc.variant, classes, w, b, mean, scale)


def _split_metric(probe: LinearProbe, x, y, metric: str) -> float:
    if metric == "eer":
        scores = probe.scores(x)[:, 1]
        positive = (np.asarray(y) == probe.classes[1]).astype(int)
        return equal_error_rate(scores, positive)
    return accuracy(probe.predict(x), y)


def evaluate_task(splits: dict, metric: str = "accuracy",
                  probe_configs=DEFAULT_PROBES) -> ProbeResult:
    """Train all variants, select on dev, report on test.

    ``splits`` maps each of train/dev/test to an (embeddings, labels) pair.
    ``metric`` is the task's selection metric: accuracy (higher better) or
    eer (lower better).
    """
    for name in ("train", "dev", "test"):
        if name not in splits or len(splits[name][1]) == 0:
            raise InvalidInputError(f"missing or empty split {name!r}")
    if metric not in ("accuracy", "eer"):
        raise InvalidInputError(f"unknown selection metric {metric!r}")
    train_x, train_y = splits["train"]
    dev_x, dev_y = splits["dev"]
    test_x, test_y = splits["test"]

    fitted = []
    for pc in probe_configs:
        probe = train_probe(train_x, train_y, pc)
        dev_score = _split_metric(probe, dev_x, dev_y, metric)
        fitted.append((probe, dev_score))

    if metric == "eer":
        best_idx = min(range(len(fitted)), key=lambda i: (fitted[i][1], i))
    else:
        best_idx = max(range(len(fitted)), key=lambda i: (fitted[i][1], -i))
    probe, dev_score = fitted[best_idx]

    test_score = _split_metric(probe, test_x, test_y, metric)
    dev_scores = probe.scores(dev_x)
    test_scores = probe.scores(test_x)
    dev_idx = np.searchsorted(probe.classes, dev_y)
    test_idx = np.searchsorted(probe.classes, test_y)
    return ProbeResult(
        variant=probe.variant,
        dev_score=float(dev_score),
        test_score=float(test_score),
        dev_accuracy=accuracy(probe.predict(dev_x), dev_y),
        test_accuracy=accuracy(probe.predict(test_x), test_y),
        dev_auc=macro_ovr_auc(dev_scores, dev_idx),
        test_auc=macro_ovr_auc(test_scores, test_idx),
        dev_scores=dev_scores,
        test_scores=test_scores,
        dev_labels=dev_idx,
        test_labels=test_idx,
    )
