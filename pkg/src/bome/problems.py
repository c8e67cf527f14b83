"""Built-in benchmark problems with analytic gradients.

Three small closed-form problems (coreset selection over a convex hull, a
scalar bilinear mini-max game, and a least-squares problem whose inner
minimizer is a whole line) plus two desk-scale learning problems on seeded
synthetic data (training-sample reweighting against label corruption, and
per-coefficient ridge regularization with a learnable log-scale).

Every oracle returns analytic gradients that the gradcheck module verifies by
finite differences; where the inner problem has a closed-form minimizer it is
exposed so exact stationarity reports are available.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    BilevelOracle,
    JointGradient,
    JointPoint,
    NumericalError,
    ProblemMetadata,
)


def softmax(v: np.ndarray) -> np.ndarray:
    """Numerically stable softmax: exp(v - max v) normalized to sum 1."""
    v = np.asarray(v, dtype=float)
    shifted = v - np.max(v)
    e = np.exp(shifted)
    return e / e.sum()


def softmax_jacobian(sigma: np.ndarray) -> np.ndarray:
    """Jacobian of softmax expressed through its output: diag(s) - s s^T."""
    sigma = np.asarray(sigma, dtype=float)
    return np.diag(sigma) - np.outer(sigma, sigma)


# ---------------------------------------------------------------------------
# Coreset: pull theta toward a target while the inner problem pins it to a
# softmax-weighted combination of fixed vertices (i.e. to their convex hull).
# ---------------------------------------------------------------------------

_DEFAULT_X0 = (3.0, -2.0)
_DEFAULT_VERTICES = ((1.0, 3.0), (3.0, 1.0), (-2.0, 2.0), (-3.0, 2.0))


@dataclass
class CoresetProblem:
    """f = ||theta - x0||^2, g = ||theta - X softmax(v)||^2."""

    target_x0: np.ndarray = field(default_factory=lambda: np.array(_DEFAULT_X0))
    vertices_X: np.ndarray = field(
        default_factory=lambda: np.array(_DEFAULT_VERTICES).T
    )

    def __post_init__(self):
        self.target_x0 = np.asarray(self.target_x0, dtype=float)
        self.vertices_X = np.asarray(self.vertices_X, dtype=float)
        if self.vertices_X.ndim != 2 or self.vertices_X.shape[0] != self.target_x0.size:
            raise ValueError("vertices_X must be (dim, n_vertices) with dim matching x0")


def coreset_oracle(prob: Optional[CoresetProblem] = None) -> BilevelOracle:
    """Oracle for the coreset problem; the inner optimum is X softmax(v)."""
    if prob is None:
        prob = CoresetProblem()
    x0, X = prob.target_x0, prob.vertices_X
    n_vert = X.shape[1]
    # one-slot memo: the inner loop evaluates many thetas at a fixed v
    cache = {"key": None, "sigma": None}

    def sigma_of(v: np.ndarray) -> np.ndarray:
        key = v.tobytes()
        if key != cache["key"]:
            cache["key"] = key
            cache["sigma"] = softmax(v)
        return cache["sigma"]

    def eval_f(p: JointPoint) -> float:
        d = p.theta - x0
        return float(d @ d)

    def grad_f(p: JointPoint) -> JointGradient:
        return JointGradient(np.zeros(n_vert), 2.0 * (p.theta - x0))

    def inner_target(v: np.ndarray) -> np.ndarray:
        return X @ sigma_of(np.asarray(v, dtype=float))

    def eval_g(p: JointPoint) -> float:
        d = p.theta - inner_target(p.v)
        return float(d @ d)

    def grad_g(p: JointPoint) -> JointGradient:
        sigma = sigma_of(p.v)
        d = p.theta - X @ sigma
        dv = -2.0 * softmax_jacobian(sigma) @ (X.T @ d)
        return JointGradient(dv, 2.0 * d)

    def grad_g_theta(v: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return 2.0 * (theta - inner_target(v))

    return BilevelOracle(
        eval_f=eval_f,
        grad_f=grad_f,
        eval_g=eval_g,
        grad_g=grad_g,
        exact_inner_opt=inner_target,
        grad_g_theta=grad_g_theta,
        name="coreset",
    )


# ---------------------------------------------------------------------------
# Mini-max: min_v v*theta with theta maximizing v*theta. The inner argmax is
# rewritten as argmin of -v*theta so the uniform minimization contract holds.
# ---------------------------------------------------------------------------


@dataclass
class MinimaxProblem:
    """Scalar bilinear game; the unique solution is the origin."""


def minimax_oracle() -> BilevelOracle:
    """Oracle for the scalar game. No exact inner optimum exists: the inner
    objective is unbounded below for v != 0."""

    def eval_f(p: JointPoint) -> float:
        return float(p.v[0] * p.theta[0])

    def grad_f(p: JointPoint) -> JointGradient:
        return JointGradient(p.theta.copy(), p.v.copy())

    def eval_g(p: JointPoint) -> float:
        return -float(p.v[0] * p.theta[0])

    def grad_g(p: JointPoint) -> JointGradient:
        return JointGradient(-p.theta, -p.v)

    def grad_g_theta(v: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return -v

    meta = ProblemMetadata(
        known_optimum=JointPoint(np.zeros(1), np.zeros(1)), known_f_opt=0.0
    )
    return BilevelOracle(
        eval_f=eval_f,
        grad_f=grad_f,
        eval_g=eval_g,
        grad_g=grad_g,
        grad_g_theta=grad_g_theta,
        metadata=meta,
        name="minimax",
    )


# ---------------------------------------------------------------------------
# Degenerate linear least squares: the inner minimizers form a line, but the
# optimal inner value is identically zero, which is exposed so exact
# stationarity reports stay available without a singleton minimizer.
# ---------------------------------------------------------------------------


@dataclass
class DegenerateLLSProblem:
    """f = ||theta - (v, 1)||^2, g = (theta_1 - v)^2."""


def lls_oracle() -> BilevelOracle:
    def eval_f(p: JointPoint) -> float:
        a = p.theta[0] - p.v[0]
        b = p.theta[1] - 1.0
        return float(a * a + b * b)

    def grad_f(p: JointPoint) -> JointGradient:
        a = p.theta[0] - p.v[0]
        b = p.theta[1] - 1.0
        return JointGradient(np.array([-2.0 * a]), np.array([2.0 * a, 2.0 * b]))

    def eval_g(p: JointPoint) -> float:
        a = p.theta[0] - p.v[0]
        return float(a * a)

    def grad_g(p: JointPoint) -> JointGradient:
        a = p.theta[0] - p.v[0]
        return JointGradient(np.array([-2.0 * a]), np.array([2.0 * a, 0.0]))

    def grad_g_theta(v: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return np.array([2.0 * (theta[0] - v[0]), 0.0])

    return BilevelOracle(
        eval_f=eval_f,
        grad_f=grad_f,
        eval_g=eval_g,
        grad_g=grad_g,
        grad_g_theta=grad_g_theta,
        exact_value=lambda v: 0.0,
        exact_value_grad=lambda v: np.zeros(1),
        name="lls",
    )


# ---------------------------------------------------------------------------
# Training-sample reweighting ("hyper-cleaning"): learn per-sample weights
# clip(v_i, [0,1]) on a corrupted training set so that a multinomial logistic
# model trained on the weighted set performs well on a clean validation set.
# ---------------------------------------------------------------------------


@dataclass
class HypercleanProblem:
    """Synthetic corrupted-label classification instance.

    Features are stored one sample per row. ``corruption_mask`` is ground
    truth (which training labels were flipped) and is used only by tests and
    reporting, never by the oracle.
    """

    train_features: np.ndarray
    train_labels: np.ndarray
    val_features: np.ndarray
    val_labels: np.ndarray
    ridge_c: float = 0.001
    corruption_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        self.train_features = np.asarray(self.train_features, dtype=float)
        self.val_features = np.asarray(self.val_features, dtype=float)
        self.train_labels = np.asarray(self.train_labels, dtype=int)
        self.val_labels = np.asarray(self.val_labels, dtype=int)
        if self.ridge_c < 0:
            raise ValueError(f"ridge_c must be >= 0, got {self.ridge_c}")
        if self.corruption_mask is None:
            self.corruption_mask = np.zeros(self.train_labels.size, dtype=bool)
        self.corruption_mask = np.asarray(self.corruption_mask, dtype=bool)
        classes = np.unique(np.concatenate([self.train_labels, self.val_labels]))
        for cls in classes:
            if cls not in self.train_labels or cls not in self.val_labels:
                raise ValueError(
                    f"degenerate split: class {cls} missing from train or val"
                )

    @property
    def n_features(self) -> int:
        return self.train_features.shape[1]

    @property
    def n_classes(self) -> int:
        return int(max(self.train_labels.max(), self.val_labels.max())) + 1

    @property
    def n_train(self) -> int:
        return self.train_labels.size

    @property
    def theta_dim(self) -> int:
        # weights plus a bias row per class
        return (self.n_features + 1) * self.n_classes


def make_synthetic_hyperclean(
    seed: int, m_tr: int, m_val: int, p: int, corrupt_frac: float
) -> HypercleanProblem:
    """Two Gaussian clusters (one per class), balanced splits, with a fraction
    of training labels flipped to the wrong class.

    Flipping (rather than resampling uniformly over all classes) makes the
    corruption mask exact: every marked sample really carries a wrong label.
    Identical seeds yield bit-identical datasets.
    """
    if not 0.0 <= corrupt_frac < 1.0:
        raise ValueError(f"corrupt_frac must lie in [0, 1), got {corrupt_frac}")
    if m_tr < 2 or m_val < 2:
        raise ValueError("need at least two samples per split")
    rng = np.random.default_rng(seed)
    mu = 1.5 / np.sqrt(p) * np.ones(p)

    def draw(m: int):
        labels = np.arange(m) % 2  # class-balanced
        feats = rng.standard_normal((m, p)) + np.where(labels[:, None] == 1, mu, -mu)
        perm = rng.permutation(m)
        return feats[perm], labels[perm]

    train_x, train_y = draw(m_tr)
    val_x, val_y = draw(m_val)
    n_corrupt = int(round(corrupt_frac * m_tr))
    corrupted = rng.choice(m_tr, size=n_corrupt, replace=False)
    train_y = train_y.copy()
    train_y[corrupted] = 1 - train_y[corrupted]
    mask = np.zeros(m_tr, dtype=bool)
    mask[corrupted] = True
    return HypercleanProblem(
        train_features=train_x,
        train_labels=train_y,
        val_features=val_x,
        val_labels=val_y,
        corruption_mask=mask,
    )


def _augment(features: np.ndarray) -> np.ndarray:
    return np.hstack([features, np.ones((features.shape[0], 1))])


def _logistic_losses(x_aug: np.ndarray, labels: np.ndarray, theta_mat: np.ndarray):
    """Per-sample cross-entropy losses and softmax probabilities."""
    scores = x_aug @ theta_mat
    scores = scores - scores.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(scores).sum(axis=1))
    losses = log_z - scores[np.arange(labels.size), labels]
    probs = np.exp(scores - log_z[:, None])
    return losses, probs


def _label_onehot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def hyperclean_oracle(prob: HypercleanProblem) -> BilevelOracle:
    """Oracle for the reweighting problem.

    f is the mean validation cross-entropy (unweighted); g is the weighted
    training loss sum_i clip(v_i, [0,1]) * loss_i plus c * ||theta||^2. The
    clip's derivative is taken as the indicator of v_i in the open interval
    (0, 1): zero at and outside the boundary.
    """
    x_tr = _augment(prob.train_features)
    x_val = _augment(prob.val_features)
    n_classes = prob.n_classes
    c = prob.ridge_c
    y_tr_onehot = _label_onehot(prob.train_labels, n_classes)
    y_val_onehot = _label_onehot(prob.val_labels, n_classes)
    theta_shape = (x_tr.shape[1], n_classes)

    def unpack(theta: np.ndarray) -> np.ndarray:
        return theta.reshape(theta_shape)

    def eval_f(p: JointPoint) -> float:
        losses, _ = _logistic_losses(x_val, prob.val_labels, unpack(p.theta))
        return float(losses.mean())

    def grad_f(p: JointPoint) -> JointGradient:
        _, probs = _logistic_losses(x_val, prob.val_labels, unpack(p.theta))
        grad_mat = x_val.T @ (probs - y_val_onehot) / x_val.shape[0]
        return JointGradient(np.zeros(prob.n_train), grad_mat.ravel())

    def weights(v: np.ndarray) -> np.ndarray:
        return np.clip(v, 0.0, 1.0)

    def eval_g(p: JointPoint) -> float:
        losses, _ = _logistic_losses(x_tr, prob.train_labels, unpack(p.theta))
        return float(weights(p.v) @ losses + c * (p.theta @ p.theta))

    def grad_g(p: JointPoint) -> JointGradient:
        theta_mat = unpack(p.theta)
        losses, probs = _logistic_losses(x_tr, prob.train_labels, theta_mat)
        inside = (p.v > 0.0) & (p.v < 1.0)
        dv = np.where(inside, losses, 0.0)
        w = weights(p.v)
        grad_mat = x_tr.T @ (w[:, None] * (probs - y_tr_onehot))
        return JointGradient(dv, grad_mat.ravel() + 2.0 * c * p.theta)

    def grad_g_theta(v: np.ndarray, theta: np.ndarray) -> np.ndarray:
        theta_mat = unpack(theta)
        _, probs = _logistic_losses(x_tr, prob.train_labels, theta_mat)
        w = weights(v)
        grad_mat = x_tr.T @ (w[:, None] * (probs - y_tr_onehot))
        return grad_mat.ravel() + 2.0 * c * theta

    return BilevelOracle(
        eval_f=eval_f,
        grad_f=grad_f,
        eval_g=eval_g,
        grad_g=grad_g,
        grad_g_theta=grad_g_theta,
        name="hyperclean",
    )


# ---------------------------------------------------------------------------
# Learnable per-coefficient ridge: the inner objective is the training sum of
# squares plus ||diag(exp(v)) theta||^2, strictly convex in theta for every v,
# with the closed-form normal-equations minimizer exposed.
# ---------------------------------------------------------------------------


@dataclass
class RidgeRegProblem:
    """Regression splits for the learnable-regularization problem."""

    train_A: np.ndarray
    train_y: np.ndarray
    val_A: np.ndarray
    val_y: np.ndarray

    def __post_init__(self):
        self.train_A = np.asarray(self.train_A, dtype=float)
        self.train_y = np.asarray(self.train_y, dtype=float)
        self.val_A = np.asarray(self.val_A, dtype=float)
        self.val_y = np.asarray(self.val_y, dtype=float)
        if self.train_A.shape[1] != self.val_A.shape[1]:
            raise ValueError("train and val designs must share the feature dimension")

    @property
    def dim(self) -> int:
        return self.train_A.shape[1]


def make_synthetic_ridge(
    seed: int, m_tr: int = 50, m_val: int = 30, p: int = 5, noise: float = 0.1
) -> RidgeRegProblem:
    """Random Gaussian design with linear-model targets plus noise."""
    rng = np.random.default_rng(seed)
    theta_true = rng.standard_normal(p)
    train_A = rng.standard_normal((m_tr, p))
    val_A = rng.standard_normal((m_val, p))
    train_y = train_A @ theta_true + noise * rng.standard_normal(m_tr)
    val_y = val_A @ theta_true + noise * rng.standard_normal(m_val)
    return RidgeRegProblem(train_A, train_y, val_A, val_y)


def ridge_oracle(prob: RidgeRegProblem) -> BilevelOracle:
    """Oracle for the learnable-ridge problem.

    Declared smoothness and gradient-dominance constants describe the inner
    problem for v in roughly [-0.5, 0.5]; they are metadata for tests and
    step-size validation only.
    """
    A, y = prob.train_A, prob.train_y
    Av, yv = prob.val_A, prob.val_y
    gram = A.T @ A
    aty = A.T @ y
    eigs = np.linalg.eigvalsh(gram)
    meta = ProblemMetadata(
        smoothness_L=2.0 * (eigs[-1] + np.exp(1.0)),
        pl_constant_kappa=4.0 * (eigs[0] + np.exp(-1.0)),
    )

    def eval_f(p: JointPoint) -> float:
        r = Av @ p.theta - yv
        return float(r @ r)

    def grad_f(p: JointPoint) -> JointGradient:
        r = Av @ p.theta - yv
        return JointGradient(np.zeros(prob.dim), 2.0 * (Av.T @ r))

    def eval_g(p: JointPoint) -> float:
        r = A @ p.theta - y
        pen = np.exp(2.0 * p.v) @ (p.theta * p.theta)
        return float(r @ r + pen)

    def grad_g(p: JointPoint) -> JointGradient:
        r = A @ p.theta - y
        scale = np.exp(2.0 * p.v)
        dv = 2.0 * scale * p.theta * p.theta
        dtheta = 2.0 * (A.T @ r) + 2.0 * scale * p.theta
        return JointGradient(dv, dtheta)

    def grad_g_theta(v: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return 2.0 * (A @ theta - y) @ A + 2.0 * np.exp(2.0 * v) * theta

    def exact_inner_opt(v: np.ndarray) -> np.ndarray:
        system = gram + np.diag(np.exp(2.0 * np.asarray(v, dtype=float)))
        try:
            return np.linalg.solve(system, aty)
        except np.linalg.LinAlgError as exc:  # unreachable for finite v
            raise NumericalError(f"inner normal-equations solve failed: {exc}") from exc

    return BilevelOracle(
        eval_f=eval_f,
        grad_f=grad_f,
        eval_g=eval_g,
        grad_g=grad_g,
        grad_g_theta=grad_g_theta,
        exact_inner_opt=exact_inner_opt,
        metadata=meta,
        name="ridge",
    )


def export_dataset_csv(prob: HypercleanProblem, path, split: str = "train") -> None:
    """Write a synthetic classification split as CSV.

    Columns are feature_0..feature_{p-1}, label, is_corrupted (0/1; always 0
    for the validation split). Floats carry 17 significant digits so the file
    round-trips bit-exactly.
    """
    if split == "train":
        feats, labels = prob.train_features, prob.train_labels
        mask = prob.corruption_mask
    elif split == "val":
        feats, labels = prob.val_features, prob.val_labels
        mask = np.zeros(labels.size, dtype=bool)
    else:
        raise ValueError(f"split must be 'train' or 'val', got {split!r}")
    header = [f"feature_{j}" for j in range(feats.shape[1])] + ["label", "is_corrupted"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(labels.size):
            row = [format(x, ".17g") for x in feats[i]]
            row.append(str(int(labels[i])))
            row.append(str(int(mask[i])))
            writer.writerow(row)
