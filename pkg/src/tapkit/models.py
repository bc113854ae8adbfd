"""Linear adaptive models over tapped datasets.

Batch fitting solves the ridge-regularized normal equations (bias
unpenalized); the online variant is a plain LMS step. An optional quadratic
feature expansion appends all pairwise products x_i * x_j with i <= j, in
row-major upper-triangle order, after the linear terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np

from .errors import TapkitError
from .smcore import _fmt

FEATURE_MAPS = ("identity", "quadratic")


def feature_dim(d_in: int, feature_map: str) -> int:
    if feature_map == "identity":
        return d_in
    if feature_map == "quadratic":
        return d_in + d_in * (d_in + 1) // 2
    raise TapkitError(f"unknown feature map {feature_map!r}; expected {FEATURE_MAPS}")


def input_dim(d_feat: int, feature_map: str) -> int:
    """Invert :func:`feature_dim`."""
    if feature_map == "identity":
        return d_feat
    if feature_map == "quadratic":
        d = int(round((math.sqrt(8 * d_feat + 9) - 3) / 2))
        if feature_dim(d, "quadratic") != d_feat:
            raise TapkitError(f"{d_feat} is not a quadratic feature dimension")
        return d
    raise TapkitError(f"unknown feature map {feature_map!r}; expected {FEATURE_MAPS}")


def features(x: np.ndarray, feature_map: str) -> np.ndarray:
    """Map raw inputs (N, d) or (d,) to the model's feature space."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    X = arr[None, :] if single else arr
    if feature_map == "identity":
        out = X
    elif feature_map == "quadratic":
        d = X.shape[1]
        pairs = [X[:, i] * X[:, j] for i in range(d) for j in range(i, d)]
        out = np.column_stack([X] + pairs) if pairs else X
    else:
        raise TapkitError(f"unknown feature map {feature_map!r}; expected {FEATURE_MAPS}")
    return out[0] if single else out


@dataclass(frozen=True)
class LinearModel:
    """Affine map y = W phi(x) + b in a fixed feature space."""

    W: np.ndarray
    b: np.ndarray
    feature_map: str = "identity"
    ridge: float = 0.0

    @property
    def d_out(self) -> int:
        return self.W.shape[0]

    @property
    def d_feat(self) -> int:
        return self.W.shape[1]

    @property
    def d_in(self) -> int:
        return input_dim(self.d_feat, self.feature_map)


def zero_model(d_in: int, d_out: int, feature_map: str = "identity") -> LinearModel:
    df = feature_dim(d_in, feature_map)
    return LinearModel(np.zeros((d_out, df)), np.zeros(d_out), feature_map, 0.0)


def fit(dataset, feature_map: str = "identity", ridge: float = 0.0) -> LinearModel:
    """Least-squares fit of Y on phi(X) via the normal equations.

    Minimizes sum ||y - W phi(x) - b||^2 + ridge * ||W||_F^2 (bias free).
    Masked dataset cells already carry their fill value, which is what the
    fit sees. With ridge=0 a rank-deficient system is rejected instead of
    silently pseudo-inverted.
    """
    X, Y = np.asarray(dataset.X, dtype=float), np.asarray(dataset.Y, dtype=float)
    if X.shape[0] < 1:
        raise TapkitError("cannot fit on an empty dataset")
    if ridge < 0:
        raise TapkitError(f"ridge must be >= 0, got {ridge}")
    phi = features(X, feature_map)
    n, df = phi.shape
    G = np.empty((df + 1, df + 1))
    G[:df, :df] = phi.T @ phi + ridge * np.eye(df)
    G[:df, df] = phi.sum(axis=0)
    G[df, :df] = phi.sum(axis=0)
    G[df, df] = n
    rhs = np.empty((df + 1, Y.shape[1]))
    rhs[:df] = phi.T @ Y
    rhs[df] = Y.sum(axis=0)
    if ridge == 0.0 and np.linalg.matrix_rank(G) < df + 1:
        raise TapkitError(
            "singular normal equations (collinear or insufficient data); "
            "set ridge > 0"
        )
    try:
        theta = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError:
        raise TapkitError("singular normal equations; set ridge > 0") from None
    return LinearModel(theta[:df].T.copy(), theta[df].copy(), feature_map, ridge)


def predict(model: LinearModel, x) -> np.ndarray:
    """Evaluate the model on one input vector or a batch (rows)."""
    phi = features(np.asarray(x, dtype=float), model.feature_map)
    if phi.ndim == 1:
        if phi.shape[0] != model.d_feat:
            raise TapkitError(
                f"input maps to {phi.shape[0]} features, model expects {model.d_feat}"
            )
        return model.W @ phi + model.b
    if phi.shape[1] != model.d_feat:
        raise TapkitError(
            f"input maps to {phi.shape[1]} features, model expects {model.d_feat}"
        )
    return phi @ model.W.T + model.b


def lms_step(model: LinearModel, x, y, rate: float) -> LinearModel:
    """One gradient step on the squared error of a single example."""
    if rate < 0:
        raise TapkitError(f"rate must be >= 0, got {rate}")
    phi = features(np.asarray(x, dtype=float), model.feature_map)
    y = np.asarray(y, dtype=float).reshape(-1)
    if phi.ndim != 1 or phi.shape[0] != model.d_feat or y.shape[0] != model.d_out:
        raise TapkitError("lms_step dimension mismatch")
    err = y - (model.W @ phi + model.b)
    return replace(model, W=model.W + rate * np.outer(err, phi), b=model.b + rate * err)


def rmse(model: LinearModel, dataset) -> float:
    residual = predict(model, dataset.X) - dataset.Y
    return float(np.sqrt(np.mean(residual**2)))


class ReachResult(NamedTuple):
    command: np.ndarray
    predicted: np.ndarray
    distance: float


def box_sampler(low, high, dim: int | None = None) -> Callable[[np.random.Generator, int], np.ndarray]:
    """Uniform command sampler over a per-channel box."""
    lo = np.atleast_1d(np.asarray(low, dtype=float))
    hi = np.atleast_1d(np.asarray(high, dtype=float))
    if dim is not None:
        lo = np.broadcast_to(lo, (dim,))
        hi = np.broadcast_to(hi, (dim,))
    if lo.shape != hi.shape:
        raise TapkitError("box bounds have different shapes")
    if np.any(hi <= lo):
        raise TapkitError("command box is empty (high <= low)")

    def sample(rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(lo, hi, (n, lo.shape[0]))

    return sample


def best_of_n(model: LinearModel, goal, n: int, seed: int,
              command_sampler: Callable[[np.random.Generator, int], np.ndarray]) -> ReachResult:
    """Sample n candidate commands and keep the one whose prediction lands
    closest (Euclidean) to the goal; ties go to the lowest sample index."""
    if n < 1:
        raise TapkitError(f"n must be >= 1, got {n}")
    goal = np.asarray(goal, dtype=float).reshape(-1)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    candidates = np.asarray(command_sampler(rng, n), dtype=float)
    preds = predict(model, candidates)
    dists = np.linalg.norm(preds - goal, axis=1)
    i = int(np.argmin(dists))
    return ReachResult(candidates[i].copy(), preds[i].copy(), float(dists[i]))


def invert_direct(inverse_model: LinearModel, goal) -> np.ndarray:
    """Read the command straight off a model fit on cause-from-effect rows."""
    return predict(inverse_model, goal)


# ---------------------------------------------------------------------------
# Flat text serialization
# ---------------------------------------------------------------------------

def save_model(model: LinearModel, path) -> None:
    """Header ``d_out d_feat ridge feature_map``, then W row-major, then b."""
    with open(path, "w") as fh:
        fh.write(f"{model.d_out} {model.d_feat} {_fmt(model.ridge)} {model.feature_map}\n")
        for row in model.W:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")
        fh.write(" ".join(_fmt(v) for v in model.b) + "\n")


def load_model(path) -> LinearModel:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise TapkitError(f"{path}: empty model file")
    head = lines[0].split()
    if len(head) != 4:
        raise TapkitError(f"{path}: malformed model header {lines[0]!r}")
    try:
        d_out, d_feat, ridge = int(head[0]), int(head[1]), float(head[2])
    except ValueError:
        raise TapkitError(f"{path}: malformed model header {lines[0]!r}") from None
    feature_map = head[3]
    if feature_map not in FEATURE_MAPS:
        raise TapkitError(f"{path}: unknown feature map {feature_map!r}")
    if len(lines) != 1 + d_out + 1:
        raise TapkitError(f"{path}: expected {d_out} weight rows plus a bias row")
    try:
        W = np.array([[float(v) for v in lines[1 + i].split()] for i in range(d_out)])
        b = np.array([float(v) for v in lines[1 + d_out].split()])
    except ValueError:
        raise TapkitError(f"{path}: non-numeric model entry") from None
    if W.shape != (d_out, d_feat) or b.shape != (d_out,):
        raise TapkitError(f"{path}: model shape does not match header")
    return LinearModel(W, b, feature_map, ridge)
