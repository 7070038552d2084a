"""Gating functions for localized kernel weighting, and their gradients.

A gating function maps an input x to a nonnegative weight per kernel:

* softmax   eta_m(x) = exp(<v_m, x> + v_m0) / sum_k exp(<v_k, x> + v_k0)
* sigmoid   eta_m(x) = 1 / (1 + exp(-<v_m, x> - v_m0))
* rbf       eta_m(x) = exp(-||x - mu_m||^2 / s_m^2) / sum_k exp(-||x - mu_k||^2 / s_k^2)

Nonnegativity keeps the locally combined kernel a Mercer kernel.  The
gradient here is of the dual objective J = -0.5 * a' Q(eta) a with the
multipliers held fixed, which is what the alternating trainer descends.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .kernels import gaussian_bandwidth

GATING_KINDS = ("softmax", "sigmoid", "rbf")

#: random init range for softmax/sigmoid weights; small enough that the
#: initial gates stay near uniform on standardized data
INIT_SCALE = 0.1

#: spreads are clamped here after a gradient step to stay positive
MIN_SPREAD = 1e-6


@dataclass(frozen=True)
class GatingParams:
    """Parameters of one gating family.

    softmax/sigmoid use ``v`` (p x d) and ``v0`` (p); rbf uses ``centers``
    (p x d) and positive ``spreads`` (p).
    """

    kind: str
    v: np.ndarray | None = None
    v0: np.ndarray | None = None
    centers: np.ndarray | None = None
    spreads: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in GATING_KINDS:
            raise ValueError(f"unknown gating kind {self.kind!r}")
        if self.kind == "rbf":
            if self.centers is None or self.spreads is None:
                raise ValueError("rbf gating needs centers and spreads")
            centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
            spreads = np.asarray(self.spreads, dtype=float).ravel()
            if spreads.shape[0] != centers.shape[0]:
                raise ValueError("one spread per center required")
            if not np.all(spreads > 0):
                raise ValueError("rbf spreads must all be positive")
            object.__setattr__(self, "centers", centers)
            object.__setattr__(self, "spreads", spreads)
        else:
            if self.v is None or self.v0 is None:
                raise ValueError(f"{self.kind} gating needs v and v0")
            v = np.atleast_2d(np.asarray(self.v, dtype=float))
            v0 = np.asarray(self.v0, dtype=float).ravel()
            if v0.shape[0] != v.shape[0]:
                raise ValueError("one bias per gate row required")
            object.__setattr__(self, "v", v)
            object.__setattr__(self, "v0", v0)
        if self.p < 1:
            raise ValueError("need at least one gate")

    @property
    def p(self) -> int:
        return (self.centers if self.kind == "rbf" else self.v).shape[0]

    @property
    def d(self) -> int:
        return (self.centers if self.kind == "rbf" else self.v).shape[1]


@dataclass(frozen=True)
class GateGradient:
    """dJ/d(params), same shapes as the matching GatingParams fields."""

    kind: str
    v: np.ndarray | None = None
    v0: np.ndarray | None = None
    centers: np.ndarray | None = None
    spreads: np.ndarray | None = None

    def is_finite(self) -> bool:
        parts = [p for p in (self.v, self.v0, self.centers, self.spreads) if p is not None]
        return all(np.isfinite(p).all() for p in parts)


def _normalized_exp(logits: np.ndarray) -> np.ndarray:
    # max-subtraction keeps exp() in range for unnormalized inputs
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _row_logits(X: np.ndarray, v: np.ndarray, v0: np.ndarray) -> np.ndarray:
    # broadcast-reduce instead of BLAS so each row's result is independent
    # of the batch size (batch evaluation == per-row evaluation, bitwise)
    return (X[:, None, :] * v[None, :, :]).sum(axis=2) + v0


def _row_sq_dists(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - centers[None, :, :]
    return (diff * diff).sum(axis=2)


def gate_eval_batch(params: GatingParams, X: np.ndarray) -> np.ndarray:
    """Gate weights for every row of X; returns an (N, p) matrix."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != params.d:
        raise ValueError(f"gating expects {params.d} features, got {X.shape[1]}")
    if params.kind == "softmax":
        return _normalized_exp(_row_logits(X, params.v, params.v0))
    if params.kind == "sigmoid":
        return expit(_row_logits(X, params.v, params.v0))
    return _normalized_exp(-_row_sq_dists(X, params.centers) / params.spreads**2)


def gate_eval(params: GatingParams, x: np.ndarray) -> np.ndarray:
    """Gate weights for a single input vector; returns a length-p vector."""
    x = np.asarray(x, dtype=float).ravel()
    return gate_eval_batch(params, x[None, :])[0]


def gate_gradient(
    params: GatingParams,
    alpha: np.ndarray,
    X: np.ndarray,
    per_kernel_grams,
    H: np.ndarray,
) -> GateGradient:
    """Gradient of J = -0.5 * a' Q(eta) a w.r.t. the gating parameters.

    ``per_kernel_grams`` are the p training Gram matrices K_m and ``H`` the
    (N, p) gate matrix for the same rows; the multipliers ``alpha`` are
    treated as constants.  Pairs where either multiplier is zero contribute
    nothing, so the double sum collapses to support-vector rows.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    alpha = np.asarray(alpha, dtype=float).ravel()
    H = np.asarray(H, dtype=float)
    n, p = H.shape
    if alpha.shape[0] != n or X.shape[0] != n:
        raise ValueError("alpha, X and H row counts disagree")
    if len(per_kernel_grams) != p or X.shape[1] != params.d or p != params.p:
        raise ValueError("per-kernel grams / gate matrix / params shapes disagree")

    # W[i, m] = sum_j alpha_i alpha_j eta_m(x_i) K_m(i, j) eta_m(x_j)
    W = np.empty((n, p))
    for m, K in enumerate(per_kernel_grams):
        u = alpha * H[:, m]
        W[:, m] = u * (np.asarray(K) @ u)

    if params.kind == "sigmoid":
        T = W * (1.0 - H)
        return GateGradient(kind="sigmoid", v=-(T.T @ X), v0=-T.sum(axis=0))

    # softmax-type coupling: sum_k W[i,k] * (delta_mk - eta_m(x_i))
    T = W - H * W.sum(axis=1, keepdims=True)
    if params.kind == "softmax":
        return GateGradient(kind="softmax", v=-(T.T @ X), v0=-T.sum(axis=0))

    col = T.sum(axis=0)
    grad_centers = -(2.0 / params.spreads**2)[:, None] * (T.T @ X - col[:, None] * params.centers)
    d2 = _row_sq_dists(X, params.centers)
    grad_spreads = -(2.0 / params.spreads**3) * np.sum(T * d2, axis=0)
    return GateGradient(kind="rbf", centers=grad_centers, spreads=grad_spreads)


def init_gating(kind: str, p: int, d: int, X_train: np.ndarray, seed) -> GatingParams:
    """Seeded random initialization.

    softmax/sigmoid weights are uniform on [-0.1, 0.1]; rbf centers are
    training rows sampled without replacement (with replacement if there
    are fewer rows than gates) and spreads all equal the square root of
    the bandwidth heuristic.
    """
    if kind not in GATING_KINDS:
        raise ValueError(f"unknown gating kind {kind!r}")
    if p < 1:
        raise ValueError("need at least one gate")
    X = np.atleast_2d(np.asarray(X_train, dtype=float))
    if X.shape[1] != d:
        raise ValueError(f"X_train has {X.shape[1]} features, expected {d}")
    rng = np.random.default_rng(seed)
    if kind in ("softmax", "sigmoid"):
        v = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(p, d))
        v0 = rng.uniform(-INIT_SCALE, INIT_SCALE, size=p)
        return GatingParams(kind=kind, v=v, v0=v0)
    n = X.shape[0]
    picks = rng.choice(n, size=p, replace=n < p)
    spread = np.sqrt(gaussian_bandwidth(X)) if n >= 2 else 1.0
    return GatingParams(kind="rbf", centers=X[picks], spreads=np.full(p, spread))


def step_gating(params: GatingParams, grad: GateGradient, mu: float) -> GatingParams:
    """One gradient-descent update; rbf spreads are clamped positive."""
    if grad.kind != params.kind:
        raise ValueError("gradient/params kind mismatch")
    if params.kind == "rbf":
        spreads = np.maximum(params.spreads - mu * grad.spreads, MIN_SPREAD)
        return GatingParams(kind="rbf", centers=params.centers - mu * grad.centers, spreads=spreads)
    return GatingParams(kind=params.kind, v=params.v - mu * grad.v, v0=params.v0 - mu * grad.v0)
