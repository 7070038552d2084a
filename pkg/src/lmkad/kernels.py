"""Kernel functions, Gram matrices, and the Gaussian bandwidth heuristic.

Three Mercer kernels are supported:

* linear        K(x, y) = <x, y>
* polynomial    K(x, y) = (<x, y> + 1)^q
* gaussian      K(x, y) = exp(-||x - y||^2 / sigma_sq)

A Gaussian spec may be created with ``sigma_sq=None`` ("auto"), in which
case the bandwidth is resolved from training data at fit time via
:func:`gaussian_bandwidth`.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

KERNEL_KINDS = ("linear", "polynomial", "gaussian")


@dataclass(frozen=True)
class KernelSpec:
    """One kernel family plus its parameters.

    ``q`` is only meaningful for polynomial kernels, ``sigma_sq`` only for
    gaussian ones.  ``sigma_sq=None`` marks an unresolved ("auto")
    bandwidth; such a spec cannot be evaluated until resolved.
    """

    kind: str
    q: int | None = None
    sigma_sq: float | None = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "polynomial":
            if self.q is None or int(self.q) < 1:
                raise ValueError("polynomial kernel requires integer degree q >= 1")
        elif self.q is not None:
            raise ValueError(f"degree q is only valid for polynomial kernels, not {self.kind}")
        if self.kind == "gaussian":
            if self.sigma_sq is not None and not self.sigma_sq > 0:
                raise ValueError("gaussian kernel requires sigma_sq > 0")
        elif self.sigma_sq is not None:
            raise ValueError(f"sigma_sq is only valid for gaussian kernels, not {self.kind}")

    @property
    def is_auto(self) -> bool:
        return self.kind == "gaussian" and self.sigma_sq is None

    def resolved(self, X: np.ndarray) -> "KernelSpec":
        """Return a concrete spec, computing the bandwidth from X if auto."""
        if self.is_auto:
            return replace(self, sigma_sq=gaussian_bandwidth(X))
        return self


def parse_kernel_spec(token: str) -> KernelSpec:
    """Parse a CLI/config kernel token.

    Accepted forms: ``linear``, ``poly:q=2``, ``poly:q=3``, ``gauss:auto``,
    ``gauss:sigma_sq=<float>``.
    """
    token = token.strip()
    if token == "linear":
        return KernelSpec("linear")
    if token.startswith("poly:q="):
        q = token[len("poly:q="):]
        if q not in ("2", "3"):
            raise ValueError(f"polynomial degree must be 2 or 3, got {q!r}")
        return KernelSpec("polynomial", q=int(q))
    if token == "gauss:auto":
        return KernelSpec("gaussian")
    if token.startswith("gauss:sigma_sq="):
        value = float(token[len("gauss:sigma_sq="):])
        return KernelSpec("gaussian", sigma_sq=value)
    raise ValueError(f"unrecognized kernel token {token!r}")


def format_kernel_spec(spec: KernelSpec) -> str:
    if spec.kind == "linear":
        return "linear"
    if spec.kind == "polynomial":
        return f"poly:q={spec.q}"
    if spec.sigma_sq is None:
        return "gauss:auto"
    return f"gauss:sigma_sq={spec.sigma_sq!r}"


def _check_resolved(spec: KernelSpec):
    if spec.is_auto:
        raise ValueError("gaussian bandwidth is unresolved; call spec.resolved(X) first")


def kernel_eval(spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> float:
    """Evaluate one kernel on a pair of vectors."""
    _check_resolved(spec)
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if spec.kind == "linear":
        return float(x @ y)
    if spec.kind == "polynomial":
        return float((x @ y + 1.0) ** spec.q)
    diff = x - y
    return float(np.exp(-(diff @ diff) / spec.sigma_sq))


def squared_distances(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, clipped at zero."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    xx = np.sum(X * X, axis=1)[:, None]
    yy = np.sum(Y * Y, axis=1)[None, :]
    d2 = xx + yy - 2.0 * (X @ Y.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def gram(spec: KernelSpec, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Gram matrix with entries K(X_i, Y_j)."""
    _check_resolved(spec)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]} columns")
    if spec.kind == "linear":
        return X @ Y.T
    if spec.kind == "polynomial":
        return (X @ Y.T + 1.0) ** spec.q
    return np.exp(-squared_distances(X, Y) / spec.sigma_sq)


def gaussian_bandwidth(X: np.ndarray) -> float:
    """Mean squared Euclidean distance over unordered point pairs.

    Self-pairs are excluded; with fewer than two points the heuristic is
    undefined, and if all points coincide the degenerate mean is replaced
    by 1 so the kernel stays usable.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if n < 2:
        raise ValueError("bandwidth heuristic needs at least 2 points")
    d2 = squared_distances(X, X)
    mean = float(np.sum(d2) / (n * (n - 1)))
    if mean < 1e-12:
        return 1.0
    return mean
