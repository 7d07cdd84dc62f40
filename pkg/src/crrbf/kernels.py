"""Kernel functions and Gram matrices.

Five families are supported: linear, inhomogeneous polynomial, RBF, random
RBF (one width per band) and cluster-based random RBF (one width per band
cluster). The three RBF-type kernels all reduce to
``exp(-sum_i w_i (x_i - y_i)^2)`` with a per-band weight vector ``w``, which is
what the compiled Gram routine evaluates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .band_clustering import BandClustering

FAMILIES = ("linear", "polynomial", "rbf", "rrbf", "crrbf")


def _check_gammas(gammas) -> np.ndarray:
    g = np.ascontiguousarray(gammas, dtype=np.float64).reshape(-1)
    if g.size == 0:
        raise ValueError("at least one gamma is required")
    if not np.all(np.isfinite(g)) or np.any(g <= 0):
        raise ValueError("gamma values must be finite and strictly positive")
    g.setflags(write=False)
    return g


class Kernel:
    """Base for kernel specs. Subclasses are immutable value objects."""

    family: str = ""

    def check_dimension(self, d: int) -> None:
        pass

    def band_weights(self, d: int) -> np.ndarray | None:
        """Per-band weights for RBF-type kernels; None otherwise."""
        return None

    def __call__(self, x, y) -> float:
        return evaluate(self, x, y)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Linear(Kernel):
    family = "linear"

    def to_dict(self) -> dict:
        return {"family": "linear"}


@dataclass(frozen=True)
class Polynomial(Kernel):
    degree: int = 2
    family = "polynomial"

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError(f"degree must be a positive integer, got {self.degree}")
        object.__setattr__(self, "degree", int(self.degree))

    def to_dict(self) -> dict:
        return {"family": "polynomial", "degree": self.degree}


@dataclass(frozen=True)
class Rbf(Kernel):
    gamma: float = 1.0
    family = "rbf"

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be finite and positive, got {self.gamma}")
        object.__setattr__(self, "gamma", float(self.gamma))

    def band_weights(self, d: int) -> np.ndarray:
        return np.full(d, self.gamma)

    def to_dict(self) -> dict:
        return {"family": "rbf", "gamma": self.gamma}


@dataclass(frozen=True, eq=False)
class Rrbf(Kernel):
    gammas: np.ndarray
    family = "rrbf"

    def __post_init__(self):
        object.__setattr__(self, "gammas", _check_gammas(self.gammas))

    def check_dimension(self, d: int) -> None:
        if self.gammas.size != d:
            raise ValueError(f"RRBF has {self.gammas.size} gammas but data has {d} bands")

    def band_weights(self, d: int) -> np.ndarray:
        self.check_dimension(d)
        return self.gammas

    def to_dict(self) -> dict:
        return {"family": "rrbf", "gammas": self.gammas.tolist()}


@dataclass(frozen=True, eq=False)
class Crrbf(Kernel):
    clustering: BandClustering
    gammas: np.ndarray
    family = "crrbf"

    def __post_init__(self):
        g = _check_gammas(self.gammas)
        if g.size != self.clustering.cluster_count:
            raise ValueError(
                f"CRRBF needs {self.clustering.cluster_count} gammas, got {g.size}"
            )
        object.__setattr__(self, "gammas", g)

    def check_dimension(self, d: int) -> None:
        if self.clustering.band_count != d:
            raise ValueError(
                f"clustering covers {self.clustering.band_count} bands but data has {d}"
            )

    def band_weights(self, d: int) -> np.ndarray:
        self.check_dimension(d)
        return self.gammas[self.clustering.assignments]

    def to_dict(self) -> dict:
        return {
            "family": "crrbf",
            "gammas": self.gammas.tolist(),
            "clustering": self.clustering.to_list(),
        }


def kernel_from_dict(doc: dict) -> Kernel:
    family = doc.get("family")
    if family == "linear":
        return Linear()
    if family == "polynomial":
        return Polynomial(int(doc["degree"]))
    if family == "rbf":
        return Rbf(float(doc["gamma"]))
    if family == "rrbf":
        return Rrbf(np.array(doc["gammas"], dtype=np.float64))
    if family == "crrbf":
        return Crrbf(BandClustering(np.array(doc["clustering"])), np.array(doc["gammas"]))
    raise ValueError(f"unknown kernel family {family!r}; valid: {', '.join(FAMILIES)}")


def _pair(x, y):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise ValueError(f"vector lengths differ: {x.size} vs {y.size}")
    return x, y


def eval_rbf(x, y, gamma: float) -> float:
    x, y = _pair(x, y)
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    # same reduction as eval_crrbf so a single cluster matches bit for bit
    return math.exp(-gamma * float(np.sum((x - y) ** 2)))


def eval_rrbf(x, y, gammas) -> float:
    x, y = _pair(x, y)
    g = _check_gammas(gammas)
    if g.size != x.size:
        raise ValueError(f"{g.size} gammas for {x.size}-dimensional vectors")
    diff = x - y
    return math.exp(-float(g @ (diff * diff)))


def eval_crrbf(x, y, clustering: BandClustering, gammas) -> float:
    x, y = _pair(x, y)
    g = _check_gammas(gammas)
    if clustering.band_count != x.size:
        raise ValueError(f"clustering covers {clustering.band_count} bands, vectors have {x.size}")
    if g.size != clustering.cluster_count:
        raise ValueError(f"{g.size} gammas for {clustering.cluster_count} clusters")
    sq = (x - y) ** 2
    exponent = 0.0
    for c, members in enumerate(clustering.groups()):
        exponent += g[c] * float(sq[members].sum())
    return math.exp(-exponent)


def eval_linear(x, y) -> float:
    x, y = _pair(x, y)
    return float(x @ y)


def eval_polynomial(x, y, degree: int) -> float:
    x, y = _pair(x, y)
    if degree < 1:
        raise ValueError("degree must be >= 1")
    return (float(x @ y) + 1.0) ** int(degree)


def evaluate(spec: Kernel, x, y) -> float:
    if isinstance(spec, Linear):
        return eval_linear(x, y)
    if isinstance(spec, Polynomial):
        return eval_polynomial(x, y, spec.degree)
    if isinstance(spec, Rbf):
        return eval_rbf(x, y, spec.gamma)
    if isinstance(spec, Rrbf):
        return eval_rrbf(x, y, spec.gammas)
    if isinstance(spec, Crrbf):
        return eval_crrbf(x, y, spec.clustering, spec.gammas)
    raise TypeError(f"not a kernel spec: {spec!r}")


@dataclass(frozen=True)
class GammaSampler:
    """Uniform draws on the half-open interval (low, high]."""

    low: float = 0.0
    high: float = 1.0
    seed: int | None = 0

    def __post_init__(self):
        if not (0.0 <= self.low < self.high and math.isfinite(self.high)):
            raise ValueError(f"need 0 <= low < high, got ({self.low}, {self.high})")

    def draw(self, n: int, seed=None) -> np.ndarray:
        rng = np.random.default_rng(self.seed if seed is None else seed)
        # high - U[0, width) lies in (low, high]
        return self.high - rng.uniform(0.0, self.high - self.low, size=n)

    def with_seed(self, seed) -> "GammaSampler":
        return GammaSampler(self.low, self.high, seed)


def sample_rrbf(d: int, sampler: GammaSampler) -> Rrbf:
    if d < 1:
        raise ValueError("d must be >= 1")
    return Rrbf(sampler.draw(d))


def sample_crrbf(clustering: BandClustering, sampler: GammaSampler) -> Crrbf:
    return Crrbf(clustering, sampler.draw(clustering.cluster_count))


def _mirror_upper(M: np.ndarray) -> np.ndarray:
    upper = np.triu(M)
    return upper + np.triu(M, 1).T


def gram(spec: Kernel, A, B=None) -> np.ndarray:
    """Kernel matrix between rows of A and rows of B (B defaults to A).

    With B omitted (or the same array) the result is exactly symmetric.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("A must be a 2-D matrix")
    symmetric = B is None or B is A
    if not symmetric:
        B = np.ascontiguousarray(B, dtype=np.float64)
        if B.ndim != 2 or B.shape[1] != A.shape[1]:
            raise ValueError(f"column counts differ: {A.shape[1]} vs {np.shape(B)[-1]}")
    d = A.shape[1]
    spec.check_dimension(d)
    weights = spec.band_weights(d)
    if weights is not None:
        w = np.ascontiguousarray(weights, dtype=np.float64)
        if symmetric:
            return _backend.weighted_rbf_gram_sym(A, w)
        return _backend.weighted_rbf_gram(A, B, w)

    inner = A @ (A if symmetric else B).T
    if isinstance(spec, Polynomial):
        inner = (inner + 1.0) ** spec.degree
    elif not isinstance(spec, Linear):
        raise TypeError(f"not a kernel spec: {spec!r}")
    return _mirror_upper(inner) if symmetric else inner
