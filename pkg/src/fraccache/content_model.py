"""Content library, Zipf popularity and the quality-to-size map.

Units are fixed across the package: quality in Mbps, time in seconds, sizes
and cache capacity in Mbit.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CacheConstraintError",
    "ContentLibrary",
    "zipf_popularity",
    "content_size",
    "cache_usage",
    "check_feasible",
    "kilobytes_to_mbit",
]

_SUM_TOL = 1e-12


class CacheConstraintError(ValueError):
    """A caching policy needs more storage than the device has.

    ``overshoot`` is the excess storage in Mbit.
    """

    def __init__(self, used, capacity):
        self.used = float(used)
        self.capacity = float(capacity)
        self.overshoot = self.used - self.capacity
        super().__init__(
            f"policy needs {self.used:.12g} Mbit but the cache holds "
            f"{self.capacity:.12g} Mbit (overshoot {self.overshoot:.3g} Mbit)"
        )


def zipf_popularity(F, s=1.0):
    """Zipf request probabilities ``f_i = i**-s / sum_j j**-s``.

    Parameters
    ----------
    F : int
        Number of contents, at least 1.
    s : float
        Zipf exponent, non-negative.  ``s = 0`` gives the uniform law.

    Returns
    -------
    numpy.ndarray
        Non-increasing probability vector of length ``F``.
    """
    F = int(F)
    if F < 1:
        raise ValueError(f"need at least one content, got F={F}")
    if s < 0:
        raise ValueError(f"Zipf exponent must be non-negative, got {s}")
    weights = np.arange(1, F + 1, dtype=np.float64) ** (-float(s))
    return weights / weights.sum()


def content_size(q, A):
    """Size in Mbit of content encoded at quality ``q`` Mbps: ``A * q``."""
    q = np.asarray(q, dtype=np.float64)
    if np.any(q < 0):
        raise ValueError("quality must be non-negative")
    size = A * q
    return float(size) if size.ndim == 0 else size


def kilobytes_to_mbit(kb):
    """Convert kilobytes to Mbit with 1 kB = 8 kbit."""
    return kb * 8.0 / 1000.0


def cache_usage(alpha, q, A):
    """Storage used by a fractional policy, ``A * sum(alpha_i * q_i)``."""
    alpha = np.asarray(alpha, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return float(A * np.sum(alpha * q))


@dataclass(frozen=True)
class ContentLibrary:
    """The set of contents a device may request.

    Popularity is stored sorted in non-increasing order.  ``order[k]`` is the
    caller's original index of the content at sorted position ``k``; use
    :meth:`to_original_order` to report per-content results in the caller's
    indexing.
    """

    popularity: np.ndarray
    q_min: float = 0.2
    q_max: float = 1.0
    A: float = 1.0
    T: float = 1.0
    M: float = 5.2
    order: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        pop = np.array(self.popularity, dtype=np.float64).ravel()
        if pop.size < 1:
            raise ValueError("library must contain at least one content")
        if not np.all(np.isfinite(pop)) or np.any(pop <= 0):
            raise ValueError("popularity entries must be strictly positive")
        if abs(pop.sum() - 1.0) > _SUM_TOL:
            raise ValueError(f"popularity must sum to 1, sums to {pop.sum():.15g}")
        if self.order is None:
            perm = np.argsort(-pop, kind="stable")
        else:
            perm = np.array(self.order, dtype=np.int64)
            if sorted(perm.tolist()) != list(range(pop.size)):
                raise ValueError("order must be a permutation of the content indices")
        pop = pop[perm] if self.order is None else pop
        if np.any(np.diff(pop) > 0):
            raise ValueError("popularity must be non-increasing in sorted order")
        if not (0 < self.q_min <= self.q_max):
            raise ValueError(f"need 0 < q_min <= q_max, got [{self.q_min}, {self.q_max}]")
        if self.A <= 0:
            raise ValueError(f"size coefficient A must be positive, got {self.A}")
        if self.T <= 0:
            raise ValueError(f"deadline T must be positive, got {self.T}")
        if self.M < 0:
            raise ValueError(f"cache size M must be non-negative, got {self.M}")
        pop.setflags(write=False)
        perm.setflags(write=False)
        object.__setattr__(self, "popularity", pop)
        object.__setattr__(self, "order", perm)
        for name in ("q_min", "q_max", "A", "T", "M"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def zipf(cls, F=20, exponent=1.0, **kwargs):
        return cls(zipf_popularity(F, exponent), **kwargs)

    @property
    def F(self):
        return self.popularity.size

    @property
    def budget(self):
        """Cache budget in the x-variable, ``M / A`` (Mbps units)."""
        return self.M / self.A

    def replace(self, **changes):
        if "popularity" not in changes:
            changes.setdefault("order", self.order)
        else:
            changes.setdefault("order", None)
        return dataclasses.replace(self, **changes)

    def to_original_order(self, values):
        values = np.asarray(values)
        out = np.empty_like(values)
        out[self.order] = values
        return out

    def usage(self, alpha, q):
        return cache_usage(alpha, q, self.A)

    def is_feasible(self, alpha, q, rtol=1e-12):
        return self.usage(alpha, q) <= self.M * (1.0 + rtol) + rtol


def check_feasible(alpha, q, lib, rtol=1e-12):
    """Raise :class:`CacheConstraintError` if the cache constraint is violated.

    A relative slack of ``rtol`` absorbs rounding in ``A * sum(alpha * q)``.
    """
    used = lib.usage(alpha, q)
    if used > lib.M * (1.0 + rtol) + rtol:
        raise CacheConstraintError(used, lib.M)
    return used
