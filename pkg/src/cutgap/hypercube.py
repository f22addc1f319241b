"""The eta-noisy hypercube graph on {-1,1}^N: edge-weight distribution,
typical-edge windowing, and set expansion.

Vertices are encoded as integer bitmasks (bit b of the index is coordinate
value 1 - 2b, matching `cutgap.fourier`). One random-walk step flips every
bit independently with probability eta, so the weight of an unordered pair
{f, g} at Hamming distance d is 2 * 2^-N * eta^d * (1-eta)^(N-d).

Self-pairs (d = 0) carry mass (1-eta)^N in that probability experiment; they
are excluded here (expansion and label-cover semantics ignore them) and the
retained mass is renormalized by default. Edges are never materialized as a
list: every operation works from the closed-form distance-weight profile plus
point iteration, so N well beyond enumeration range is fine for pair queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["NoisyHypercube", "typical_window", "hamming", "EXACT_ENUMERATION_LIMIT"]

EXACT_ENUMERATION_LIMIT = 14


def hamming(f: int, g: int) -> int:
    return int(f ^ g).bit_count()


def typical_window(N: int, eta: float):
    """Inclusive Hamming-distance window [ceil(eta*N/2), floor(2*eta*N)].

    Returns None (flagged empty) when the lower end exceeds the upper end,
    which happens in the degenerate small-N regime; the caller must widen the
    window or disable windowing.
    """
    if not 0 < eta < 0.5:
        raise ValueError(f"eta={eta} outside (0, 1/2)")
    d_lo = math.ceil(eta * N / 2)
    d_hi = math.floor(2 * eta * N)
    if d_lo > d_hi:
        return None
    return d_lo, d_hi


@dataclass(frozen=True)
class NoisyHypercube:
    """Noise graph on {-1,1}^N with optional distance window.

    window is an inclusive (d_lo, d_hi) pair or None for no windowing.
    With renormalized=True (default) the retained edge weights are scaled to
    total 1; renormalized=False reproduces the raw probability-experiment
    accounting in which the deleted mass is simply ignored.
    """

    N: int
    eta: float
    window: tuple | None = None
    renormalized: bool = True

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        if not 0 < self.eta < 0.5:
            raise ValueError(f"eta={self.eta} outside (0, 1/2)")
        if self.window is not None:
            d_lo, d_hi = self.window
            if not (1 <= d_lo <= d_hi <= self.N):
                raise ValueError(f"bad window {self.window}")

    def _in_window(self, d: int) -> bool:
        if d == 0:
            return False
        if self.window is None:
            return True
        return self.window[0] <= d <= self.window[1]

    def retained_mass(self) -> float:
        """sum over retained distances of C(N,d) eta^d (1-eta)^(N-d)."""
        return float(np.sum(self.distance_mass()))

    def distance_mass(self) -> np.ndarray:
        """Total retained edge weight per distance d = 0..N, unnormalized."""
        d = np.arange(self.N + 1)
        mass = np.array(
            [math.comb(self.N, int(dd)) for dd in d], dtype=np.float64
        ) * self.eta**d * (1 - self.eta) ** (self.N - d)
        keep = np.array([self._in_window(int(dd)) for dd in d])
        return np.where(keep, mass, 0.0)

    def weight_profile(self) -> np.ndarray:
        """Per-pair weight indexed by distance d = 0..N (after window and
        renormalization)."""
        d = np.arange(self.N + 1)
        w = 2.0 * 2.0 ** (-self.N) * self.eta**d * (1 - self.eta) ** (self.N - d)
        keep = np.array([self._in_window(int(dd)) for dd in d])
        w = np.where(keep, w, 0.0)
        if self.renormalized:
            w = w / self.retained_mass()
        return w

    def pair_weight(self, f: int, g: int) -> float:
        """Weight of the unordered edge {f, g}; self-loops are rejected."""
        if f == g:
            raise ValueError("self-loops are excluded")
        return float(self.weight_profile()[hamming(f, g)])

    def degree(self) -> float:
        """Weighted degree of any vertex (the graph is weight-regular)."""
        profile = self.weight_profile()
        counts = np.array([math.comb(self.N, d) for d in range(self.N + 1)])
        return float(np.sum(profile * counts))

    def expansion(self, members) -> float:
        """Exact expansion Phi(S): the probability of leaving S when a random
        vertex of S and then a random incident edge is chosen.

        Vertex choice is uniform (the graph is weight-regular, so
        degree-proportional and uniform choice coincide). Exact enumeration
        over S x S; requires N <= EXACT_ENUMERATION_LIMIT.
        """
        if self.N > EXACT_ENUMERATION_LIMIT:
            raise ValueError(
                f"exact enumeration capped at N={EXACT_ENUMERATION_LIMIT}; "
                "use expansion_mc"
            )
        members = np.unique(np.asarray(members, dtype=np.uint64))
        if len(members) == 0 or len(members) == 1 << self.N:
            raise ValueError("S must be a nonempty proper subset")
        profile = self.weight_profile()  # profile[0] is always 0
        dists = np.bitwise_count(members[:, None] ^ members[None, :])
        stay_ordered = float(np.sum(profile[dists]))
        return 1.0 - stay_ordered / (len(members) * self.degree())

    def expansion_mc(self, members, samples: int, seed: int):
        """Monte Carlo estimate of Phi(S) with standard error.

        Samples a uniform vertex of S and one noise step, rejecting steps
        that land outside the retained window (equivalently, conditioning the
        walk on retained edges). Deterministic per seed.
        """
        members = np.unique(np.asarray(members, dtype=np.uint64))
        if len(members) == 0 or len(members) == 1 << self.N:
            raise ValueError("S must be a nonempty proper subset")
        rng = np.random.default_rng(seed)
        bit_weights = np.uint64(1) << np.arange(self.N, dtype=np.uint64)
        lo, hi = (1, self.N) if self.window is None else self.window
        left = 0
        done = 0
        while done < samples:
            batch = min(samples - done, 1 << 16)
            starts = rng.choice(members, size=batch)
            flips = rng.random((batch, self.N)) < self.eta
            masks = (flips * bit_weights).sum(axis=1, dtype=np.uint64)
            dists = np.bitwise_count(masks)
            ok = (dists >= lo) & (dists <= hi)
            ends = (starts ^ masks)[ok]
            left += int(np.sum(~np.isin(ends, members)))
            done += len(ends)
        phi = left / done
        stderr = math.sqrt(max(phi * (1 - phi), 1e-300) / done)
        return phi, stderr
