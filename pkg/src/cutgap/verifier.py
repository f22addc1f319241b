"""The two-query Long Code verifier over a Unique Games instance.

A proof assigns every UG vertex v a +/-1 table A^v on {-1,1}^N (N = label
count). The verifier draws an edge e{v,w} by weight, a uniform x and an
epsilon-biased flip pattern mu, and accepts iff
A^v(x) = A^w((x mu) o pi_e). Acceptance probability is available exactly
through the per-vertex spectra,

    1/2 + 1/2 sum_e wt(e) sum_alpha A^v_alpha A^w_{pi^-1(alpha)} (1-2 eps)^|alpha|,

and operationally through a seeded Monte Carlo sampler. The decoder draws a
subset alpha with probability (A^v_alpha)^2 and a uniform element of alpha;
empty draws are redrawn, and all-mass-on-empty tables fall back to a uniform
label (flagged).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fourier import wht_matrix
from .unique_games import UGInstance, value as ug_value

__all__ = [
    "Proof",
    "DecodeResult",
    "long_code_proof",
    "piecewise_balance_stat",
    "acceptance_probability_exact",
    "acceptance_probability_mc",
    "decode_labeling",
    "proof_to_text",
    "proof_from_text",
]


@dataclass(frozen=True)
class Proof:
    """tables[v] is the +/-1 truth table of the supposed Long Code of v's
    label, length 2^N."""

    num_labels: int
    tables: np.ndarray

    def __post_init__(self):
        tables = np.asarray(self.tables, dtype=np.int8)
        object.__setattr__(self, "tables", tables)
        if tables.ndim != 2 or tables.shape[1] != 1 << self.num_labels:
            raise ValueError(f"expected (num_vertices, 2^{self.num_labels}) tables")
        if not np.all(np.abs(tables) == 1):
            raise ValueError("proof tables must be +/-1 valued")
        tables.setflags(write=False)

    @property
    def num_vertices(self) -> int:
        return self.tables.shape[0]


def long_code_proof(lam, num_labels: int) -> Proof:
    """Dictator tables encoding a labeling: A^v(x) = x_{lam[v]}."""
    lam = np.asarray(lam, dtype=np.int64)
    if np.any(lam < 0) or np.any(lam >= num_labels):
        raise ValueError("label out of range")
    x = np.arange(1 << num_labels, dtype=np.int64)
    tables = np.stack([1 - 2 * ((x >> int(l)) & 1) for l in lam])
    return Proof(num_labels, tables.astype(np.int8))


def piecewise_balance_stat(proof: Proof) -> float:
    """E_v |A^v_empty| (the empty-set coefficient is the table mean)."""
    return float(np.mean(np.abs(np.mean(proof.tables.astype(np.float64), axis=1))))


def _noise_factors(num_labels: int, epsilon: float) -> np.ndarray:
    """(1 - 2 eps)^|alpha| per subset bitmask.

    Magnitudes go through log space against underflow at large |alpha|;
    eps > 1/2 flips the sign per level, eps = 1/2 kills every non-empty one.
    """
    sizes = np.bitwise_count(np.arange(1 << num_labels, dtype=np.uint32)).astype(
        np.float64
    )
    base = 1.0 - 2.0 * epsilon
    if base == 0.0:
        out = np.zeros(1 << num_labels)
        out[0] = 1.0
        return out
    signs = np.where(sizes % 2 == 0, 1.0, math.copysign(1.0, base))
    return signs * np.exp(sizes * math.log(abs(base)))


def _set_image_table(perm: np.ndarray) -> np.ndarray:
    """table[alpha] = bitmask of {perm^-1(i) : i in alpha}."""
    n = len(perm)
    inv = np.argsort(perm)
    alphas = np.arange(1 << n, dtype=np.int64)
    out = np.zeros_like(alphas)
    for i in range(n):
        out |= ((alphas >> i) & 1) << int(inv[i])
    return out


def acceptance_probability_exact(u: UGInstance, proof: Proof, epsilon: float) -> float:
    """Exact acceptance probability via the spectral formula."""
    if proof.num_vertices != u.num_vertices or proof.num_labels != u.num_labels:
        raise ValueError("proof shape does not match instance")
    spectra = wht_matrix(proof.tables.astype(np.float64))
    factors = _noise_factors(u.num_labels, epsilon)
    corr = 0.0
    for e in u.edges:
        pulled = spectra[e.w][_set_image_table(e.perm)]
        corr += e.weight * float(np.sum(spectra[e.v] * pulled * factors))
    return 0.5 + 0.5 * corr


def acceptance_probability_mc(u: UGInstance, proof: Proof, samples: int,
                              seed: int, epsilon: float):
    """Operational Monte Carlo estimate: run the two-query test `samples`
    times. Returns (estimate, stderr); deterministic per seed."""
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    n = u.num_labels
    size = 1 << n
    weights = np.array([e.weight for e in u.edges])
    weights = weights / weights.sum()
    v_of = np.array([e.v for e in u.edges])
    w_of = np.array([e.w for e in u.edges])
    # y = (x mu) o pi: bit i of y is bit pi(i) of x^mu
    reindex = np.stack([_reindex(e.perm) for e in u.edges])
    bit_weights = 1 << np.arange(n, dtype=np.int64)
    accept = 0
    done = 0
    while done < samples:
        batch = min(samples - done, 1 << 16)
        ei = rng.choice(len(weights), p=weights, size=batch)
        x = rng.integers(0, size, size=batch)
        mu = ((rng.random((batch, n)) < epsilon) * bit_weights).sum(axis=1)
        y = reindex[ei, x ^ mu]
        accept += int(np.sum(proof.tables[v_of[ei], x] == proof.tables[w_of[ei], y]))
        done += batch
    p = accept / samples
    stderr = math.sqrt(max(p * (1 - p), 1e-300) / samples)
    return p, stderr


def _reindex(perm: np.ndarray) -> np.ndarray:
    n = len(perm)
    src = np.arange(1 << n, dtype=np.int64)
    out = np.zeros_like(src)
    for i in range(n):
        out |= ((src >> int(perm[i])) & 1) << i
    return out


@dataclass
class DecodeResult:
    labeling: np.ndarray
    value: float
    fallback_vertices: tuple  # vertices whose spectrum sat entirely on the empty set


def decode_labeling(u: UGInstance, proof: Proof, seed: int, rounds: int = 10) -> DecodeResult:
    """Randomized Fourier decoding: per vertex draw alpha ~ (A^v_alpha)^2
    (redrawing the empty set), then a uniform element of alpha. The best of
    `rounds` labelings by value is returned."""
    if rounds < 1:
        raise ValueError("rounds must be positive")
    spectra = wht_matrix(proof.tables.astype(np.float64))
    sq = spectra**2
    sq = sq / np.sum(sq, axis=1, keepdims=True)
    n = u.num_labels
    rng = np.random.default_rng(seed)
    fallback = []
    best_lam = None
    best_val = -1.0
    nonempty_mass = 1.0 - sq[:, 0]
    for _ in range(rounds):
        lam = np.zeros(u.num_vertices, dtype=np.int64)
        for v in range(u.num_vertices):
            if nonempty_mass[v] < 1e-15:
                lam[v] = int(rng.integers(n))
                if v not in fallback:
                    fallback.append(v)
                continue
            probs = sq[v].copy()
            probs[0] = 0.0  # redraw rule: condition on alpha != empty set
            probs /= probs.sum()
            alpha = int(rng.choice(len(probs), p=probs))
            members = [i for i in range(n) if alpha >> i & 1]
            lam[v] = int(rng.choice(members))
        val = ug_value(u, lam)
        if val > best_val:
            best_val = val
            best_lam = lam.copy()
    return DecodeResult(best_lam, best_val, tuple(fallback))


def proof_to_text(proof: Proof) -> str:
    """Header `PROOF |V| N`, then one line of 2^N +/-1 entries per vertex."""
    lines = [f"PROOF {proof.num_vertices} {proof.num_labels}"]
    for row in proof.tables:
        lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def proof_from_text(text: str) -> Proof:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    tag, nv, n = lines[0].split()
    if tag != "PROOF":
        raise ValueError("not a proof file")
    nv, n = int(nv), int(n)
    tables = np.array(
        [[int(x) for x in ln.split()] for ln in lines[1:]], dtype=np.int8
    )
    if tables.shape != (nv, 1 << n):
        raise ValueError("table shape mismatch")
    return Proof(n, tables)
