"""Quotient of the noisy hypercube by character multiplication: the Unique
Games integrality-gap instance and its explicit SDP vector solution.

The 2^N Boolean functions on {-1,1}^k (N = 2^k) are partitioned into
m = 2^N / N classes closed under f -> f*chi_S. Classes become UG vertices,
shifts S (as k-bit masks) become labels, and each windowed noisy-hypercube
edge {f, g} lands in the bundle c = S xor T (where f = rep_i chi_S,
g = rep_j chi_T), giving the UG edge permutation pi(b) = c xor b.

The SDP solution attaches to class i the orthonormal basis
{u_{rep_i chi_S}}_S of R^N, entries +/-1/sqrt(N); the SDP formally lives on
the squared tensors u x u, but every SDP quantity here is evaluated as a
squared base inner product (tensor identity), so nothing quadratic in N^2 is
materialized.

For eta >= 1/4 the typical window contains d = N/2, so within-class pairs
{f, f*chi_c} are windowed in and produce UG self-loop edges (permutation
XOR c, never satisfiable). A self-bundle holds N/2 distinct pairs (not N),
so its edge weight is (N/2) * pair weight, which keeps the total weight 1,
exact degree regularity, and the label-extended graph isomorphic to the
windowed hypercube.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hypercube import NoisyHypercube, typical_window
from .unique_games import UGEdge, UGInstance

__all__ = [
    "QuotientStructure",
    "UGVectorSolution",
    "build_quotient",
    "shift_masks",
    "build_kv_instance",
    "build_ug_sdp_solution",
    "check_ug_sdp_feasibility",
    "ug_sdp_objective",
    "verify_ulc_properties",
    "basis_to_text",
    "basis_from_text",
    "FeasibilityReport",
    "UlcPropertyReport",
]

DEFAULT_MAX_K = 4
HARD_MAX_K = 5


def shift_masks(k: int) -> np.ndarray:
    """masks[s] = truth-table code of chi_S: bit x set iff popcount(s & x)
    is odd (multiplying a function by chi_S is XOR by masks[s])."""
    n = 1 << k
    s = np.arange(n, dtype=np.uint32)[:, None]
    x = np.arange(n, dtype=np.uint32)[None, :]
    parity = (np.bitwise_count(s & x) & 1).astype(np.uint64)
    return (parity << x.astype(np.uint64)).sum(axis=1, dtype=np.uint64)


@dataclass(frozen=True)
class QuotientStructure:
    """Partition of all 2^(2^k) Boolean functions into classes closed under
    character multiplication; class_of/shift_of are dense arrays for k <= 4
    and computed on demand for k = 5 (too many functions to materialize)."""

    k: int
    masks: np.ndarray
    reps: np.ndarray | None
    class_id: np.ndarray | None
    shift_id: np.ndarray | None

    @property
    def N(self) -> int:
        return 1 << self.k

    @property
    def num_classes(self) -> int:
        return (1 << self.N) // self.N

    def representative(self, class_index: int) -> int:
        if self.reps is not None:
            return int(self.reps[class_index])
        raise ValueError("lazy quotient does not enumerate classes")

    def class_of(self, code: int):
        """Return (class id, shift s) with code == rep(class) xor masks[s].

        In lazy mode the class id is the canonical representative itself.
        """
        if self.class_id is not None:
            return int(self.class_id[code]), int(self.shift_id[code])
        orbit = np.uint64(code) ^ self.masks
        s = int(np.argmin(orbit))
        return int(orbit[s]), s


def build_quotient(k: int, allow_large: bool = False) -> QuotientStructure:
    """Partition with canonical representatives (numerically smallest code).

    k <= 4 by default; k = 5 (2^32 functions) is gated behind allow_large and
    served lazily without dense per-function arrays.
    """
    if not 1 <= k <= HARD_MAX_K:
        raise ValueError(f"k={k} outside [1, {HARD_MAX_K}]")
    if k > DEFAULT_MAX_K and not allow_large:
        raise ValueError(f"k={k} needs allow_large=True (2^{1 << k} functions)")
    masks = shift_masks(k)
    if k > DEFAULT_MAX_K:
        return QuotientStructure(k, masks, None, None, None)
    n = 1 << k
    total = 1 << n
    class_id = np.full(total, -1, dtype=np.int64)
    shift_id = np.zeros(total, dtype=np.int64)
    reps = []
    for code in range(total):
        if class_id[code] >= 0:
            continue
        orbit = np.uint64(code) ^ masks
        class_id[orbit] = len(reps)
        shift_id[orbit] = np.arange(n)
        reps.append(code)
    assert len(reps) == total // n
    return QuotientStructure(
        k, masks, np.array(reps, dtype=np.uint64), class_id, shift_id
    )


def build_kv_instance(k: int, eta: float, window: str = "typical",
                      quotient: QuotientStructure | None = None):
    """The quotiented noisy-hypercube UG instance on m vertices, N labels.

    window: "typical" for the [ceil(eta N/2), floor(2 eta N)] deletion
    (renormalized), "none" to keep all distances. Returns (instance,
    quotient, hypercube). The label-extended graph of the instance is
    weighted-graph-isomorphic to the windowed hypercube.
    """
    if k > 3:
        raise ValueError(
            "the instance pipeline materializes the edge list and is capped "
            "at k=3 (~10^6 edges at k=4); the quotient and vector solution "
            "remain available via build_quotient/build_ug_sdp_solution"
        )
    q = quotient if quotient is not None else build_quotient(k)
    N = q.N
    if window == "typical":
        win = typical_window(N, eta)
        if win is None:
            raise ValueError(
                f"typical window is empty at k={k}, eta={eta}; "
                "pass window='none' or widen it"
            )
    elif window == "none":
        win = None
    else:
        raise ValueError(f"unknown window mode {window!r}")
    cube = NoisyHypercube(N, eta, window=win, renormalized=True)
    profile = cube.weight_profile()
    m = q.num_classes
    labels = np.arange(N, dtype=np.int64)
    edges = []
    for i in range(m):
        rep_i = int(q.reps[i])
        # self-bundles: pairs {g, g*chi_c} all at distance popcount(masks[c])
        for c in range(1, N):
            d = int(np.bitwise_count(q.masks[c]))
            if profile[d] > 0:
                perm = labels ^ c
                edges.append(UGEdge(i, i, perm, (N / 2) * float(profile[d])))
        for j in range(i + 1, m):
            rep_j = int(q.reps[j])
            for c in range(N):
                d = int(np.bitwise_count(np.uint64(rep_i ^ rep_j) ^ q.masks[c]))
                if profile[d] > 0:
                    perm = labels ^ c
                    edges.append(UGEdge(i, j, perm, N * float(profile[d])))
    u = UGInstance(m, N, edges, regularity_tol=1e-9)
    return u, q, cube


@dataclass(frozen=True)
class UGVectorSolution:
    """Per class, the ordered orthonormal basis of R^N indexed by shift.

    basis[i, s, x] is the +/-1 table of rep_i * chi_S; actual SDP vectors are
    these rows scaled by 1/sqrt(N), and the SDP's tensored vectors enter only
    through squared base inner products.
    """

    k: int
    basis: np.ndarray  # (m, N, N) int8

    @property
    def N(self) -> int:
        return 1 << self.k

    def gram(self, i: int, j: int) -> np.ndarray:
        """G[s, t] = <u_{i,s}, u_{j,t}> as exact multiples of 1/N."""
        a = self.basis[i].astype(np.int64)
        b = self.basis[j].astype(np.int64)
        return (a @ b.T).astype(np.float64) / self.N


def build_ug_sdp_solution(q: QuotientStructure) -> UGVectorSolution:
    if q.reps is None:
        raise ValueError("lazy quotient cannot materialize the vector solution")
    N = q.N
    m = q.num_classes
    codes = q.reps[:, None] ^ q.masks[None, :]  # (m, N) table codes
    x = np.arange(N, dtype=np.uint64)
    bits = (codes[:, :, None] >> x[None, None, :]) & np.uint64(1)
    basis = (1 - 2 * bits.astype(np.int8)).astype(np.int8)
    return UGVectorSolution(q.k, basis)


@dataclass
class FeasibilityReport:
    norm_sum_residual: float
    orthogonality_residual: float
    cross_negativity: float
    cross_sum_residual: float
    triangle_violation: float
    triples_checked: int

    def max_residual(self) -> float:
        return max(
            self.norm_sum_residual,
            self.orthogonality_residual,
            self.cross_negativity,
            self.cross_sum_residual,
            self.triangle_violation,
        )


def check_ug_sdp_feasibility(sol: UGVectorSolution, seed: int = 0,
                             triple_samples: int = 20000) -> FeasibilityReport:
    """Verify the UG SDP constraints on the squared-tensor solution.

    Per vertex: sum of squared-vector norms equals N and distinct shifts are
    orthogonal. Across vertices: all tensored inner products are squares
    (hence >= 0) and each cross sum equals N (basis completeness). Base
    vectors additionally satisfy 1 + <u,v> >= <v,w> + <u,w> on sampled
    triples (entries are +/-1/sqrt(N)).
    """
    m, N, _ = sol.basis.shape
    norm_res = 0.0
    orth_res = 0.0
    cross_neg = 0.0
    cross_res = 0.0
    for i in range(m):
        g = sol.gram(i, i)
        sq = g**2
        norm_res = max(norm_res, abs(float(np.trace(sq)) - N))
        orth_res = max(orth_res, float(np.max(np.abs(sq - np.diag(np.diag(sq))))))
        for j in range(i + 1, m):
            sq = sol.gram(i, j) ** 2
            cross_neg = max(cross_neg, float(np.max(-sq)))
            cross_res = max(cross_res, abs(float(np.sum(sq)) - N))
    rng = np.random.default_rng(seed)
    flat = sol.basis.reshape(m * N, N).astype(np.float64) / math.sqrt(N)
    idx = rng.integers(0, m * N, size=(triple_samples, 3))
    gu = np.einsum("ij,ij->i", flat[idx[:, 0]], flat[idx[:, 1]])
    gv = np.einsum("ij,ij->i", flat[idx[:, 0]], flat[idx[:, 2]])
    gw = np.einsum("ij,ij->i", flat[idx[:, 1]], flat[idx[:, 2]])
    tri = float(np.max(gv + gw - gu - 1.0, initial=-np.inf))
    return FeasibilityReport(
        norm_sum_residual=norm_res,
        orthogonality_residual=orth_res,
        cross_negativity=cross_neg,
        cross_sum_residual=cross_res,
        triangle_violation=max(tri, 0.0),
        triples_checked=triple_samples,
    )


def ug_sdp_objective(u: UGInstance, sol: UGVectorSolution) -> float:
    """sum_e wt(e) * (1/N) sum_i <u_{v,pi(i)}, u_{w,i}>^2, evaluated on the
    squared-tensor Gram."""
    m, N, _ = sol.basis.shape
    if u.num_labels != N or u.num_vertices != m:
        raise ValueError("solution shape does not match instance")
    total = 0.0
    for e in u.edges:
        g = sol.gram(e.v, e.w)
        matched = g[e.perm, np.arange(N)] ** 2
        total += e.weight * float(np.sum(matched)) / N
    return total


@dataclass
class UlcPropertyReport:
    basis_completeness_residual: float
    triangle_violation: float
    matching_residual: float
    closeness_satisfied: bool
    closeness_margin: float
    triples_checked: int


def verify_ulc_properties(u: UGInstance, sol: UGVectorSolution, eta: float,
                          seed: int = 0, triple_samples: int = 200000,
                          matching_exhaustive: bool = True) -> UlcPropertyReport:
    """Check the four structural properties of the gap solution.

    (2) basis completeness ||w||^2 = sum_i <w, v_i>^2 for random w;
    (3) the +/-1/sqrt(N) triangle inequality over sampled triples;
    (4) shift covariance <v_i, w_j> = <v_(i^l), w_(j^l)>, exhaustive over
        vertex pairs and (i, j, l) when matching_exhaustive;
    (5) per edge, some matched pair (i0, j0) with inner product >= 1-4*eta
        and i0 ^ l = pi_e(j0 ^ l) for all l.
    """
    m, N, _ = sol.basis.shape
    rng = np.random.default_rng(seed)

    completeness = 0.0
    for _ in range(50):
        w = rng.normal(size=N)
        i = int(rng.integers(m))
        proj = sol.basis[i].astype(np.float64) / math.sqrt(N) @ w
        completeness = max(completeness, abs(float(np.sum(proj**2)) - float(w @ w)))

    rep = check_ug_sdp_feasibility(sol, seed=seed, triple_samples=triple_samples)

    matching = 0.0
    if matching_exhaustive:
        shifts = np.arange(N)
        for i in range(m):
            for j in range(i, m):
                g = sol.gram(i, j)
                for ell in range(1, N):
                    matching = max(
                        matching,
                        float(np.max(np.abs(g[np.ix_(shifts ^ ell, shifts ^ ell)] - g))),
                    )

    closeness_ok = True
    margin = np.inf
    for e in u.edges:
        g = sol.gram(e.v, e.w)
        best = -np.inf
        for j0 in range(N):
            i0 = int(e.perm[j0])  # i0 ^ l == perm[j0 ^ l] holds iff i0 = perm[j0]
            if np.array_equal(e.perm[np.arange(N) ^ j0], np.arange(N) ^ i0):
                best = max(best, float(g[i0, j0]))
        margin = min(margin, best - (1 - 4 * eta))
        if best < 1 - 4 * eta - 1e-12:
            closeness_ok = False
    return UlcPropertyReport(
        basis_completeness_residual=completeness,
        triangle_violation=rep.triangle_violation,
        matching_residual=matching,
        closeness_satisfied=closeness_ok,
        closeness_margin=float(margin),
        triples_checked=triple_samples,
    )


def basis_to_text(sol: UGVectorSolution) -> str:
    """Per-class basis export: `CLASS i` then N rows of N signed integers
    (entries to be scaled by 1/sqrt(N))."""
    m, N, _ = sol.basis.shape
    lines = [f"BASIS {sol.k} {m}"]
    for i in range(m):
        lines.append(f"CLASS {i}")
        for s in range(N):
            lines.append(" ".join(str(int(v)) for v in sol.basis[i, s]))
    return "\n".join(lines) + "\n"


def basis_from_text(text: str) -> UGVectorSolution:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    tag, k, m = lines[0].split()
    if tag != "BASIS":
        raise ValueError("not a basis file")
    k, m = int(k), int(m)
    N = 1 << k
    basis = np.zeros((m, N, N), dtype=np.int8)
    pos = 1
    for i in range(m):
        if lines[pos] != f"CLASS {i}":
            raise ValueError(f"expected CLASS {i} header")
        pos += 1
        for s in range(N):
            row = np.array([int(x) for x in lines[pos].split()], dtype=np.int8)
            if len(row) != N:
                raise ValueError("basis row length mismatch")
            basis[i, s] = row
            pos += 1
    return UGVectorSolution(k, basis)
