"""Null-space solver for the rotation-field formulation.

Unknowns are the rotation samples w (3 per node instance, so crease values
stay double-valued) plus two global 3-vectors What1, What2 holding the
growth of w over one full period in each direction.  Stored samples are
fundamental-domain values; wherever a stencil reaches past the periodic
seam the growth vector enters through the grid's wrap coefficients, so no
explicit wrap rows exist.

Row families, all scaled like first derivatives (O(1/h) entries):

  interior-PDE          at every node instance, one-sided at panel ends:
                        d2(w) x x1 - d1(w) x x2 = 0          (3 rows)
  crease-admissibility  per crease pair and cross node:
                        (w+ - w-) x t / hbar = 0, t the crease tangent
                        (3 rows, rank 2 by construction)
  panel-continuity      identity jump (w+ - w-) / hbar = 0 at smooth panel
                        joints, where the field cannot jump
  oscillation-control   scaled interior fourth differences along each
                        direction.  Centered first-derivative stencils
                        annihilate mesh-frequency checkerboards, which would
                        otherwise enter the numeric null set and fake strain
                        states no actual field reaches; these rows price
                        them out while staying exactly zero on fields that
                        are arc-wise cubic along grid lines (every closed-
                        form mode of the built-in families) and O(h^3)-small
                        on smooth fields.

Null vectors are selected by a threshold on sigma/sigma_max.  The automatic
policy cuts at a resolution-dependent cap and checks that the spectrum gap
at the cut is decisive; an indecisive gap is flagged, never silently
resolved.  Note the null set of these systems is typically large: besides
the handful of modes with nonzero effective strains it contains rigid
rotations and a swarm of strain-free oscillatory fields, so downstream
dimension counts are always taken on strain images, not on the raw null
dimension.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import PeriodicGrid, display_lattice, display_positions

ROW_PDE = "interior-PDE"
ROW_CREASE = "crease-admissibility"
ROW_CONTINUITY = "panel-continuity"
ROW_OSCILLATION = "oscillation-control"

OSC_SCALE = 0.25         # weight of the checkerboard-control rows

DENSE_SVD_MAX = 10_000   # full dense SVD up to this many unknowns
GRAM_EIGH_MAX = 16_000   # dense eigensolve on the normal matrix up to this

# default threshold-policy constants (calibrated on the built-in families;
# see tests/test_solver.py for the calibration evidence).  The cap scales
# like h, not h^2: per unit strain target, the residual of a discretized
# smooth mode is sigma * ||y|| ~ h^2 * h^-1, while the non-realizable band
# stays O(1), so a multiple of h separates the two at every resolution.
CAP_SCALE = 0.2          # cap on sigma/sigma_max is CAP_SCALE * h
GAP_MIN = 10.0           # spectral ratio at the cut for a decisive split
FLOOR_SVD = 1e-12        # sigma/sigma_max resolution floor, dense SVD
FLOOR_GRAM = 5e-8        # same, via the squared (normal-matrix) route


def cross_blocks(vs: np.ndarray) -> np.ndarray:
    """Per-row matrices C with C @ a = a x v (post-cross by v)."""
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    B = np.zeros(vs.shape[:-1] + (3, 3))
    B[..., 0, 1] = vs[..., 2]
    B[..., 0, 2] = -vs[..., 1]
    B[..., 1, 0] = -vs[..., 2]
    B[..., 1, 2] = vs[..., 0]
    B[..., 2, 0] = vs[..., 1]
    B[..., 2, 1] = -vs[..., 0]
    return B


def _block_diag(blocks: np.ndarray) -> sp.bsr_matrix:
    n = blocks.shape[0]
    return sp.bsr_matrix((blocks, np.arange(n), np.arange(n + 1)),
                         shape=(3 * n, 3 * n))


def _column_block(blocks: np.ndarray) -> sp.bsr_matrix:
    """Stack n 3x3 blocks into a (3n, 3) column."""
    n = blocks.shape[0]
    return sp.bsr_matrix((blocks, np.zeros(n, dtype=int), np.arange(n + 1)),
                         shape=(3 * n, 3))


@dataclass
class ConstraintSystem:
    """Sparse row system over [w samples, What1, What2]."""

    matrix: sp.csr_matrix
    grid: PeriodicGrid
    segments: tuple[tuple[str, int, int], ...]
    _sigma_max: float | None = field(default=None, repr=False)

    @property
    def nrows(self) -> int:
        return self.matrix.shape[0]

    @property
    def nunknowns(self) -> int:
        return self.matrix.shape[1]

    @property
    def w_size(self) -> int:
        return 3 * self.grid.nnodes

    def row_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for tag, start, stop in self.segments:
            counts[tag] = counts.get(tag, 0) + (stop - start)
        return counts

    def sigma_max(self) -> float:
        if self._sigma_max is None:
            A = self.matrix
            if min(A.shape) <= 1500:
                val = float(la.svdvals(A.toarray())[0])
            else:
                try:
                    val = float(spla.svds(A, k=1,
                                          return_singular_vectors=False)[0])
                except Exception:
                    val = float(la.svdvals(A.toarray())[0])
            self._sigma_max = val
        return self._sigma_max

    def split(self, y: np.ndarray):
        """Split an unknown vector into (w field, What1, What2)."""
        n1, n2 = self.grid.shape
        w = np.asarray(y[: self.w_size], dtype=float).reshape(n1, n2, 3)
        return w, np.asarray(y[self.w_size:self.w_size + 3], dtype=float), \
            np.asarray(y[self.w_size + 3:], dtype=float)


def assemble_system(grid: PeriodicGrid) -> ConstraintSystem:
    """Build the full constraint matrix for one period of the chart."""
    n1, n2 = grid.shape
    n = grid.nnodes
    x1 = grid.x1.reshape(n, 3)
    x2 = grid.x2.reshape(n, 3)
    scale = max(np.abs(x1).max(), np.abs(x2).max())

    C1 = _block_diag(cross_blocks(x1))
    C2 = _block_diag(cross_blocks(x2))
    D1, wc1 = grid.derivative_operator(0)
    D2, wc2 = grid.derivative_operator(1)
    I3 = sp.identity(3, format="csr")
    Aw = (C1 @ sp.kron(D2, I3, format="csr")
          - C2 @ sp.kron(D1, I3, format="csr")).tocsr()

    # growth columns: only nodes whose stencils span the seam contribute
    def growth_col(wc, C):
        blocks = np.zeros((n, 3, 3))
        nz = np.flatnonzero(wc)
        if nz.size:
            blocks[nz] = wc[nz, None, None] * C[nz]
        return _column_block(blocks)

    B1 = growth_col(-wc1, cross_blocks(x2))
    B2 = growth_col(wc2, cross_blocks(x1))
    parts = [sp.hstack([Aw, B1, B2], format="csr")]
    segments: list[tuple[str, int, int]] = [(ROW_PDE, 0, 3 * n)]

    # jump rows at duplicated breakpoints
    blocks: list[np.ndarray] = []
    bcols: list[int] = []
    tags: list[str] = []
    eye3 = np.eye(3)
    for direction in (0, 1):
        axis = grid.axis(direction)
        cross_count = n2 if direction == 0 else n1
        for pair in axis.pairs:
            inv_h = 1.0 / pair.spacing
            for j in range(cross_count):
                if direction == 0:
                    kp = grid.node_index(pair.plus, j)
                    km = grid.node_index(pair.minus, j)
                    tangent = grid.x2[pair.plus, j]
                else:
                    kp = grid.node_index(j, pair.plus)
                    km = grid.node_index(j, pair.minus)
                    tangent = grid.x1[j, pair.plus]
                if pair.is_crease:
                    if np.linalg.norm(tangent) <= 1e-12 * scale:
                        raise ValueError(
                            f"degenerate crease tangent at breakpoint "
                            f"{pair.value} (direction {direction})")
                    R = cross_blocks(tangent)[0] * inv_h
                    tags.append(ROW_CREASE)
                else:
                    R = eye3 * inv_h
                    tags.append(ROW_CONTINUITY)
                blocks.extend((R, -R))
                bcols.extend((kp, km))

    if tags:
        nb = len(tags)
        P = sp.bsr_matrix((np.array(blocks), np.array(bcols),
                           2 * np.arange(nb + 1)), shape=(3 * nb, 3 * n))
        parts.append(sp.hstack([P, sp.csr_matrix((3 * nb, 6))], format="csr"))
        start = 3 * n
        run_tag, run_start = tags[0], start
        for t in tags[1:]:
            start += 3
            if t != run_tag:
                segments.append((run_tag, run_start, start))
                run_tag, run_start = t, start
        segments.append((run_tag, run_start, start + 3))

    # checkerboard control, applied to the cover field w + m * What
    offset = sum(p.shape[0] for p in parts)
    for direction in (0, 1):
        S, sw = grid.fourth_difference_operator(direction)
        m = S.shape[0]
        if m == 0:
            continue
        Sw = sp.kron(S, I3, format="csr") * (OSC_SCALE * scale)
        gblocks = np.zeros((m, 3, 3))
        nz = np.flatnonzero(sw)
        if nz.size:
            gblocks[nz] = (OSC_SCALE * scale * sw[nz])[:, None, None] * eye3
        gcol = _column_block(gblocks)
        zcol = sp.csr_matrix((3 * m, 3))
        cols = [Sw, gcol, zcol] if direction == 0 else [Sw, zcol, gcol]
        parts.append(sp.hstack(cols, format="csr"))
        segments.append((ROW_OSCILLATION, offset, offset + 3 * m))
        offset += 3 * m

    A = sp.vstack(parts, format="csr")
    return ConstraintSystem(matrix=A, grid=grid, segments=tuple(segments))


# -- threshold policy ----------------------------------------------------

@dataclass(frozen=True)
class ThresholdPolicy:
    """How to cut the singular spectrum into null / non-null.

    kind "fixed" cuts at sigma/sigma_max <= tau and is never ambiguous (the
    caller chose it).  kind "auto" cuts at cap_scale * h and calls the cut
    decisive only when the spectral ratio across it is at least gap_min;
    otherwise the result is flagged ambiguous.
    """

    kind: str = "auto"
    tau: float | None = None
    cap_scale: float = CAP_SCALE
    gap_min: float = GAP_MIN
    floor_rel: float | None = None   # default: picked per solver method

    def __post_init__(self):
        if self.kind not in ("auto", "fixed"):
            raise ValueError(f"unknown threshold kind {self.kind!r}")
        if self.kind == "fixed" and (self.tau is None or self.tau <= 0):
            raise ValueError("fixed policy needs a positive tau")

    @staticmethod
    def coerce(threshold="auto", policy: "ThresholdPolicy | None" = None):
        if policy is not None:
            return policy
        if isinstance(threshold, ThresholdPolicy):
            return threshold
        if isinstance(threshold, str):
            if threshold == "auto":
                return ThresholdPolicy()
            return ThresholdPolicy(kind="fixed", tau=float(threshold))
        return ThresholdPolicy(kind="fixed", tau=float(threshold))

    def cut(self, rel: np.ndarray, h: float, floor: float):
        """Cut a sorted-ascending sigma/sigma_max array.

        Returns (count_below, cap, gap_ratio, ambiguous).
        """
        rel = np.asarray(rel, dtype=float)
        cap = self.tau if self.kind == "fixed" else self.cap_scale * h
        if self.floor_rel is not None:
            floor = self.floor_rel
        k = int(np.searchsorted(rel, cap, side="right"))
        if k == 0:
            gap = float(rel[0] / cap) if rel.size else np.inf
        elif k == rel.size:
            gap = float(cap / max(rel[-1], floor))
        else:
            gap = float(rel[k] / max(rel[k - 1], floor))
        ambiguous = self.kind == "auto" and gap < self.gap_min
        return k, float(cap), gap, ambiguous


# -- modes and null space ------------------------------------------------

@dataclass(frozen=True)
class RotationMode:
    """One rotation field: per-node samples plus growth per unit parameter."""

    w: np.ndarray          # (n1, n2, 3)
    W1: np.ndarray         # growth per unit xi1 (What1 / T1)
    W2: np.ndarray
    sigma: float

    def vector(self, grid: PeriodicGrid) -> np.ndarray:
        t1, t2 = grid.chart.period
        return np.concatenate([self.w.reshape(-1), self.W1 * t1, self.W2 * t2])

    def growth_fraction(self) -> float:
        """Share of the mode's norm carried by the growth vectors."""
        g = float(np.dot(self.W1, self.W1) + np.dot(self.W2, self.W2))
        total = float(np.sum(self.w * self.w)) + g
        return np.sqrt(g / total) if total > 0 else 0.0


def mode_from_vector(system: ConstraintSystem, y: np.ndarray,
                     sigma: float | None = None) -> RotationMode:
    y = np.asarray(y, dtype=float)
    nrm = np.linalg.norm(y)
    if nrm == 0:
        raise ValueError("zero mode vector")
    y = y / nrm
    if sigma is None:
        sigma = float(np.linalg.norm(system.matrix @ y))
    t1, t2 = grid_periods(system.grid)
    w, h1, h2 = system.split(y)
    return RotationMode(w=w, W1=h1 / t1, W2=h2 / t2, sigma=float(sigma))


def grid_periods(grid: PeriodicGrid) -> tuple[float, float]:
    return grid.chart.period


@dataclass(frozen=True)
class NullspaceResult(Sequence):
    """Modes below the threshold plus the full spectrum for reporting."""

    modes: tuple[RotationMode, ...]
    vectors: np.ndarray          # (N, dim), columns match modes order
    spectrum: np.ndarray         # all sigma, descending
    sigma_max: float
    threshold_rel: float
    gap: float
    ambiguous: bool
    method: str
    policy: ThresholdPolicy

    @property
    def dim(self) -> int:
        return len(self.modes)

    def __len__(self) -> int:
        return len(self.modes)

    def __getitem__(self, i):
        return self.modes[i]


def _rotate_growth_out(V: np.ndarray, w_size: int) -> np.ndarray:
    """Rotate a null basis so growth concentrates in the leading columns.

    Any orthonormal basis of the null cluster is as good as another; this
    one puts What-carrying directions first and leaves the rest exactly
    periodic, which makes classification stable.
    """
    if V.shape[1] == 0:
        return V
    Wb = V[w_size:, :]
    _, _, Vt = la.svd(Wb, full_matrices=True)
    return V @ Vt.T


def nullspace(system: ConstraintSystem, threshold="auto",
              policy: ThresholdPolicy | None = None) -> NullspaceResult:
    """Extract the sub-threshold right singular subspace.

    Dense SVD while the unknown count allows it; beyond that the normal
    matrix is eigen-decomposed instead, which costs ~8 digits of resolution
    near zero (floor 5e-8 * sigma_max) but never changes the subspace.
    """
    pol = ThresholdPolicy.coerce(threshold, policy)
    A = system.matrix
    N = A.shape[1]
    h = system.grid.h_max

    if N <= DENSE_SVD_MAX:
        method = "svd"
        floor = FLOOR_SVD
        dense = A.toarray()
        _, s, Vt = la.svd(dense, full_matrices=A.shape[0] < N)
        s_full = np.concatenate([s, np.zeros(N - len(s))])
        order = np.argsort(s_full)          # ascending
        s_asc = s_full[order]
        smax = float(s_asc[-1])
        rel = s_asc / smax
        k, cap, gap, amb = pol.cut(rel, h, floor)
        Vn = Vt[order[:k]].T
        spectrum = s_full[np.argsort(s_full)[::-1]]
    elif N <= GRAM_EIGH_MAX:
        method = "gram"
        floor = FLOOR_GRAM
        G = (A.T @ A).toarray()
        G = 0.5 * (G + G.T)
        evals = la.eigvalsh(G)
        s_asc = np.sqrt(np.clip(evals, 0.0, None))
        smax = float(s_asc[-1])
        rel = s_asc / smax
        k, cap, gap, amb = pol.cut(rel, h, floor)
        if k:
            hi = 0.5 * (evals[k - 1] + evals[k]) if k < N else evals[-1] + 1.0
            _, Vn = la.eigh(G, subset_by_value=(-np.inf, hi))
            Vn = Vn[:, :k]
        else:
            Vn = np.zeros((N, 0))
        spectrum = s_asc[::-1].copy()
    else:
        raise ValueError(
            f"{N} unknowns is beyond the factorization caps "
            f"({GRAM_EIGH_MAX}); use the strain-space forms instead of the "
            "full null basis at this resolution")

    system._sigma_max = smax
    Vn = _rotate_growth_out(Vn, system.w_size)
    modes = [mode_from_vector(system, Vn[:, i]) for i in range(Vn.shape[1])]
    idx = np.argsort([m.sigma for m in modes])
    modes = [modes[i] for i in idx]
    Vn = Vn[:, idx]
    return NullspaceResult(modes=tuple(modes), vectors=Vn, spectrum=spectrum,
                           sigma_max=smax, threshold_rel=cap, gap=gap,
                           ambiguous=amb, method=method, policy=pol)


def projection_residual(result: NullspaceResult, vector: np.ndarray) -> float:
    """Distance from a unit vector to the span of the extracted modes."""
    v = np.asarray(vector, dtype=float)
    v = v / np.linalg.norm(v)
    if result.vectors.shape[1] == 0:
        return 1.0
    c = result.vectors.T @ v
    return float(np.sqrt(max(0.0, 1.0 - float(c @ c))))


def kernel_distance(system: ConstraintSystem, vectors, threshold_rel: float,
                    refine: int = 1) -> np.ndarray:
    """Distance from unit vectors to the sub-threshold singular subspace.

    Uses the spectral filter sigma^2/(sigma^2 + eps) with eps at the
    threshold, so no basis of the (large) null set is ever formed.  Accurate
    when the spectrum stays clear of the threshold by a decade or so.
    """
    A = system.matrix.tocsr()
    smax = system.sigma_max()
    eps = (threshold_rel * smax) ** 2
    G = (A.T @ A).tocsc()
    H = (G + eps * sp.identity(A.shape[1], format="csc")).tocsc()
    lu = spla.splu(H)
    vs = np.atleast_2d(np.asarray(vectors, dtype=float))
    out = []
    for v in vs:
        v = v / np.linalg.norm(v)
        b = G @ v
        z = lu.solve(b)
        for _ in range(refine):
            z = z + lu.solve(b - H @ z)
        out.append(float(np.linalg.norm(z)))
    return np.array(out)


# -- constrained least-squares forms --------------------------------------

class ConstrainedMinimizer:
    """min ||A y||^2 + eps ||y||^2  subject to  C y = c.

    One sparse LU of the stationarity system serves all right-hand sides.
    eps only tames the (huge) strain-free null set inside the factorization;
    reported objective values drop the eps term.
    """

    def __init__(self, system: ConstraintSystem, C: np.ndarray,
                 eps_rel: float = 1e-13):
        A = system.matrix.tocsr()
        N = A.shape[1]
        C = np.atleast_2d(np.asarray(C, dtype=float))
        if C.shape[1] != N:
            raise ValueError("constraint width does not match unknown count")
        lam = system.sigma_max() ** 2
        self.eps = eps_rel * lam
        G = (A.T @ A).tocsr()
        Cs = sp.csr_matrix(C)
        K = sp.bmat([[G + self.eps * sp.identity(N), Cs.T],
                     [Cs, None]], format="csc")
        self._lu = spla.splu(K)
        self._K = K
        self._A = A
        self._N = N
        self._k = C.shape[0]

    def solve(self, c: np.ndarray, refine: int = 2) -> np.ndarray:
        b = np.concatenate([np.zeros(self._N), np.asarray(c, dtype=float)])
        z = self._lu.solve(b)
        for _ in range(refine):
            z = z + self._lu.solve(b - self._K @ z)
        return z[: self._N]

    def form(self, nfree: int | None = None):
        """Gram matrix of the constrained residuals over unit constraints.

        Returns (F, Y): F[i, j] = <A y_i, A y_j> for the minimizers y_i of
        the first nfree unit right-hand sides, Y the minimizers (N, nfree).
        """
        nfree = self._k if nfree is None else nfree
        cols = []
        for i in range(nfree):
            c = np.zeros(self._k)
            c[i] = 1.0
            cols.append(self.solve(c))
        Y = np.column_stack(cols) if cols else np.zeros((self._N, 0))
        R = self._A @ Y
        F = R.T @ R
        return 0.5 * (F + F.T), Y


@dataclass(frozen=True)
class QuadraticSpace:
    """A small quadratic landscape q(c) = best residual^2 achieving c."""

    form: np.ndarray         # (m, m), PSD
    minimizers: np.ndarray   # (N, m)
    basis: np.ndarray        # (param_dim, m): c-coordinates -> natural ones
    eps: float

    @property
    def empty(self) -> bool:
        return self.form.shape[0] == 0

    def floor_sigma(self) -> float:
        """Regularization bias bound on the residual values."""
        if self.empty:
            return 0.0
        norms = np.linalg.norm(self.minimizers, axis=0)
        return float(np.sqrt(self.eps) * max(1.0, norms.max()))


def _two_pass(system: ConstraintSystem, C: np.ndarray, nfree: int,
              eps_rel: float, rep_eps_rel: float):
    """Form from a weak ridge, representative minimizers from a strong one.

    With a near-vanishing ridge the reported residuals are essentially
    unbiased, but the minimizers wander deep into the strain-free continuum
    (norms grow without bound as eps -> 0).  A second solve with a stronger
    ridge returns the physically sized fields; its residuals would be
    biased, so they are discarded.
    """
    cm = ConstrainedMinimizer(system, C, eps_rel)
    F, _ = cm.form(nfree=nfree)
    rep = ConstrainedMinimizer(system, C, rep_eps_rel)
    _, Y = rep.form(nfree=nfree)
    return F, Y, cm.eps


def growth_space(system: ConstraintSystem, eps_rel: float = 1e-13,
                 rep_eps_rel: float = 1e-7) -> QuadraticSpace:
    """Best residual as a quadratic form over the 6 growth coordinates.

    Small eigenvalues = growth vectors attainable by actual null modes.
    """
    N = system.nunknowns
    ws = system.w_size
    C = np.zeros((6, N))
    C[:, ws:] = np.eye(6)
    F, Y, eps = _two_pass(system, C, 6, eps_rel, rep_eps_rel)
    return QuadraticSpace(form=F, minimizers=Y, basis=np.eye(6), eps=eps)


def constrained_space(system: ConstraintSystem, L: np.ndarray,
                      zero_growth: bool = True, eps_rel: float = 1e-13,
                      rep_eps_rel: float = 1e-7,
                      rank_rtol: float = 1e-10) -> QuadraticSpace:
    """Best residual over the image coordinates of a linear map L on w.

    L has shape (m, 3n).  Rank-deficient rows (components no field can ever
    produce) are projected out first; ``basis`` maps the surviving
    coordinates back.  With zero_growth the minimizing fields are kept
    strictly periodic.
    """
    N = system.nunknowns
    ws = system.w_size
    L = np.atleast_2d(np.asarray(L, dtype=float))
    m = L.shape[0]
    if L.shape[1] != ws:
        raise ValueError("row map width must be 3 * nnodes")
    U, sv, _ = la.svd(L, full_matrices=False)
    smax = sv[0] if sv.size and sv[0] > 0 else 0.0
    r = int(np.sum(sv > rank_rtol * smax)) if smax > 0 else 0
    if r == 0:
        return QuadraticSpace(form=np.zeros((0, 0)),
                              minimizers=np.zeros((N, 0)),
                              basis=np.zeros((m, 0)), eps=0.0)
    Ur = U[:, :r]
    Lr = Ur.T @ L
    rows = r + (6 if zero_growth else 0)
    C = np.zeros((rows, N))
    C[:r, :ws] = Lr
    if zero_growth:
        C[r:, ws:] = np.eye(6)
    F, Y, eps = _two_pass(system, C, r, eps_rel, rep_eps_rel)
    return QuadraticSpace(form=F, minimizers=Y, basis=Ur, eps=eps)


# -- deflection recovery ---------------------------------------------------

@dataclass(frozen=True)
class DeflectionField:
    """Deflection samples on the display lattice, anchored to 0 at [0, 0]."""

    values: np.ndarray               # (r, c, 3)
    fundamental_shape: tuple[int, int]

    @property
    def node_values(self) -> np.ndarray:
        n1, n2 = self.fundamental_shape
        return self.values[:n1, :n2]


def _cover_rotation(mode: RotationMode, grid: PeriodicGrid):
    """Rotation samples on the display lattice, growth offsets included."""
    ib, jb, e1, e2 = display_lattice(grid)
    t1, t2 = grid.chart.period
    m1 = grid.axis1.wrap_m[ib] + e1
    m2 = grid.axis2.wrap_m[jb] + e2
    w = mode.w[np.ix_(ib, jb)].astype(float)
    w = w + m1[:, None, None] * (t1 * mode.W1)
    w = w + m2[None, :, None] * (t2 * mode.W2)
    return w


def recover_deflection(mode: RotationMode, grid: PeriodicGrid,
                       order: str = "rows") -> DeflectionField:
    """Path-integrate d(deflection) = w x dx over the display lattice.

    Trapezoid increments along lattice edges; the spanning tree is the first
    column then each row ("rows") or the transpose ("cols").  Duplicated
    breakpoint nodes are zero-length edges and pick up no increment.
    """
    P = display_positions(grid)
    w = _cover_rotation(mode, grid)
    d0 = np.cross(0.5 * (w[1:] + w[:-1]), P[1:] - P[:-1])
    d1 = np.cross(0.5 * (w[:, 1:] + w[:, :-1]), P[:, 1:] - P[:, :-1])
    out = np.zeros_like(P)
    if order == "rows":
        out[1:, 0] = np.cumsum(d0[:, 0], axis=0)
        out[:, 1:] = out[:, :1] + np.cumsum(d1, axis=1)
    elif order == "cols":
        out[0, 1:] = np.cumsum(d1[0], axis=0)
        out[1:, :] = out[:1, :] + np.cumsum(d0, axis=0)
    else:
        raise ValueError(f"unknown integration order {order!r}")
    return DeflectionField(values=out, fundamental_shape=grid.shape)


def isometry_residual(deflection: DeflectionField, grid: PeriodicGrid) -> float:
    """max over lattice edges of |<d xdot, dx>| / |dx|^2."""
    P = display_positions(grid)
    V = deflection.values
    worst = 0.0
    for dP, dV in ((P[1:] - P[:-1], V[1:] - V[:-1]),
                   (P[:, 1:] - P[:, :-1], V[:, 1:] - V[:, :-1])):
        den = np.einsum("...k,...k->...", dP, dP)
        num = np.abs(np.einsum("...k,...k->...", dV, dP))
        mask = den > 1e-20
        if np.any(mask):
            worst = max(worst, float((num[mask] / den[mask]).max()))
    return worst
