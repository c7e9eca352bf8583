"""Dense discretizations of ``A = p (J *_b .)``, ``L0 = I - A`` and the whole-line ``B``.

``A`` is self-adjoint in the weighted space with inner product
``<u, v> = sum_i w_i u_i v_i / p_i``; the similarity ``D^{1/2} A D^{-1/2}`` with
``D = diag(w / p)`` turns it into a symmetric matrix for the eigensolvers.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kernels import BoundaryKind, Grid, KernelSpec, kernel_matrix

__all__ = [
    "ChainPositivityReport",
    "OperatorKind",
    "OperatorMatrix",
    "SymmetrizedOperator",
    "assemble",
    "boundary_defect",
    "chain_positivity",
    "read_matrix",
    "symmetrize",
    "weighted_inner",
    "weighted_norm",
    "write_matrix",
    "write_matrix_csv",
]

MAGIC = b"NLSP"


class OperatorKind(str, enum.Enum):
    A = "A"
    L0 = "L0"
    B = "B"


@dataclass(frozen=True)
class OperatorMatrix:
    entries: np.ndarray = field(repr=False)
    grid: Grid = field(repr=False)
    p: np.ndarray = field(repr=False)
    kind: OperatorKind
    bc: BoundaryKind

    @property
    def weight(self) -> np.ndarray:
        """Density of the inner product, ``1/p``."""
        return 1.0 / self.p

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, v):
        return self.entries @ v

    def inner(self, u, v) -> float:
        return weighted_inner(u, v, self.grid, self.p)


def _profile_p(profile) -> np.ndarray:
    p = np.asarray(profile.p if hasattr(profile, "p") else profile, dtype=float)
    return p


def assemble(kind: "OperatorKind | str", profile, kernel: KernelSpec, grid: Grid,
             bc: "BoundaryKind | str" = BoundaryKind.DIRICHLET) -> OperatorMatrix:
    """Matrix of the quadrature convolution followed by multiplication with ``p``.

    ``profile`` supplies ``p`` on ``grid`` (a restriction for A/L0, the
    master instanton for B; a bare array is accepted too).  B is the
    Dirichlet kernel on the master grid; since it only ever acts on functions
    that are exponentially small at the master boundary, this emulates the
    whole-line operator.
    """
    kind = OperatorKind(kind)
    bc = BoundaryKind.parse(bc)
    p = _profile_p(profile)
    if p.shape != grid.nodes.shape:
        raise ValueError(f"p has {p.size} samples, grid has {grid.n_nodes} nodes")
    if not np.all(p > 0):
        raise ValueError("p must be strictly positive")
    if kind is OperatorKind.B:
        bc = BoundaryKind.DIRICHLET
    A = p[:, None] * kernel_matrix(grid, kernel, bc)
    if kind is OperatorKind.L0:
        A = np.eye(grid.n_nodes) - A
    A.setflags(write=False)
    return OperatorMatrix(entries=A, grid=grid, p=p, kind=kind, bc=bc)


def weighted_inner(u, v, grid: Grid, p) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    p = np.asarray(p, dtype=float)
    if not (u.shape == v.shape == p.shape == grid.nodes.shape):
        raise ValueError("length mismatch between vectors, p and grid")
    return float(np.sum(grid.weights * u * v / p))


def weighted_norm(u, grid: Grid, p) -> float:
    return float(np.sqrt(weighted_inner(u, u, grid, p)))


@dataclass(frozen=True)
class SymmetrizedOperator:
    sym_entries: np.ndarray = field(repr=False)
    d_half: np.ndarray = field(repr=False)
    provenance: OperatorMatrix = field(repr=False)

    def to_sym(self, g) -> np.ndarray:
        return self.d_half * np.asarray(g, dtype=float)

    def from_sym(self, u) -> np.ndarray:
        return np.asarray(u, dtype=float) / self.d_half

    @property
    def n(self) -> int:
        return self.sym_entries.shape[0]


def symmetrize(op: OperatorMatrix) -> SymmetrizedOperator:
    if op.kind is OperatorKind.B:
        raise ValueError("symmetrize expects kind A or L0")
    d_half = np.sqrt(op.grid.weights / op.p)
    S = d_half[:, None] * op.entries / d_half[None, :]
    S = 0.5 * (S + S.T)
    S.setflags(write=False)
    return SymmetrizedOperator(sym_entries=S, d_half=d_half, provenance=op)


def boundary_defect(restriction, kernel: KernelSpec, bc: "BoundaryKind | str" = BoundaryKind.DIRICHLET) -> np.ndarray:
    """``R`` with ``(I - A) g = R + (1 - nu_B) g`` for the translation mode ``g``.

    ``g`` (restricted to T_L) satisfies ``B g = nu_B g`` on the master grid
    with ``nu_B = 1`` to rounding, so ``R`` is exactly the kernel mass that
    ``A`` misses outside T_L.  It is a sum of positive terms for Dirichlet,
    so quantities like ``1 - <Ag, g>/<g, g>`` can be formed without the
    catastrophic cancellation of ``1 - nu``.  For Neumann the reflected
    images replace the outer values, giving ``g(L + kh) - g(L - kh) < 0``.
    """
    bc = BoundaryKind.parse(bc)
    grid = restriction.grid
    r = grid.inv_h
    n = grid.n_nodes
    st = kernel.stencil(r)  # h * J(kh), normalized
    g = restriction.translation_mode
    p = restriction.p
    i = np.arange(n)
    R = np.zeros(n)
    out_r, out_l = restriction.outer_right, restriction.outer_left
    if bc is BoundaryKind.DIRICHLET:
        # the endpoint node carries trapezoid weight h/2 inside T_L and h on the master grid
        d = i - (n - 1)
        m = np.abs(d) <= r
        R[m] += 0.5 * st[d[m] + r] * out_r[0]
        d = i
        m = np.abs(d) <= r
        R[m] += 0.5 * st[d[m] + r] * out_l[0]
    for k in range(1, r + 1):
        if bc is BoundaryKind.DIRICHLET:
            vr, vl = out_r[k], out_l[k]
        else:
            vr = out_r[k] - (g[n - 1 - k] if n - 1 - k >= 0 else 0.0)
            vl = out_l[k] - (g[k] if k < n else 0.0)
        d = i - (n - 1) - k
        m = np.abs(d) <= r
        R[m] += st[d[m] + r] * vr
        d = i + k
        m = np.abs(d) <= r
        R[m] += st[d[m] + r] * vl
    return p * R


@dataclass(frozen=True)
class ChainPositivityReport:
    """Positivity of the chained kernel with ``n`` intermediate points.

    ``zeta`` is the minimum entry of ``(P M)^{n+1}`` with ``P = diag(p)``
    (one p factor in front of every convolution), and ``zeta_free`` that of
    the p-free power ``M^{n+1}``, ``M = [w_j J(x_i - x_j)]``.  Entries are
    per unit measure of the target point, i.e. divided by its weight.
    """

    n: int
    zeta: float
    zeta_free: float
    n_L: int
    predicted_n: int


def _min_entry(K: np.ndarray, w: np.ndarray) -> float:
    return float(np.min(K / w[None, :]))


def chain_positivity(kernel: KernelSpec, grid: Grid, p=None, bc: "BoundaryKind | str" = BoundaryKind.DIRICHLET,
                     n_cap: int | None = None) -> ChainPositivityReport:
    bc = BoundaryKind.parse(bc)
    M = kernel_matrix(grid, kernel, bc)
    w = grid.weights
    r = grid.inv_h
    cap = int(n_cap if n_cap is not None else 4 * grid.L + 4)
    # entries at |i - j| = r vanish (J(+-1) = 0), so M^k has bandwidth k (r - 1)
    predicted = int(np.ceil((grid.n_nodes - 1) / (r - 1))) - 1

    def positive(n: int) -> bool:
        return _min_entry(np.linalg.matrix_power(M, n + 1), w) > 0

    n = min(max(predicted, 0), cap)
    if positive(n):
        while n > 0 and positive(n - 1):
            n -= 1
    else:
        while not positive(n):
            n += 1
            if n > cap:
                raise RuntimeError(f"chain positivity not reached within n <= {cap}")
    zeta_free = _min_entry(np.linalg.matrix_power(M, n + 1), w)
    zeta = zeta_free
    if p is not None:
        p = np.asarray(p, dtype=float)
        zeta = _min_entry(np.linalg.matrix_power(p[:, None] * M, n + 1), w)
    return ChainPositivityReport(n=n, zeta=zeta, zeta_free=zeta_free, n_L=n, predicted_n=predicted)


def write_matrix(op: "OperatorMatrix | np.ndarray", path: "str | Path") -> Path:
    """Binary dump: 16-byte header (``NLSP``, u32 N, u32 reserved, 4 zero pad bytes), then N*N little-endian float64 row-major."""
    M = np.asarray(op.entries if isinstance(op, OperatorMatrix) else op, dtype="<f8")
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<III", M.shape[0], 0, 0))
        fh.write(np.ascontiguousarray(M).tobytes(order="C"))
    return path


def read_matrix(path: "str | Path") -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not an NLSP matrix file")
    if len(raw) < 16:
        raise ValueError(f"{path}: truncated header")
    n, _ = struct.unpack("<II", raw[4:12])
    data = np.frombuffer(raw, dtype="<f8", offset=16)
    if data.size != n * n:
        raise ValueError(f"{path}: expected {n * n} entries, found {data.size}")
    return data.reshape(n, n).astype(float)


def write_matrix_csv(op: "OperatorMatrix | np.ndarray", path: "str | Path", max_n: int = 200) -> Path:
    M = np.asarray(op.entries if isinstance(op, OperatorMatrix) else op, dtype=float)
    if M.shape[0] > max_n:
        raise ValueError(f"CSV export is meant for small matrices (N <= {max_n}), got {M.shape[0]}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, M, delimiter=",", fmt="%.16e")
    return path
