"""Interaction kernels, quadrature grids and the bounded-interval convolutions.

Kernels are even probability densities supported on [-1, 1].  The grid is
uniform with ``1/h`` an integer, so node differences are exact multiples of
``h`` and the kernel support spans exactly ``2/h`` cells.  The discrete
kernel used by every operator is the profile sampled at node differences and
rescaled to unit trapezoid mass; see :meth:`KernelSpec.stencil`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate

__all__ = [
    "BoundaryKind",
    "Grid",
    "KernelSpec",
    "boundary_mass",
    "build_grid",
    "convolve",
    "get_kernel",
    "kernel_from_table",
    "kernel_matrix",
    "register_kernel",
    "standard_kernel",
]

Profile = Callable[[np.ndarray], np.ndarray]


class BoundaryKind(str, enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @classmethod
    def parse(cls, value: "str | BoundaryKind") -> "BoundaryKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown boundary kind {value!r}; expected 'dirichlet' or 'neumann'") from None


@dataclass(frozen=True)
class Grid:
    """Uniform trapezoid grid on [-L, L]."""

    L: float
    inv_h: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return 1.0 / self.inv_h

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def center(self) -> int:
        """Index of the node at x = 0."""
        return (self.n_nodes - 1) // 2

    def index_of(self, x: float) -> int:
        i = int(round((x + self.L) * self.inv_h))
        if i < 0 or i >= self.n_nodes or abs(self.nodes[i] - x) > 1e-9 * max(1.0, abs(x)):
            raise ValueError(f"{x} is not a node of the grid")
        return i


def build_grid(L: float, inv_h: int) -> Grid:
    if int(inv_h) != inv_h or inv_h < 2:
        raise ValueError(f"inv_h must be an integer >= 2, got {inv_h!r}")
    inv_h = int(inv_h)
    if not L >= 1:
        raise ValueError(f"half-length must satisfy L >= 1, got {L!r}")
    cells = L * inv_h
    n_half = int(round(cells))
    if abs(cells - n_half) > 1e-9:
        raise ValueError(f"L * inv_h must be an integer, got L={L!r}, inv_h={inv_h}")
    h = 1.0 / inv_h
    k = np.arange(-n_half, n_half + 1)
    nodes = k * h
    weights = np.full(nodes.size, h)
    weights[0] = weights[-1] = 0.5 * h
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return Grid(L=float(L), inv_h=inv_h, nodes=nodes, weights=weights)


@dataclass(frozen=True)
class KernelSpec:
    """An even C^1 probability kernel supported on [-1, 1].

    ``profile`` and ``derivative`` must accept numpy arrays and return zero
    outside the support.
    """

    name: str
    profile: Profile
    derivative: Profile
    support_radius: float = 1.0

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return self.profile(np.asarray(z, dtype=float))

    def raw_mass(self, inv_h: int) -> float:
        """Trapezoid mass of the sampled profile, before renormalization."""
        h = 1.0 / inv_h
        z = np.arange(-inv_h, inv_h + 1) * h
        return float(h * np.sum(self.profile(z)))

    def stencil(self, inv_h: int) -> np.ndarray:
        """Discrete kernel ``h J(k h) / mass`` for ``k = -inv_h .. inv_h``.

        The rescaling removes the O(h^4) trapezoid mass defect so that the
        discrete convolution of a constant is that constant exactly.
        """
        h = 1.0 / inv_h
        z = np.arange(-inv_h, inv_h + 1) * h
        vals = h * self.profile(z)
        return vals / vals.sum()

    def derivative_stencil(self, inv_h: int) -> np.ndarray:
        h = 1.0 / inv_h
        z = np.arange(-inv_h, inv_h + 1) * h
        return h * self.derivative(z) / self.raw_mass(inv_h)

    def edge_curvature(self) -> float:
        """One-sided second derivative J''(1-), from the derivative profile."""
        d = 1e-4
        r = self.support_radius
        z = np.array([r, r - d, r - 2 * d])
        f = self.derivative(z)
        return float((3 * f[0] - 4 * f[1] + f[2]) / (2 * d))

    def mass(self, a: float = -1.0, b: float = 1.0) -> float:
        """Exact-quadrature integral of the profile over [a, b]."""
        val, _ = integrate.quad(lambda z: float(self.profile(np.array([z]))[0]), a, b,
                                epsabs=1e-14, epsrel=1e-13, limit=200)
        return val

    def l2_norm(self) -> float:
        val, _ = integrate.quad(lambda z: float(self.profile(np.array([z]))[0]) ** 2, -1.0, 1.0,
                                epsabs=1e-14, epsrel=1e-13, limit=200)
        return float(np.sqrt(val))

    def sup_norm(self) -> float:
        z = np.linspace(-1.0, 1.0, 4001)
        return float(np.max(self.profile(z)))

    def validate(self, inv_h: int = 40, tol: float = 1e-6, require_c1: bool = True) -> None:
        """Check the kernel hypotheses; raises ``ValueError`` on violation."""
        if self.support_radius != 1.0:
            raise ValueError("only unit support radius is supported")
        z = np.linspace(-1.0, 1.0, 2 * inv_h * 8 + 1)
        vals = self.profile(z)
        if np.any(vals < 0):
            raise ValueError(f"kernel {self.name!r} is negative somewhere on [-1, 1]")
        if not np.allclose(vals, self.profile(-z), rtol=0, atol=1e-14):
            raise ValueError(f"kernel {self.name!r} is not even")
        outside = self.profile(np.array([-1.5, 1.0 + 1e-9, 1.5, 3.0]))
        if np.any(outside != 0):
            raise ValueError(f"kernel {self.name!r} does not vanish outside [-1, 1]")
        edge = np.abs(self.profile(np.array([-1.0, 1.0]))).max()
        dedge = np.abs(self.derivative(np.array([-1.0, 1.0]))).max()
        if edge > 1e-12 or (require_c1 and dedge > 1e-10):
            raise ValueError(f"kernel {self.name!r} is not C^1 at the support edge")
        if abs(self.raw_mass(inv_h) - 1.0) > tol:
            raise ValueError(f"kernel {self.name!r} has mass {self.raw_mass(inv_h)!r}, expected 1")


def _quartic(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return np.where(np.abs(z) <= 1.0, (15.0 / 16.0) * (1.0 - z * z) ** 2, 0.0)


def _quartic_prime(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return np.where(np.abs(z) <= 1.0, -(15.0 / 4.0) * z * (1.0 - z * z), 0.0)


def standard_kernel() -> KernelSpec:
    """The quartic bump J(z) = (15/16)(1 - z^2)^2 on [-1, 1]."""
    return KernelSpec("quartic", _quartic, _quartic_prime)


_REGISTRY: dict[str, Callable[[], KernelSpec]] = {"quartic": standard_kernel}


def register_kernel(name: str, factory: Callable[[], KernelSpec], *, validate: bool = True) -> None:
    if validate:
        factory().validate()
    _REGISTRY[name] = factory


def get_kernel(name: str) -> KernelSpec:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; registered: {sorted(_REGISTRY)}") from None


def kernel_from_table(path: "str | Path", name: str | None = None) -> KernelSpec:
    """Kernel from a two-column text table ``z J(z)``, linearly interpolated.

    Only ``z >= 0`` rows are needed; the profile is extended evenly.  The
    derivative is the slope of the interpolant.
    """
    data = np.loadtxt(path, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns, got {data.shape[1]}")
    z, j = data[:, 0], data[:, 1]
    keep = z >= 0
    z, j = z[keep], j[keep]
    order = np.argsort(z)
    z, j = z[order], j[order]
    if z[0] != 0.0 or z[-1] != 1.0:
        raise ValueError(f"{path}: table must span z = 0 .. 1")
    slopes = np.diff(j) / np.diff(z)

    def profile(x: np.ndarray) -> np.ndarray:
        a = np.abs(np.asarray(x, dtype=float))
        return np.where(a <= 1.0, np.interp(a, z, j), 0.0)

    def derivative(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a = np.abs(x)
        idx = np.clip(np.searchsorted(z, a, side="right") - 1, 0, slopes.size - 1)
        return np.where(a <= 1.0, np.sign(x) * slopes[idx], 0.0)

    return KernelSpec(name or Path(path).stem, profile, derivative)


def kernel_matrix(grid: Grid, kernel: KernelSpec, bc: "BoundaryKind | str" = BoundaryKind.DIRICHLET) -> np.ndarray:
    """Dense matrix ``M`` with ``(J * v)(x_i) = (M @ v)_i``.

    Entries are ``w_j J(x_i - x_j)`` for Dirichlet; Neumann adds the two
    reflected images ``J(x_i - (2L - x_j))`` and ``J(x_i - (-2L - x_j))``.
    """
    bc = BoundaryKind.parse(bc)
    st = kernel.stencil(grid.inv_h) / grid.h  # J(kh) normalized, per unit length
    r = grid.inv_h
    n = grid.n_nodes
    idx = np.arange(n)

    def lookup(diff: np.ndarray) -> np.ndarray:
        out = np.zeros(diff.shape)
        inside = np.abs(diff) <= r
        out[inside] = st[diff[inside] + r]
        return out

    K = lookup(idx[:, None] - idx[None, :])
    if bc is BoundaryKind.NEUMANN:
        # image of node j across +L sits at extended index 2(n-1) - j, across -L at -j
        K = K + lookup(idx[:, None] - (2 * (n - 1) - idx[None, :])) + lookup(idx[:, None] + idx[None, :])
    return K * grid.weights[None, :]


def convolve(grid: Grid, kernel: KernelSpec, v, bc: "BoundaryKind | str" = BoundaryKind.DIRICHLET) -> np.ndarray:
    """Quadrature convolution of node samples ``v`` on the bounded interval."""
    bc = BoundaryKind.parse(bc)
    v = np.asarray(v, dtype=float)
    if v.shape != grid.nodes.shape:
        raise ValueError(f"v has shape {v.shape}, grid has {grid.n_nodes} nodes")
    r = grid.inv_h
    n = grid.n_nodes
    st = kernel.stencil(r) / grid.h
    wv = grid.weights * v
    ext = np.zeros(n + 2 * r)
    ext[r:r + n] = wv
    if bc is BoundaryKind.NEUMANN:
        # fold the reflected mass within one support radius back onto the images
        ext[r + n - 1:r + n - 1 + r + 1] += wv[::-1][: r + 1]
        ext[: r + 1] += wv[: r + 1][::-1]
    return np.convolve(ext, st, mode="valid")


def boundary_mass(grid: Grid, kernel: KernelSpec) -> np.ndarray:
    """b(x_i) = sum_j w_j J(x_i - x_j), the Dirichlet row mass."""
    return convolve(grid, kernel, np.ones(grid.n_nodes), BoundaryKind.DIRICHLET)
