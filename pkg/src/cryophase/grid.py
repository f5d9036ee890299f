"""Uniform rectilinear grids (1D/2D) with zero-flux finite-volume operators.

Scalar unknowns live on nodes; gradients and fluxes live on the faces
between neighbouring nodes.  Boundary faces are not stored: the normal
flux there is identically zero, which makes the discrete divergence
theorem hold exactly (volume-weighted sum of any divergence is zero up
to roundoff) and is what produces exact conservation in the time
steppers built on top.

Node quadrature uses trapezoidal weights (half-weight on boundary
nodes); face quadrature uses the matching face volumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


def _axis_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = 0.5 * h
    w[-1] = 0.5 * h
    return w


@dataclass(frozen=True)
class Grid:
    """Uniform box grid on [0, L1] (x [0, L2]) with at least 3 nodes per axis."""

    dim: int
    lengths: tuple
    nodes: tuple
    spacing: tuple = field(init=False)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValidationError(f"grid dim must be 1 or 2, got {self.dim}")
        lengths = tuple(float(v) for v in self.lengths)
        nodes = tuple(int(v) for v in self.nodes)
        if len(lengths) != self.dim or len(nodes) != self.dim:
            raise ValidationError("lengths/nodes must have one entry per axis")
        if any(v <= 0 for v in lengths):
            raise ValidationError("grid lengths must be positive")
        if any(v < 3 for v in nodes):
            raise ValidationError("need at least 3 nodes per axis")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(
            self, "spacing", tuple(L / (n - 1) for L, n in zip(lengths, nodes))
        )

    @property
    def shape(self) -> tuple:
        return self.nodes

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.nodes))

    def coordinates(self):
        """Per-axis node coordinate arrays."""
        return tuple(
            np.linspace(0.0, L, n) for L, n in zip(self.lengths, self.nodes)
        )

    def meshgrid(self):
        """Node coordinates broadcast to the grid shape (indexing='ij')."""
        axes = self.coordinates()
        if self.dim == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def node_volumes(self) -> np.ndarray:
        """Trapezoidal quadrature weight of every node, shaped like the grid."""
        wx = _axis_weights(self.nodes[0], self.spacing[0])
        if self.dim == 1:
            return wx
        wy = _axis_weights(self.nodes[1], self.spacing[1])
        return wx[:, None] * wy[None, :]

    def face_volumes(self):
        """Quadrature weight of every interior face, one array per axis."""
        if self.dim == 1:
            hx = self.spacing[0]
            return (np.full(self.nodes[0] - 1, hx),)
        hx, hy = self.spacing
        nx, ny = self.nodes
        wx = _axis_weights(nx, hx)
        wy = _axis_weights(ny, hy)
        fx = hx * np.broadcast_to(wy[None, :], (nx - 1, ny)).copy()
        fy = hy * np.broadcast_to(wx[:, None], (nx, ny - 1)).copy()
        return fx, fy

    def refined(self, factor: int) -> "Grid":
        """Nested refinement: every cell split into `factor` cells per axis."""
        if factor < 1:
            raise ValidationError("refinement factor must be >= 1")
        return Grid(
            self.dim,
            self.lengths,
            tuple((n - 1) * factor + 1 for n in self.nodes),
        )


class Field:
    """Nodal scalar field; values are finite and read-only once built."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.array(values, dtype=float)
        if values.shape != grid.shape:
            raise ValidationError(
                f"field shape {values.shape} does not match grid {grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError("field contains non-finite values")
        values.flags.writeable = False
        self.grid = grid
        self.values = values

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        """Sample fn(x) or fn(x, y) at the nodes."""
        return cls(grid, fn(*grid.meshgrid()))

    def copy_values(self) -> np.ndarray:
        return np.array(self.values)

    def __repr__(self):
        return f"Field(shape={self.values.shape})"


class VectorField:
    """Face-normal vector components, one array per axis of the grid.

    Only interior faces are stored; the normal component on boundary
    faces is structurally zero (the zero-flux closure).
    """

    __slots__ = ("grid", "components")

    def __init__(self, grid: Grid, components):
        components = tuple(np.asarray(c, dtype=float) for c in components)
        if len(components) != grid.dim:
            raise ValidationError("need one component array per axis")
        expected = _face_shapes(grid)
        for c, shape in zip(components, expected):
            if c.shape != shape:
                raise ValidationError(
                    f"face array shape {c.shape} does not match {shape}"
                )
            if not np.all(np.isfinite(c)):
                raise ValidationError("vector field contains non-finite values")
        self.grid = grid
        self.components = components

    def __repr__(self):
        return f"VectorField(shapes={[c.shape for c in self.components]})"


def _face_shapes(grid: Grid):
    if grid.dim == 1:
        return ((grid.nodes[0] - 1,),)
    nx, ny = grid.nodes
    return ((nx - 1, ny), (nx, ny - 1))


# ---------------------------------------------------------------------------
# differential operators


def gradient_arrays(grid: Grid, values: np.ndarray):
    """Face-centred differences of nodal values, one array per axis."""
    if grid.dim == 1:
        return ((values[1:] - values[:-1]) / grid.spacing[0],)
    hx, hy = grid.spacing
    gx = (values[1:, :] - values[:-1, :]) / hx
    gy = (values[:, 1:] - values[:, :-1]) / hy
    return gx, gy


def gradient(f: Field) -> VectorField:
    """Discrete gradient evaluated on interior faces."""
    return VectorField(f.grid, gradient_arrays(f.grid, f.values))


def weighted_divergence_arrays(grid: Grid, components) -> np.ndarray:
    """Volume-weighted divergence: net outflux per node, zero boundary flux.

    Equals node_volume * divergence; summing it over the grid telescopes
    to zero exactly, which is the conservation mechanism.
    """
    if grid.dim == 1:
        (fx,) = components
        padded = np.zeros(fx.shape[0] + 2)
        padded[1:-1] = fx
        return np.diff(padded)
    fx, fy = components
    nx, ny = grid.nodes
    wx = _axis_weights(nx, grid.spacing[0])
    wy = _axis_weights(ny, grid.spacing[1])
    px = np.zeros((nx + 1, ny))
    px[1:-1, :] = fx
    py = np.zeros((nx, ny + 1))
    py[:, 1:-1] = fy
    return np.diff(px, axis=0) * wy[None, :] + np.diff(py, axis=1) * wx[:, None]


def divergence_neumann(v: VectorField) -> Field:
    """Nodal divergence with the zero-flux boundary closure built in."""
    grid = v.grid
    out = weighted_divergence_arrays(grid, v.components) / grid.node_volumes()
    return Field(grid, out)


def laplacian_neumann(f: Field) -> Field:
    """div(grad f) with zero-flux boundary faces (reflected closure)."""
    return divergence_neumann(gradient(f))


# ---------------------------------------------------------------------------
# quadrature and norms


def integral(f: Field) -> float:
    return float(np.sum(f.grid.node_volumes() * f.values))


def inner(f: Field, g: Field) -> float:
    """Volume-weighted L2 inner product."""
    return float(np.sum(f.grid.node_volumes() * f.values * g.values))


def norm_L2(f: Field) -> float:
    return float(np.sqrt(np.sum(f.grid.node_volumes() * f.values * f.values)))


def transverse_magnitude_sq(grid: Grid, components):
    """Squared gradient magnitude on every face, per face family.

    On an x-face the native component is the x-difference; the
    transverse component is the 4-point average of the neighbouring
    y-face values (zero outside the domain, consistent with the
    zero-flux closure).  In 1D this is just the squared component.
    """
    if grid.dim == 1:
        (gx,) = components
        return (gx * gx,)
    gx, gy = components
    nx, ny = grid.nodes
    gyp = np.zeros((nx, ny + 1))
    gyp[:, 1:-1] = gy
    ty = 0.25 * (gyp[:-1, :-1] + gyp[:-1, 1:] + gyp[1:, :-1] + gyp[1:, 1:])
    gxp = np.zeros((nx + 1, ny))
    gxp[1:-1, :] = gx
    tx = 0.25 * (gxp[:-1, :-1] + gxp[1:, :-1] + gxp[:-1, 1:] + gxp[1:, 1:])
    return gx * gx + ty * ty, gy * gy + tx * tx


def face_quadrature_sq(v: VectorField, weights=None) -> float:
    """Sum over faces of w * (component)^2 * face_volume.

    `weights` is an optional per-face array tuple (e.g. face-averaged
    beta); omitted means weight 1.  This is the discrete form of
    integrals like int w |grad f|^2.
    """
    total = 0.0
    fvols = v.grid.face_volumes()
    for i, (comp, fv) in enumerate(zip(v.components, fvols)):
        term = comp * comp * fv
        if weights is not None:
            term = term * weights[i]
        total += float(np.sum(term))
    return total


def face_quadrature_p(v: VectorField, p: float, weights=None) -> float:
    """Sum over faces of w * m^(p-2) * component^2 * face_volume.

    `m` is the full gradient magnitude on the face (native component
    plus transverse average), so the total approximates int w |grad f|^p
    and reduces to `face_quadrature_sq` at p = 2.  Faces with zero
    magnitude contribute zero (the degenerate-limit convention).
    """
    grid = v.grid
    msq = transverse_magnitude_sq(grid, v.components)
    fvols = grid.face_volumes()
    total = 0.0
    for i, (comp, m2, fv) in enumerate(zip(v.components, msq, fvols)):
        with np.errstate(divide="ignore"):
            scale = np.where(m2 > 0.0, m2 ** ((p - 2.0) / 2.0), 0.0)
        term = scale * comp * comp * fv
        if weights is not None:
            term = term * weights[i]
        total += float(np.sum(term))
    return total


def norm_Lp_grad(f: Field, p: float) -> float:
    """(sum over faces of |grad f|^(p-2) component^2 face_volume)^(1/p)."""
    if not 1.0 < p <= 2.0:
        raise ValidationError(f"gradient norm requires 1 < p <= 2, got {p}")
    return face_quadrature_p(gradient(f), p) ** (1.0 / p)


def norm_H1(f: Field) -> float:
    return float(np.sqrt(norm_L2(f) ** 2 + face_quadrature_sq(gradient(f))))


def average_to_faces(grid: Grid, values: np.ndarray, clamp01: bool = False):
    """Arithmetic mean of nodal values on each interior face."""
    if grid.dim == 1:
        out = (0.5 * (values[1:] + values[:-1]),)
    else:
        out = (
            0.5 * (values[1:, :] + values[:-1, :]),
            0.5 * (values[:, 1:] + values[:, :-1]),
        )
    if clamp01:
        out = tuple(np.clip(a, 0.0, 1.0) for a in out)
    return out


def restrict_nested(values: np.ndarray, ratio: int) -> np.ndarray:
    """Injection of a fine-grid nodal array onto a nested coarse grid."""
    if ratio == 1:
        return np.array(values)
    if values.ndim == 1:
        return np.array(values[::ratio])
    return np.array(values[::ratio, ::ratio])
