"""Surface construction and discrete verification oracles.

Curves become surfaces here (extruded cylinders, rotational surfaces, tilted
cylinders), and surfaces are checked against the governing equations by
discrete means that share no code with the solvers: finite-difference
residuals of the Euclidean and Lorentzian graph equations, a cotangent
mean-curvature estimate on triangle meshes, and a quadric-fitted shape
operator.  Mean curvature uses the trace convention (sum of principal
curvatures), under which the defining identity reads
``H = dphi(z) * <N, e3>`` with the stored per-vertex normals.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import NumericalError
from .profiles import WeightProfile
from .solvers import CATENARY_GRAPH, ProfileCurve

EUCLIDEAN = "euclidean"
LORENTZIAN = "lorentzian"


def thread_cap() -> int:
    """Worker cap for the few parallelizable loops (PHIMIN_THREADS, >= 1)."""
    try:
        return max(1, int(os.environ.get("PHIMIN_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class SurfaceMesh:
    """Triangulated surface with per-vertex unit normals.

    For Lorentzian (spacelike) meshes the normals are unit timelike for the
    bilinear form dx^2 + dy^2 - dz^2, i.e. N1^2 + N2^2 - N3^2 = -1.
    """

    vertices: np.ndarray
    faces: np.ndarray
    normals: np.ndarray
    signature: str = EUCLIDEAN
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.faces = np.asarray(self.faces, dtype=np.int64)
        self.normals = np.asarray(self.normals, dtype=float)
        n = len(self.vertices)
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= n):
            raise ValueError("face indices out of range")
        if self.normals.shape != self.vertices.shape:
            raise ValueError("need one normal per vertex")
        if self.signature not in (EUCLIDEAN, LORENTZIAN):
            raise ValueError(f"unknown signature {self.signature!r}")
        nrm2 = (self.normals ** 2).sum(axis=1) if self.signature == EUCLIDEAN \
            else (self.normals[:, 0] ** 2 + self.normals[:, 1] ** 2
                  - self.normals[:, 2] ** 2)
        target = 1.0 if self.signature == EUCLIDEAN else -1.0
        if not np.allclose(nrm2, target, atol=1e-8):
            raise ValueError("normals are not unit for the declared signature")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def boundary_mask(self) -> np.ndarray:
        """True for vertices on an edge owned by a single face."""
        edges = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]],
                                self.faces[:, [2, 0]]])
        edges = np.sort(edges, axis=1)
        uniq, counts = np.unique(edges, axis=0, return_counts=True)
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[uniq[counts == 1].ravel()] = True
        return mask


@dataclass
class GraphPatch:
    """Heights on a uniform rectangular grid: u[i, j] = u(x[i], y[j])."""

    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    signature: str = EUCLIDEAN
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != (len(self.x), len(self.y)):
            raise ValueError("u must have shape (len(x), len(y))")
        if len(self.x) < 3 or len(self.y) < 3:
            raise ValueError("patch needs at least 3 nodes per axis")
        for g in (self.x, self.y):
            d = np.diff(g)
            if not np.allclose(d, d[0], rtol=1e-9, atol=1e-12) or d[0] <= 0:
                raise ValueError("grids must be uniform and increasing")
        if self.signature not in (EUCLIDEAN, LORENTZIAN):
            raise ValueError(f"unknown signature {self.signature!r}")
        if self.signature == LORENTZIAN:
            ux, uy = self.gradients()
            speed = ux[1:-1, 1:-1] ** 2 + uy[1:-1, 1:-1] ** 2
            if np.any(speed >= 1.0):
                raise ValueError("Lorentzian patch is not spacelike "
                                 "(|grad u| >= 1 at an interior node)")

    @property
    def hx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def hy(self) -> float:
        return float(self.y[1] - self.y[0])

    def gradients(self) -> Tuple[np.ndarray, np.ndarray]:
        """Central-difference gradient fields (second order up to the
        border; one-sided stencils there)."""
        ux = np.gradient(self.u, self.hx, axis=0, edge_order=2)
        uy = np.gradient(self.u, self.hy, axis=1, edge_order=2)
        return ux, uy

    def to_mesh(self) -> "SurfaceMesh":
        """Triangulated graph with downward (Euclidean) or future-pointing
        timelike (Lorentzian) unit normals."""
        X, Y = np.meshgrid(self.x, self.y, indexing="ij")
        verts = np.column_stack([X.ravel(), Y.ravel(), self.u.ravel()])
        ux, uy = self.gradients()
        gx, gy = ux.ravel(), uy.ravel()
        if self.signature == EUCLIDEAN:
            w = np.sqrt(1.0 + gx ** 2 + gy ** 2)
            normals = np.column_stack([gx / w, gy / w, -1.0 / w])
        else:
            w = np.sqrt(1.0 - gx ** 2 - gy ** 2)
            normals = np.column_stack([gx / w, gy / w, 1.0 / w])
        faces = _grid_faces(len(self.x), len(self.y))
        return SurfaceMesh(verts, faces, normals, signature=self.signature,
                           meta={"grid": (len(self.x), len(self.y))})


def _grid_faces(nx: int, ny: int) -> np.ndarray:
    """Two triangles per cell on an (nx, ny) node grid, row-major indices."""
    i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    v00 = (i * ny + j).ravel()
    v10 = ((i + 1) * ny + j).ravel()
    v01 = (i * ny + j + 1).ravel()
    v11 = ((i + 1) * ny + j + 1).ravel()
    t1 = np.column_stack([v00, v10, v11])
    t2 = np.column_stack([v00, v11, v01])
    return np.concatenate([t1, t2])


# ---------------------------------------------------------------------------
# surface constructions
# ---------------------------------------------------------------------------

def extrude_cylinder(curve: ProfileCurve, y_range: Sequence[float],
                     ny: int) -> SurfaceMesh:
    """Product of a planar graph curve with an interval in the y-direction.

    Vertices (x_i, y_j, u_i); normals are the downward graph normals
    (sin th, 0, -cos th), constant along rulings.
    """
    x, u = curve.graph()
    y0, y1 = float(y_range[0]), float(y_range[1])
    if not y1 > y0:
        raise ValueError("degenerate y range")
    if ny < 2:
        raise ValueError("need at least two samples across the rulings")
    y = np.linspace(y0, y1, ny)
    nx = len(x)
    X = np.repeat(x, ny)
    Y = np.tile(y, nx)
    Z = np.repeat(u, ny)
    verts = np.column_stack([X, Y, Z])
    nrm = np.column_stack([np.sin(curve.theta), np.zeros(nx),
                           -np.cos(curve.theta)])
    normals = np.repeat(nrm, ny, axis=0)
    mesh = SurfaceMesh(verts, _grid_faces(nx, ny), normals,
                       meta={"kind": "cylinder", "grid": (nx, ny)})
    return mesh


def revolve(curve: ProfileCurve, nt: int) -> SurfaceMesh:
    """Surface of revolution (x(s) cos t, x(s) sin t, z(s)) around the z-axis.

    Normals are the rotated curve normals (-sin th cos t, -sin th sin t,
    cos th).  A leading axis sample (x = 0) becomes a single fan vertex with
    normal (0, 0, 1).
    """
    if nt < 3:
        raise ValueError("need at least 3 angular samples")
    x, z, th = curve.x, curve.z, curve.theta
    if np.any(x < -1e-12):
        raise ValueError("negative radius along the generating curve")
    has_apex = x[0] < 1e-12
    i0 = 1 if has_apex else 0
    t = np.linspace(0.0, 2.0 * math.pi, nt, endpoint=False)
    ct, st = np.cos(t), np.sin(t)

    rings_x = x[i0:]
    rings = len(rings_x)
    verts = np.empty((rings * nt + (1 if has_apex else 0), 3))
    normals = np.empty_like(verts)
    V = verts[: rings * nt].reshape(rings, nt, 3)
    N = normals[: rings * nt].reshape(rings, nt, 3)
    V[:, :, 0] = rings_x[:, None] * ct[None, :]
    V[:, :, 1] = rings_x[:, None] * st[None, :]
    V[:, :, 2] = z[i0:, None]
    sin_th = np.sin(th[i0:])[:, None]
    cos_th = np.cos(th[i0:])[:, None]
    N[:, :, 0] = -sin_th * ct[None, :]
    N[:, :, 1] = -sin_th * st[None, :]
    N[:, :, 2] = np.broadcast_to(cos_th, (rings, nt))

    faces = []
    idx = np.arange(nt)
    nxt = (idx + 1) % nt
    for r in range(rings - 1):
        a = r * nt + idx
        b = r * nt + nxt
        c = (r + 1) * nt + idx
        d = (r + 1) * nt + nxt
        faces.append(np.column_stack([a, b, d]))
        faces.append(np.column_stack([a, d, c]))
    if has_apex:
        apex = rings * nt
        verts[apex] = (0.0, 0.0, z[0])
        normals[apex] = (0.0, 0.0, 1.0)
        faces.append(np.column_stack([np.full(nt, apex), nxt, idx]))
    mesh = SurfaceMesh(verts, np.concatenate(faces), normals,
                       meta={"kind": "revolved", "nt": nt,
                             "has_apex": has_apex, "rings": rings})
    return mesh


def tilt_cylinder(curve: ProfileCurve, theta: float,
                  y_range: Sequence[float] = (-1.0, 1.0),
                  ny: int = 0) -> SurfaceMesh:
    """Apply psi -> psi + ((1-cos th)/cos th) <psi,e1> e1 + tan(th) e1 x psi
    to an extruded cylinder.  Componentwise that is
    (x, y, z) -> (x/cos th, y - tan(th) z, tan(th) y + z), the homothety of
    ratio 1/cos(theta) composed with the rotation by theta about the x-axis.

    The transformed surface solves the same weighted equation when dphi is
    constant (the map rescales heights along the rulings otherwise); its
    normals are the rotated originals and its mean curvature is cos(theta)
    times the original at matched vertices.
    """
    if not 0.0 <= theta < math.pi / 2:
        raise ValueError("tilt angle must lie in [0, pi/2)")
    if curve.curve_kind != CATENARY_GRAPH:
        raise ValueError("tilting is defined for catenary graph curves")
    if ny <= 0:
        ny = max(2, curve.n_samples // 2)
    base = extrude_cylinder(curve, y_range, ny)
    c, s = math.cos(theta), math.sin(theta)
    t = s / c
    v = base.vertices
    verts = np.column_stack([v[:, 0] / c,
                             v[:, 1] - t * v[:, 2],
                             t * v[:, 1] + v[:, 2]])
    n = base.normals
    normals = np.column_stack([n[:, 0],
                               c * n[:, 1] - s * n[:, 2],
                               s * n[:, 1] + c * n[:, 2]])
    return SurfaceMesh(verts, base.faces.copy(), normals,
                       meta={"kind": "tilted_cylinder", "theta": theta,
                             "grid": base.meta["grid"]})


# ---------------------------------------------------------------------------
# graph-equation residuals (independent finite-difference oracles)
# ---------------------------------------------------------------------------

def _interior_derivatives(patch: GraphPatch):
    u, hx, hy = patch.u, patch.hx, patch.hy
    c = u[1:-1, 1:-1]
    ux = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * hx)
    uy = (u[1:-1, 2:] - u[1:-1, :-2]) / (2 * hy)
    uxx = (u[2:, 1:-1] - 2 * c + u[:-2, 1:-1]) / hx ** 2
    uyy = (u[1:-1, 2:] - 2 * c + u[1:-1, :-2]) / hy ** 2
    uxy = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4 * hx * hy)
    return c, ux, uy, uxx, uyy, uxy


def fe_residual(patch: GraphPatch, profile: WeightProfile) -> np.ndarray:
    """Pointwise residual of the Euclidean weighted graph equation
    (1+u_x^2) u_yy + (1+u_y^2) u_xx - 2 u_x u_y u_xy - dphi(u) W^2,
    W^2 = 1 + u_x^2 + u_y^2, by central differences.  NaN on the border.
    """
    c, ux, uy, uxx, uyy, uxy = _interior_derivatives(patch)
    w2 = 1.0 + ux ** 2 + uy ** 2
    res = ((1.0 + ux ** 2) * uyy + (1.0 + uy ** 2) * uxx
           - 2.0 * ux * uy * uxy
           - np.asarray(profile.dphi(c), dtype=float) * w2)
    out = np.full_like(patch.u, math.nan)
    out[1:-1, 1:-1] = res
    return out


def lfe_residual(patch: GraphPatch, profile: WeightProfile) -> np.ndarray:
    """Pointwise residual of the Lorentzian (spacelike) graph equation
    (1-u_x^2) u_yy + (1-u_y^2) u_xx + 2 u_x u_y u_xy + dphi(u) W^2,
    W^2 = 1 - u_x^2 - u_y^2 > 0.  NaN on the border.

    Raises when the spacelike condition fails at any interior stencil node.
    """
    c, ux, uy, uxx, uyy, uxy = _interior_derivatives(patch)
    w2 = 1.0 - ux ** 2 - uy ** 2
    if np.any(w2 <= 0.0):
        raise ValueError("patch is not spacelike on the residual stencil")
    res = ((1.0 - ux ** 2) * uyy + (1.0 - uy ** 2) * uxx
           + 2.0 * ux * uy * uxy
           + np.asarray(profile.dphi(c), dtype=float) * w2)
    out = np.full_like(patch.u, math.nan)
    out[1:-1, 1:-1] = res
    return out


def curvature_from_derivatives(signature: str, ux, uy, uxx, uyy, uxy
                               ) -> Tuple[np.ndarray, np.ndarray]:
    """(mean, Gauss) curvature of a graph from its first and second
    derivative fields, however those were estimated.

    Euclidean mean curvature is signed with the downward normal, so
    solutions satisfy H = dphi(u) <N, e3> = -dphi(u)/W; the Lorentzian one
    with the future-pointing normal, so solutions again satisfy
    H = -dphi(u)/W (the Lorentz pairing of that normal with e3 is -1/W).
    Spacelike graphs get the intrinsic Gauss curvature -det(Hess u)/W^4 of
    the induced metric; the caller guarantees spacelike slopes.
    """
    det = uxx * uyy - uxy ** 2
    if signature == EUCLIDEAN:
        w2 = 1.0 + ux ** 2 + uy ** 2
        num = (1.0 + uy ** 2) * uxx + (1.0 + ux ** 2) * uyy \
            - 2.0 * ux * uy * uxy
        return -num / w2 ** 1.5, det / w2 ** 2
    w2 = 1.0 - ux ** 2 - uy ** 2
    num = (1.0 - uy ** 2) * uxx + (1.0 - ux ** 2) * uyy \
        + 2.0 * ux * uy * uxy
    return num / w2 ** 1.5, -det / w2 ** 2


def _graph_curvatures(patch: GraphPatch) -> Tuple[np.ndarray, np.ndarray]:
    _, ux, uy, uxx, uyy, uxy = _interior_derivatives(patch)
    if patch.signature == LORENTZIAN and np.any(
            1.0 - ux ** 2 - uy ** 2 <= 0.0):
        raise ValueError("patch is not spacelike on the stencil")
    h, k = curvature_from_derivatives(patch.signature, ux, uy, uxx, uyy, uxy)
    hh = np.full_like(patch.u, math.nan)
    kk = np.full_like(patch.u, math.nan)
    hh[1:-1, 1:-1] = h
    kk[1:-1, 1:-1] = k
    return hh, kk


def graph_mean_curvature(patch: GraphPatch) -> np.ndarray:
    """Mean curvature of the graph from central differences, NaN on the
    border; see curvature_from_derivatives for the sign conventions."""
    return _graph_curvatures(patch)[0]


def graph_gauss_curvature(patch: GraphPatch) -> np.ndarray:
    """Gauss curvature of the graph from central differences, NaN on the
    border; see curvature_from_derivatives for the sign conventions."""
    return _graph_curvatures(patch)[1]


# ---------------------------------------------------------------------------
# discrete curvature on meshes
# ---------------------------------------------------------------------------

def _cotangent_curvature(mesh: SurfaceMesh) -> np.ndarray:
    """Discrete mean-curvature vector (trace convention) per vertex:
    (1/(2 A_i)) sum_j (cot a_ij + cot b_ij) (p_j - p_i), with barycentric
    vertex areas.  Rows for boundary vertices are unreliable and the caller
    masks them."""
    p = mesh.vertices
    f = mesh.faces
    n = mesh.n_vertices
    vec = np.zeros((n, 3))
    area = np.zeros(n)

    tri = p[f]  # (m, 3, 3)
    for corner in range(3):
        i = f[:, corner]
        j = f[:, (corner + 1) % 3]
        k = f[:, (corner + 2) % 3]
        # cotangent at vertex i of angle between edges (j - i) and (k - i);
        # it weights the opposite edge (j, k)
        e1 = p[j] - p[i]
        e2 = p[k] - p[i]
        cross = np.cross(e1, e2)
        denom = np.linalg.norm(cross, axis=1)
        denom = np.where(denom < 1e-300, 1e-300, denom)
        cot = (e1 * e2).sum(axis=1) / denom
        d = p[k] - p[j]
        np.add.at(vec, j, 0.5 * cot[:, None] * d)
        np.add.at(vec, k, -0.5 * cot[:, None] * d)

    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    a = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)
    for corner in range(3):
        np.add.at(area, f[:, corner], a / 3.0)

    area = np.where(area < 1e-300, 1e-300, area)
    return vec / area[:, None]


def mean_curvature_residual(mesh: SurfaceMesh,
                            profile: WeightProfile) -> np.ndarray:
    """Per-vertex residual H - dphi(z) <N, e3> with the discrete cotangent
    mean curvature (trace convention) projected on the stored normals.

    Boundary vertices get NaN; so does a fan apex if the mesh has one.
    """
    if mesh.signature != EUCLIDEAN:
        raise ValueError("discrete curvature residual is Euclidean-only")
    hvec = _cotangent_curvature(mesh)
    h = (hvec * mesh.normals).sum(axis=1)
    z = mesh.vertices[:, 2]
    res = h - np.asarray(profile.dphi(z), dtype=float) * mesh.normals[:, 2]
    res[mesh.boundary_mask()] = math.nan
    if mesh.meta.get("has_apex"):
        res[-1] = math.nan  # the fan vertex area is uneven; skip it
    return res


def second_fundamental_norm(mesh: SurfaceMesh, profile: WeightProfile
                            ) -> Tuple[np.ndarray, np.ndarray]:
    """Per-vertex (|S|, |S|/dphi(z)) with |S| the Frobenius norm of the
    shape operator, estimated by quadric fitting over two neighbor rings.

    Boundary vertices get NaN.  This is a diagnostic; no bound is asserted.
    """
    p = mesh.vertices
    n_vert = mesh.n_vertices
    # adjacency
    nbr = [set() for _ in range(n_vert)]
    for a, b, c in mesh.faces:
        nbr[a].update((b, c))
        nbr[b].update((a, c))
        nbr[c].update((a, b))
    boundary = mesh.boundary_mask()

    def fit(i: int) -> float:
        if boundary[i]:
            return math.nan
        ring = set(nbr[i])
        for j in list(ring):
            ring.update(nbr[j])
        ring.discard(i)
        js = np.fromiter(ring, dtype=np.int64)
        if len(js) < 5:
            return math.nan
        nrm = mesh.normals[i]
        t1 = np.cross(nrm, [1.0, 0.0, 0.0])
        if np.linalg.norm(t1) < 1e-6:
            t1 = np.cross(nrm, [0.0, 1.0, 0.0])
        t1 /= np.linalg.norm(t1)
        t2 = np.cross(nrm, t1)
        d = p[js] - p[i]
        xi = d @ t1
        eta = d @ t2
        zeta = d @ nrm
        A = np.column_stack([0.5 * xi ** 2, xi * eta, 0.5 * eta ** 2, xi, eta])
        coef, *_ = np.linalg.lstsq(A, zeta, rcond=None)
        a, b, c, dd, ee = coef
        # first fundamental form of the fitted graph at the origin
        I = np.array([[1 + dd * dd, dd * ee], [dd * ee, 1 + ee * ee]])
        II = np.array([[a, b], [b, c]]) / math.sqrt(1 + dd * dd + ee * ee)
        S = np.linalg.solve(I, II)
        return float(np.sqrt((S * S).sum()))

    cap = thread_cap()
    if cap > 1:
        with ThreadPoolExecutor(max_workers=cap) as ex:
            s_norm = np.fromiter(ex.map(fit, range(n_vert)), dtype=float,
                                 count=n_vert)
    else:
        s_norm = np.fromiter((fit(i) for i in range(n_vert)), dtype=float,
                             count=n_vert)
    dphi = np.asarray(profile.dphi(mesh.vertices[:, 2]), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = s_norm / np.abs(dphi)
    return s_norm, ratio


# ---------------------------------------------------------------------------
# patch builders from curves
# ---------------------------------------------------------------------------

def cylinder_patch(curve: ProfileCurve, x_halfwidth: float, y_halfwidth: float,
                   nx: int, ny: int) -> GraphPatch:
    """Uniform-grid graph u(x, y) = u(x) from a catenary curve (y-invariant)."""
    cx, cu = curve.graph()
    if x_halfwidth > cx[-1] + 1e-12:
        raise ValueError("patch wider than the solved curve")
    spl = CubicSpline(cx, cu)
    x = np.linspace(-x_halfwidth, x_halfwidth, nx)
    y = np.linspace(-y_halfwidth, y_halfwidth, ny)
    u = np.repeat(spl(x)[:, None], ny, axis=1)
    return GraphPatch(x, y, u, signature=EUCLIDEAN,
                      meta={"source": "cylinder_patch"})


def rotational_patch(curve: ProfileCurve, halfwidth: float,
                     nx: int, ny: int) -> GraphPatch:
    """Uniform-grid graph u(x, y) = z(r), r = hypot(x, y), from a rotational
    graph curve (bowl; clamped even slope at the axis)."""
    r, zu = curve.x, curve.z
    if halfwidth * math.sqrt(2.0) > r[-1] + 1e-12:
        raise ValueError("patch corner exceeds the solved radius")
    spl = CubicSpline(r, zu, bc_type=((1, 0.0), "not-a-knot"))
    x = np.linspace(-halfwidth, halfwidth, nx)
    y = np.linspace(-halfwidth, halfwidth, ny)
    R = np.hypot(x[:, None], y[None, :])
    return GraphPatch(x, y, spl(R), signature=EUCLIDEAN,
                      meta={"source": "rotational_patch"})


# ---------------------------------------------------------------------------
# mesh export
# ---------------------------------------------------------------------------

def save_obj(mesh: SurfaceMesh, path, comments: Sequence[str] = ()) -> None:
    """ASCII OBJ with v/vn/f records; deterministic %.17g formatting."""
    lines = [f"# {c}" for c in comments]
    lines.append(f"# signature: {mesh.signature}")
    for v in mesh.vertices:
        lines.append("v %.17g %.17g %.17g" % tuple(v))
    for n in mesh.normals:
        lines.append("vn %.17g %.17g %.17g" % tuple(n))
    for f in mesh.faces + 1:
        lines.append("f %d//%d %d//%d %d//%d"
                     % (f[0], f[0], f[1], f[1], f[2], f[2]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def save_ply(mesh: SurfaceMesh, path, comments: Sequence[str] = ()) -> None:
    """ASCII PLY with per-vertex normals; deterministic formatting."""
    head = ["ply", "format ascii 1.0"]
    head += [f"comment {c}" for c in comments]
    head.append(f"comment signature: {mesh.signature}")
    head += [f"element vertex {mesh.n_vertices}",
             "property float x", "property float y", "property float z",
             "property float nx", "property float ny", "property float nz",
             f"element face {len(mesh.faces)}",
             "property list uchar int vertex_indices", "end_header"]
    lines = head
    for v, n in zip(mesh.vertices, mesh.normals):
        lines.append("%.17g %.17g %.17g %.17g %.17g %.17g"
                     % (v[0], v[1], v[2], n[0], n[1], n[2]))
    for f in mesh.faces:
        lines.append("3 %d %d %d" % (f[0], f[1], f[2]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
