"""Complex representation of weighted-minimal surfaces and a Cauchy solver.

A surface whose mean curvature satisfies ``H = dphi(z) * <N, e3>`` admits,
in a conformal parameter ``zeta = u + i*v``, a description through a single
complex field G: the stereographic image (projected from the south pole) of
the unit normal, so ``|G| < 1`` exactly where the normal leans upward.  For
the two weight families handled here, ``phi(z) = z`` (``k = 1``) and
``phi(z) = alpha*log z`` with ``alpha = 2/(k-1)`` (``k != 0, 1``), the field
satisfies one quasilinear elliptic PDE and the immersion is recovered from G
by explicit path integrals of rational expressions in G and its Wirtinger
derivatives.

The module provides three layers:

* ``gauss_pde_residual``: a finite-difference oracle for the field PDE,
  used as the acceptance certificate for everything downstream;
* ``integrate_representation``: reconstruction of the immersion from a
  sampled field, with conformality, normal-recovery and mean-curvature
  verification baked into the returned mesh metadata;
* ``solve_bjorling``: a Cauchy solver that grows the field off an analytic
  curve with prescribed surface normal, as a truncated power series in the
  transverse variable (coefficients are exact truncated Taylor or Fourier
  series in the curve parameter).

Orientation conventions, fixed once for the whole module:

* ``G = -(N1 + i*N2) / (1 + N3)`` for the unit normal ``N``, equivalently
  ``N = ((-2*Re G, -2*Im G, 1 - |G|^2)) / (1 + |G|^2)``;
* the oriented normal of a reconstructed patch is ``psi_v x psi_u`` for the
  returned parameterization ``psi(u, v)``.

Wirtinger derivatives follow ``d/dzeta = (d/du - i*d/dv)/2`` and its
conjugate, discretized with central differences on uniform grids.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from .errors import NumericalError
from .profiles import WeightProfile, make_builtin, make_custom
from .solvers import BOWL_GRAPH, ProfileCurve
from .surfaces import (EUCLIDEAN, SurfaceMesh, _grid_faces,
                       mean_curvature_residual)

__all__ = [
    "GaussField", "BjorlingData", "gauss_pde_residual",
    "wirtinger_derivatives", "integrate_representation",
    "reconstruction_residuals", "rotational_gauss_field", "solve_bjorling",
    "save_gauss_field", "load_gauss_field", "bjorling_to_json",
    "bjorling_from_json",
]

TAYLOR = "taylor"
FOURIER = "fourier"

# Interior nodes with |1 - |G|^4| below this are treated as sitting on the
# singular circle |G| = 1 and rejected at construction time.
_UNIT_CIRCLE_TOL = 1e-12
# Representation integrands are refused (rather than clamped) when the
# denominator drops below this anywhere on the grid.
_SINGULAR_LOCUS_TOL = 1e-8


def _uniform_spacing(grid: np.ndarray, name: str) -> float:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 3:
        raise ValueError(f"{name} grid must be 1-D with at least 3 nodes")
    d = np.diff(grid)
    if np.any(d <= 0):
        raise ValueError(f"{name} grid must be strictly increasing")
    if not np.allclose(d, d[0], rtol=1e-8, atol=0.0):
        raise ValueError(f"{name} grid must be uniform")
    return float(d[0])


@dataclass
class GaussField:
    """Sampled complex field G on a rectangle in the conformal plane.

    ``G[i, j]`` is the value at ``(u[i], v[j])``; both grids are uniform.
    ``k_param`` is the weight-family index: 1 for the linear weight,
    otherwise ``dphi(z) = (2/(k_param - 1))/z``.  Interior nodes must stay
    off the circle ``|G| = 1`` where the representation denominators
    ``1 - |G|^4`` vanish (border nodes may touch it; they never enter a
    denominator).
    """

    u: np.ndarray
    v: np.ndarray
    G: np.ndarray
    k_param: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.G = np.asarray(self.G, dtype=complex)
        self._hu = _uniform_spacing(self.u, "u")
        self._hv = _uniform_spacing(self.v, "v")
        if self.G.shape != (len(self.u), len(self.v)):
            raise ValueError("G must have shape (len(u), len(v))")
        if not np.all(np.isfinite(self.G.real) & np.isfinite(self.G.imag)):
            raise ValueError("field contains non-finite values")
        self.k_param = float(self.k_param)
        if self.k_param == 0.0:
            raise ValueError("k = 0 is outside the scope of this "
                             "representation (no weight family attached)")
        den = np.abs(self.denominator()[1:-1, 1:-1])
        bad = den < _UNIT_CIRCLE_TOL
        if np.any(bad):
            if bad.all() and np.ptp(np.abs(self.G)) < 1e-9:
                raise ValueError(
                    "constant field of unit modulus: the data describe a "
                    "vertical plane, which carries no graph-type "
                    "representation")
            raise ValueError(
                f"|G| = 1 at {int(bad.sum())} interior node(s): the "
                "representation denominators 1 - |G|^4 vanish there")

    @property
    def hu(self) -> float:
        return self._hu

    @property
    def hv(self) -> float:
        return self._hv

    @property
    def shape(self) -> Tuple[int, int]:
        return self.G.shape

    def denominator(self) -> np.ndarray:
        """The array ``1 - |G|^4`` shared by every representation integrand."""
        return 1.0 - np.abs(self.G) ** 4

    def normals(self) -> np.ndarray:
        """Unit normal field encoded by G, shape ``(nu, nv, 3)``."""
        g2 = np.abs(self.G) ** 2
        w = 1.0 / (1.0 + g2)
        return np.stack([-2.0 * self.G.real * w, -2.0 * self.G.imag * w,
                         (1.0 - g2) * w], axis=-1)


def wirtinger_derivatives(field: GaussField) -> Tuple[np.ndarray, np.ndarray]:
    """(G_zeta, G_zetabar) by central differences, one-sided at the border."""
    gu = np.gradient(field.G, field.hu, axis=0, edge_order=2)
    gv = np.gradient(field.G, field.hv, axis=1, edge_order=2)
    return 0.5 * (gu - 1j * gv), 0.5 * (gu + 1j * gv)


def gauss_pde_residual(field: GaussField) -> np.ndarray:
    """Pointwise defect of the field equation, NaN on the border.

    A field describes a weighted-minimal surface exactly when

        G_{zeta zetabar} + 2 |G|^2/(1-|G|^4) * conj(G) G_zeta G_zetabar
                         + 2 k |G_zetabar|^2/(1-|G|^4) * G = 0.

    Derivatives are second-order central differences, so the residual of a
    smooth exact solution decays like O(h^2).  This is the one oracle the
    reconstruction and the Cauchy solver are both checked against.
    """
    G, k = field.G, field.k_param
    hu, hv = field.hu, field.hv
    c = G[1:-1, 1:-1]
    D = 1.0 - np.abs(c) ** 4
    if np.any(np.abs(D) < _UNIT_CIRCLE_TOL):
        raise NumericalError("|G| = 1 at a stencil node")
    guu = (G[2:, 1:-1] - 2.0 * c + G[:-2, 1:-1]) / hu ** 2
    gvv = (G[1:-1, 2:] - 2.0 * c + G[1:-1, :-2]) / hv ** 2
    gu = (G[2:, 1:-1] - G[:-2, 1:-1]) / (2.0 * hu)
    gv = (G[1:-1, 2:] - G[1:-1, :-2]) / (2.0 * hv)
    gz = 0.5 * (gu - 1j * gv)
    gzb = 0.5 * (gu + 1j * gv)
    out = np.full_like(G, np.nan + 1j * np.nan)
    out[1:-1, 1:-1] = (0.25 * (guu + gvv)
                       + 2.0 * np.abs(c) ** 2 / D * np.conj(c) * gz * gzb
                       + 2.0 * k * np.abs(gzb) ** 2 / D * c)
    return out


# ---------------------------------------------------------------------------
# reconstruction from a sampled field
# ---------------------------------------------------------------------------

def _route_integrals(w: np.ndarray, hu: float, hv: float, ib: int, jb: int
                     ) -> Tuple[np.ndarray, np.ndarray]:
    """Re of the path integral of ``w dzeta`` from node (ib, jb), two routes.

    Route A walks along u at v = v[jb] and then along v; route B swaps the
    order.  Only the real part of the integral is path independent for a
    solution field, and only it is returned.
    """
    cu = cumulative_trapezoid(w, dx=hu, axis=0, initial=0.0)
    cv = cumulative_trapezoid(1j * w, dx=hv, axis=1, initial=0.0)
    ra = (cu[:, jb] - cu[ib, jb])[:, None] + (cv - cv[:, jb][:, None])
    rb = (cv[ib, :] - cv[ib, jb])[None, :] + (cu - cu[ib, :][None, :])
    return ra.real, rb.real


def _locate_base(field: GaussField, base: Optional[complex]) -> Tuple[int, int]:
    if base is None:
        return (len(field.u) - 1) // 2, (len(field.v) - 1) // 2
    base = complex(base)
    ib = int(np.argmin(np.abs(field.u - base.real)))
    jb = int(np.argmin(np.abs(field.v - base.imag)))
    du = abs(field.u[ib] - base.real)
    dv = abs(field.v[jb] - base.imag)
    if du > 0.5 * field.hu + 1e-12 or dv > 0.5 * field.hv + 1e-12:
        raise ValueError(f"base point {base} lies outside the sampled "
                         "rectangle")
    return ib, jb


def _weight_profile_for(k: float, z: np.ndarray) -> Optional[WeightProfile]:
    """Weight profile matching the family index on the height range of z."""
    if k == 1.0:
        return make_builtin("linear", 1.0)
    alpha = 2.0 / (k - 1.0)
    if np.all(z > 0):
        return make_builtin("log", alpha)
    if np.all(z < 0):
        # Mirrored branch of the power-law weight, used when 0 < k < 1
        # places the surface below the singular plane.
        return make_custom(dphi=lambda t: alpha / np.asarray(t, dtype=float),
                           phi=lambda t: alpha * np.log(-np.asarray(t, dtype=float)),
                           ddphi=lambda t: -alpha / np.asarray(t, dtype=float) ** 2,
                           domain=(-math.inf, 0.0))
    return None


def integrate_representation(field: GaussField, base: Optional[complex] = None,
                             *, anchor: Optional[Sequence[float]] = None,
                             path_tol: Optional[float] = None) -> SurfaceMesh:
    """Rebuild the immersion whose Gauss image is the sampled field.

    The three coordinate functions are real parts of path integrals of
    rational integrands in G, conj(G)_zeta and 1 - |G|^4, taken from the
    grid node nearest ``base`` (grid center when omitted).  For ``k = 1``
    the integrals give the surface directly; otherwise the height is a pure
    exponential ``(2k/(k-1)) * Gamma`` with
    ``Gamma = exp(4(k-1) Re int conj(G)_zeta G / (1-|G|^4) dzeta)`` and the
    horizontal coordinates pick up the factor ``Gamma`` inside their
    integrands.

    Every integral is evaluated along two staircase routes; their averaged
    value is used and the worst disagreement is stored as
    ``meta["path_disagreement"]`` (it decays like O(h^2) for a true
    solution).  Disagreement beyond ``path_tol`` raises
    ``NumericalError``, since it means the field does not satisfy the
    integrability PDE.  The default tolerance is
    ``1e-3 * (1 + sup |psi|)``.

    ``anchor`` pins the free constants of the representation: for ``k = 1``
    the surface is translated so the base vertex lands on ``anchor``; for
    ``k != 1`` only a positive homothety and a horizontal translation are
    available, so the surface is scaled to match the anchor height (which
    must lie on the same side of z = 0) and then shifted horizontally.
    When ``anchor`` is omitted but the field metadata carries
    ``anchor_point``/``anchor_zeta`` (as fields made by
    ``rotational_gauss_field`` and ``solve_bjorling`` do), those are used
    at their own node.

    The returned mesh stores verification metrics in ``meta``:
    ``conformal_defect`` (relative anisotropy of the induced metric),
    ``gauss_map_defect`` (sup distance between G and the stereographic
    image of the discrete normal) and ``mean_curvature_residual`` (sup of
    the cotangent-formula curvature defect against the matching weight).
    """
    G, k = field.G, field.k_param
    nu, nv = field.shape
    hu, hv = field.hu, field.hv

    gz, gzb = wirtinger_derivatives(field)
    scale = 1.0 + np.abs(gz).max()
    if np.abs(gzb).max() <= 1e-13 * scale:
        raise ValueError(
            "the field is holomorphic to machine precision, so every "
            "representation integrand vanishes; constant unit-modulus data "
            "describe a vertical plane, other holomorphic data carry no "
            "graph-type reconstruction")

    D = field.denominator()
    near = np.abs(D) < _SINGULAR_LOCUS_TOL
    if np.any(near):
        raise NumericalError(
            f"singular locus: 1 - |G|^4 drops below {_SINGULAR_LOCUS_TOL:g} "
            f"at {int(near.sum())} node(s); the representation integrals "
            "blow up as |G| -> 1")

    ib, jb = _locate_base(field, base)
    gbz = np.conj(gzb)          # derivative of conj(G) along zeta
    w1 = gbz * (1.0 - G ** 2) / D
    w2 = 1j * gbz * (1.0 + G ** 2) / D
    w3 = gbz * G / D

    if k == 1.0:
        parts_a, parts_b = [], []
        for w, s in ((w1, 4.0), (w2, 4.0), (w3, 8.0)):
            ra, rb = _route_integrals(w, hu, hv, ib, jb)
            parts_a.append(s * ra)
            parts_b.append(s * rb)
        psi = [0.5 * (a + b) for a, b in zip(parts_a, parts_b)]
        disagreement = max(float(np.abs(a - b).max())
                           for a, b in zip(parts_a, parts_b))
    else:
        r3a, r3b = _route_integrals(w3, hu, hv, ib, jb)
        gamma_a = np.exp(4.0 * (k - 1.0) * r3a)
        gamma_b = np.exp(4.0 * (k - 1.0) * r3b)
        gamma = np.exp(4.0 * (k - 1.0) * 0.5 * (r3a + r3b))
        vertical = 2.0 * k / (k - 1.0)
        q1a, q1b = _route_integrals(w1 * gamma, hu, hv, ib, jb)
        q2a, q2b = _route_integrals(w2 * gamma, hu, hv, ib, jb)
        psi = [2.0 * k * (q1a + q1b), 2.0 * k * (q2a + q2b),
               vertical * gamma]
        disagreement = max(
            4.0 * abs(k) * float(np.abs(q1a - q1b).max()),
            4.0 * abs(k) * float(np.abs(q2a - q2b).max()),
            abs(vertical) * float(np.abs(gamma_a - gamma_b).max()))

    sup_psi = max(float(np.abs(p).max()) for p in psi)
    tol = 1e-3 * (1.0 + sup_psi) if path_tol is None else float(path_tol)
    if disagreement > tol:
        raise NumericalError(
            f"path dependence {disagreement:.3e} exceeds {tol:.3e}: the "
            "field does not satisfy the integrability PDE on this grid")

    # Pin the free constants of the solution family.
    anchor_used = None
    if anchor is not None:
        ax, ay, az = (float(anchor[0]), float(anchor[1]), float(anchor[2]))
        ia, ja = ib, jb
        anchor_used = (ax, ay, az)
    elif "anchor_point" in field.meta and "anchor_zeta" in field.meta:
        ax, ay, az = (float(c) for c in field.meta["anchor_point"])
        ia, ja = _locate_base(field, field.meta["anchor_zeta"])
        anchor_used = (ax, ay, az)
    if anchor_used is not None:
        if k == 1.0:
            for p, a in zip(psi, anchor_used):
                p += a - p[ia, ja]
        else:
            c0 = anchor_used[2] / psi[2][ia, ja]
            if c0 <= 0:
                raise ValueError(
                    "anchor height lies on the wrong side of the singular "
                    "plane z = 0; only positive homotheties preserve the "
                    "weight family")
            psi = [c0 * p for p in psi]
            psi[0] += anchor_used[0] - psi[0][ia, ja]
            psi[1] += anchor_used[1] - psi[1][ia, ja]

    points = np.stack(psi, axis=-1)
    normals = field.normals()
    mesh = SurfaceMesh(vertices=points.reshape(-1, 3),
                       faces=_grid_faces(nu, nv),
                       normals=normals.reshape(-1, 3),
                       signature=EUCLIDEAN,
                       meta={"kind": "weierstrass-representation",
                             "k": k, "u": field.u.copy(), "v": field.v.copy(),
                             "G": field.G.copy(),
                             "base_zeta": complex(field.u[ib], field.v[jb]),
                             "anchor": anchor_used,
                             "path_disagreement": disagreement,
                             "path_tol": tol})

    # Verification block: conformality, normal recovery, mean curvature.
    pu = np.gradient(points, hu, axis=0, edge_order=2)
    pv = np.gradient(points, hv, axis=1, edge_order=2)
    ee = np.einsum("ijk,ijk->ij", pu, pu)[1:-1, 1:-1]
    gg = np.einsum("ijk,ijk->ij", pv, pv)[1:-1, 1:-1]
    ff = np.einsum("ijk,ijk->ij", pu, pv)[1:-1, 1:-1]
    lam2 = 0.5 * (ee + gg)
    mesh.meta["conformal_defect"] = float(
        (np.maximum(np.abs(ee - gg), 2.0 * np.abs(ff)) / lam2).max())

    nrm = np.cross(pv, pu)[1:-1, 1:-1]
    nrm /= np.linalg.norm(nrm, axis=-1, keepdims=True)
    ok = 1.0 + nrm[..., 2] > 1e-6
    grec = np.where(ok, -(nrm[..., 0] + 1j * nrm[..., 1])
                    / np.where(ok, 1.0 + nrm[..., 2], 1.0), G[1:-1, 1:-1])
    mesh.meta["gauss_map_defect"] = float(np.abs(grec - G[1:-1, 1:-1]).max())

    prof = _weight_profile_for(k, points[..., 2])
    if prof is not None:
        res = mean_curvature_residual(mesh, prof)
        mesh.meta["mean_curvature_residual"] = float(np.nanmax(np.abs(res)))
    else:
        mesh.meta["mean_curvature_residual"] = math.nan
    return mesh


def reconstruction_residuals(mesh: SurfaceMesh) -> Dict[str, np.ndarray]:
    """Discrete defects of the first-order representation identities.

    Takes a mesh produced by ``integrate_representation`` (it needs the
    stored parameterization) and returns, on the (nu, nv) grid with NaN
    border, the residuals of the identities tying ``psi_zeta`` to the
    field:

    * ``null_defect``: psi1_z^2 + psi2_z^2 + psi3_z^2 (isotropy of the
      conformal immersion);
    * ``pairing_defect``: psi3_z - G * (psi1_z - i psi2_z);
    * ``split_defect_x`` / ``split_defect_y``: psi1_z and psi2_z against
      their rational expressions in (psi1_z - i psi2_z, G);
    * ``gradient_defect``: 4 G_zetabar - dphi(psi3) * conj(psi1_z - i
      psi2_z) * (1 - |G|^4), the equation that propagates the field.

    All five vanish at discretization order on an exact reconstruction and
    are invariant under the free constants (translation for k = 1,
    homothety and horizontal translation otherwise).
    """
    for key in ("u", "v", "G", "k"):
        if key not in mesh.meta:
            raise ValueError("mesh does not carry a stored parameterization; "
                             "only meshes from integrate_representation are "
                             "supported")
    u, v = mesh.meta["u"], mesh.meta["v"]
    G, k = mesh.meta["G"], float(mesh.meta["k"])
    nu, nv = len(u), len(v)
    hu, hv = u[1] - u[0], v[1] - v[0]
    points = mesh.vertices.reshape(nu, nv, 3)

    pu = np.gradient(points, hu, axis=0, edge_order=2)
    pv = np.gradient(points, hv, axis=1, edge_order=2)
    psi_z = 0.5 * (pu - 1j * pv)
    p1, p2, p3 = psi_z[..., 0], psi_z[..., 1], psi_z[..., 2]
    fh = p1 - 1j * p2

    gu = np.gradient(G, hu, axis=0, edge_order=2)
    gv = np.gradient(G, hv, axis=1, edge_order=2)
    gzb = 0.5 * (gu + 1j * gv)
    D = 1.0 - np.abs(G) ** 4
    dphi = np.ones_like(points[..., 2]) if k == 1.0 \
        else (2.0 / (k - 1.0)) / points[..., 2]

    out = {
        "null_defect": p1 ** 2 + p2 ** 2 + p3 ** 2,
        "pairing_defect": p3 - G * fh,
        "split_defect_x": p1 - 0.5 * fh * (1.0 - G ** 2),
        "split_defect_y": p2 - 0.5j * fh * (1.0 + G ** 2),
        "gradient_defect": 4.0 * gzb - dphi * np.conj(fh) * D,
    }
    for arr in out.values():
        arr[0, :] = arr[-1, :] = np.nan
        arr[:, 0] = arr[:, -1] = np.nan
    return out


def rotational_gauss_field(curve: ProfileCurve, k_param: float,
                           s_window: Tuple[float, float], *,
                           n_u: int = 161, v_halfwidth: float = 1.0,
                           n_v: int = 121) -> GaussField:
    """Gauss field of a surface of revolution in conformal coordinates.

    ``curve`` must be a bowl-type generating curve (``solve_bowl`` output)
    whose weight matches ``k_param``; the caller owns that pairing, a
    mismatch shows up immediately in ``gauss_pde_residual``.  The conformal
    parameter is ``u = int ds / x`` along the meridian (restricted to the
    arc-length window ``s_window``, which must stay off the axis) and ``v``
    is minus the rotation angle, so the surface point is
    ``(x cos v, -x sin v, z)`` and the field is
    ``tan(theta/2) * exp(-i v)``.

    The returned field carries ``anchor_point``/``anchor_zeta`` metadata at
    the grid center and the sampled surface in ``meta["source_points"]``,
    so a reconstruction can be compared vertex by vertex.
    """
    if curve.curve_kind != BOWL_GRAPH:
        raise ValueError("rotational fields are built from bowl-type "
                         f"curves, not {curve.curve_kind}")
    if not 0 < v_halfwidth < math.pi:
        raise ValueError("v_halfwidth must lie in (0, pi): one conformal "
                         "strip must stay simply connected")
    keep = curve.x > 1e-12
    s, x, z, th = (a[keep] for a in (curve.s, curve.x, curve.z, curve.theta))
    if len(s) < 4:
        raise ValueError("curve has too few samples off the axis")
    lo, hi = float(s_window[0]), float(s_window[1])
    if not (s[0] <= lo < hi <= s[-1]):
        raise ValueError(f"s_window must be inside [{s[0]:.6g}, {s[-1]:.6g}] "
                         "and increasing")

    rho = cumulative_trapezoid(1.0 / x, s, initial=0.0)
    rho_of_s = CubicSpline(s, rho)
    s_of_rho = CubicSpline(rho, s)
    th_of_s = CubicSpline(s, th)
    x_of_s = CubicSpline(s, x)
    z_of_s = CubicSpline(s, z)

    u = np.linspace(float(rho_of_s(lo)), float(rho_of_s(hi)), n_u)
    v = np.linspace(-v_halfwidth, v_halfwidth, n_v)
    s_u = s_of_rho(u)
    half = np.tan(0.5 * th_of_s(s_u))
    G = half[:, None] * np.exp(-1j * v)[None, :]

    xs, zs = x_of_s(s_u), z_of_s(s_u)
    points = np.stack([xs[:, None] * np.cos(v)[None, :],
                       -xs[:, None] * np.sin(v)[None, :],
                       np.broadcast_to(zs[:, None], (n_u, n_v)).copy()],
                      axis=-1)
    ic, jc = (n_u - 1) // 2, (n_v - 1) // 2
    meta = {"source_points": points,
            "source_s": s_u,
            "anchor_point": points[ic, jc].copy(),
            "anchor_zeta": complex(u[ic], v[jc]),
            "profile_kind": curve.profile.kind,
            "profile_params": dict(curve.profile.params)}
    return GaussField(u=u, v=v, G=G, k_param=k_param, meta=meta)


# ---------------------------------------------------------------------------
# truncated series algebra for the Cauchy solver
# ---------------------------------------------------------------------------

class _Series:
    """Truncated series in one real variable with ring operations.

    Two carriers share one interface: ``taylor`` holds coefficients of
    ``(s - center)^j`` up to a fixed length, ``fourier`` holds modes
    ``exp(i m w s)`` for ``m = -M..M``.  Supported: +, -, *, scalar mix-ins,
    d/ds, complex conjugate (of the function, not the coefficients),
    reciprocal, and evaluation.  Products are truncated back to the carrier
    size, which is what makes the Cauchy recursion finite.
    """

    __slots__ = ("kind", "coef", "center", "period")

    def __init__(self, kind: str, coef: np.ndarray, center: float = 0.0,
                 period: float = 0.0):
        self.kind = kind
        self.coef = np.asarray(coef, dtype=complex)
        self.center = center
        self.period = period

    @classmethod
    def taylor(cls, coef: Sequence[complex], center: float,
               length: int) -> "_Series":
        c = np.zeros(length, dtype=complex)
        c[:min(len(coef), length)] = np.asarray(coef,
                                                dtype=complex)[:length]
        return cls(TAYLOR, c, center=center)

    @classmethod
    def fourier(cls, modes: Dict[int, complex], period: float,
                m_max: int) -> "_Series":
        c = np.zeros(2 * m_max + 1, dtype=complex)
        for m, val in modes.items():
            if abs(m) > m_max:
                raise ValueError(f"mode {m} exceeds the carrier size {m_max}")
            c[m_max + m] = val
        return cls(FOURIER, c, period=period)

    @property
    def m_max(self) -> int:
        if self.kind == TAYLOR:
            return len(self.coef) - 1
        return (len(self.coef) - 1) // 2

    def _new(self, coef: np.ndarray) -> "_Series":
        return _Series(self.kind, coef, center=self.center,
                       period=self.period)

    def __add__(self, other):
        if isinstance(other, _Series):
            return self._new(self.coef + other.coef)
        c = self.coef.copy()
        c[0 if self.kind == TAYLOR else self.m_max] += other
        return self._new(c)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (other * -1.0 if isinstance(other, _Series) else -other)

    def __rsub__(self, other):
        return (self * -1.0) + other

    def __mul__(self, other):
        if not isinstance(other, _Series):
            return self._new(self.coef * other)
        full = np.convolve(self.coef, other.coef)
        if self.kind == TAYLOR:
            return self._new(full[:len(self.coef)])
        m = self.m_max
        return self._new(full[m:3 * m + 1])

    __rmul__ = __mul__

    def conj(self) -> "_Series":
        if self.kind == TAYLOR:
            return self._new(np.conj(self.coef))
        return self._new(np.conj(self.coef[::-1]))

    def dds(self) -> "_Series":
        if self.kind == TAYLOR:
            c = np.zeros_like(self.coef)
            c[:-1] = self.coef[1:] * np.arange(1, len(self.coef))
            return self._new(c)
        omega = 2.0 * math.pi / self.period
        modes = np.arange(-self.m_max, self.m_max + 1)
        return self._new(self.coef * (1j * omega * modes))

    def recip(self) -> "_Series":
        """1/self, assuming the function has no zeros where it matters."""
        if self.kind == TAYLOR:
            a = self.coef
            if abs(a[0]) < 1e-300:
                raise ZeroDivisionError("series reciprocal at a zero")
            b = np.zeros_like(a)
            b[0] = 1.0 / a[0]
            for n in range(1, len(a)):
                b[n] = -np.dot(a[1:n + 1], b[n - 1::-1]) / a[0]
            return self._new(b)
        # Fourier: invert pointwise on an oversampled period, then read the
        # central band off the FFT.
        n = 8 * (2 * self.m_max + 1)
        sgrid = np.arange(n) * (self.period / n)
        vals = self.eval(sgrid)
        if np.min(np.abs(vals)) < 1e-12:
            raise ZeroDivisionError("series reciprocal at a zero")
        spec = np.fft.fft(1.0 / vals) / n
        c = np.zeros(2 * self.m_max + 1, dtype=complex)
        for m in range(-self.m_max, self.m_max + 1):
            c[self.m_max + m] = spec[m % n]
        return self._new(c)

    def eval(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.kind == TAYLOR:
            return np.polynomial.polynomial.polyval(s - self.center,
                                                    self.coef)
        omega = 2.0 * math.pi / self.period
        modes = np.arange(-self.m_max, self.m_max + 1)
        return np.exp(1j * omega * np.outer(s, modes)) @ self.coef


def _bivariate_mul(a: List[_Series], b: List[_Series],
                   order: int) -> List[_Series]:
    """Product of two v-power series with _Series coefficients, truncated."""
    zero = a[0] * 0.0
    out = []
    for n in range(order + 1):
        acc = zero
        for i in range(n + 1):
            if i < len(a) and (n - i) < len(b):
                acc = acc + a[i] * b[n - i]
        out.append(acc)
    return out


def _bivariate_recip(a: List[_Series], order: int) -> List[_Series]:
    r0 = a[0].recip()
    zero = a[0] * 0.0
    out = [r0]
    for n in range(1, order + 1):
        acc = zero
        for j in range(1, n + 1):
            aj = a[j] if j < len(a) else zero
            acc = acc + aj * out[n - j]
        out.append((acc * -1.0) * r0)
    return out


def _cauchy_march(c0: _Series, c1: _Series, k: float,
                  degree: int) -> List[_Series]:
    """Transverse power-series coefficients of the field off the curve.

    Solving the field PDE for the second v-derivative gives

        G_vv = -G_ss - 8 [ |G|^2 conj(G) G_z G_zb + k |G_zb|^2 G ] / (1-|G|^4)

    and matching v-powers turns that into a two-step recursion for the
    coefficient functions c_n(s) of G = sum c_n v^n.  Each step only ever
    uses coefficients already known: the order-n component of the right
    side involves c_0..c_{n+1}.
    """
    cs = [c0, c1]
    zero = c0 * 0.0
    for n in range(degree - 1):
        order = n
        G = cs + [zero] * (degree + 1 - len(cs))
        Gb = [g.conj() for g in G]
        Gs = [g.dds() for g in G]
        Gv = [(i + 1.0) * G[i + 1] for i in range(len(G) - 1)] + [zero]
        Gz = [0.5 * (Gs[i] - 1j * Gv[i]) for i in range(len(G))]
        Gzb = [0.5 * (Gs[i] + 1j * Gv[i]) for i in range(len(G))]
        Gzb_c = [g.conj() for g in Gzb]
        g2 = _bivariate_mul(G, Gb, order)
        g4 = _bivariate_mul(g2, g2, order)
        den = [1.0 - g4[0]] + [g * -1.0 for g in g4[1:]]
        den_inv = _bivariate_recip(den, order)
        t1 = _bivariate_mul(_bivariate_mul(g2, Gb, order),
                            _bivariate_mul(Gz, Gzb, order), order)
        t2 = _bivariate_mul(_bivariate_mul(Gzb, Gzb_c, order), G, order)
        rhs = _bivariate_mul([t1[i] + k * t2[i] for i in range(order + 1)],
                             den_inv, order)
        c_new = (cs[n].dds().dds() + 8.0 * rhs[n]) \
            * (-1.0 / ((n + 2.0) * (n + 1.0)))
        cs.append(c_new)
    return cs


def _horner_eval(cs: List[_Series], s: np.ndarray,
                 v: np.ndarray) -> np.ndarray:
    vals = np.zeros((len(s), len(v)), dtype=complex)
    for c in reversed(cs):
        vals = vals * v[None, :] + c.eval(s)[:, None]
    return vals


# ---------------------------------------------------------------------------
# Cauchy problem: analytic curve + prescribed normal
# ---------------------------------------------------------------------------

@dataclass
class BjorlingData:
    """Analytic curve and unit normal field, as truncated series.

    ``beta`` and ``normal`` are real coefficient arrays of shape
    ``(3, n_terms)``, one row per space component.  For ``curve_kind =
    "taylor"`` row entries are coefficients of ``(s - center)^j`` and the
    data live on ``|s - center| <= s_halfwidth``; for ``"fourier"`` the
    layout is ``[a0, a1, b1, a2, b2, ...]`` for
    ``a0 + sum a_m cos(m w s) + b_m sin(m w s)`` with ``w = 2 pi / period``.

    Constraints are checked on a dense sample at construction: the normal
    must be unit length, orthogonal to the curve tangent, and stay in the
    upper hemisphere (its stereographic image inside the unit disc).
    """

    curve_kind: str
    beta: np.ndarray
    normal: np.ndarray
    degree: int = 12
    center: float = 0.0
    s_halfwidth: float = 1.0
    period: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.curve_kind not in (TAYLOR, FOURIER):
            raise ValueError(f"unknown curve_kind {self.curve_kind!r}")
        self.beta = np.atleast_2d(np.asarray(self.beta, dtype=float))
        self.normal = np.atleast_2d(np.asarray(self.normal, dtype=float))
        for name, arr in (("beta", self.beta), ("normal", self.normal)):
            if arr.shape[0] != 3 or arr.shape[1] < 1:
                raise ValueError(f"{name} must have shape (3, n_terms)")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite coefficients")
        self.degree = int(self.degree)
        if self.degree < 2:
            raise ValueError("series degree must be at least 2")
        if self.curve_kind == TAYLOR:
            if not self.s_halfwidth > 0:
                raise ValueError("taylor data need s_halfwidth > 0")
        else:
            if not self.period > 0:
                raise ValueError("fourier data need period > 0")
            if self.beta.shape[1] % 2 == 0 or self.normal.shape[1] % 2 == 0:
                raise ValueError("fourier rows must have odd length "
                                 "[a0, a1, b1, ...]")
        b, n = self.series_triples(max(self.beta.shape[1],
                                       self.normal.shape[1]) + 2)
        s = self.sample_grid(257)
        nv = np.stack([c.eval(s) for c in n])
        bp = np.stack([c.dds().eval(s) for c in b])
        if np.abs(nv.imag).max() > 1e-12 or np.abs(bp.imag).max() > 1e-12:
            raise ValueError("coefficient arrays must describe real curves")
        nv, bp = nv.real, bp.real
        unit = np.abs((nv ** 2).sum(axis=0) - 1.0).max()
        if unit > 1e-6:
            raise ValueError(f"normal field is not unit length "
                             f"(sup | |V|^2 - 1 | = {unit:.3e})")
        sp = np.linalg.norm(bp, axis=0).max()
        orth = np.abs((bp * nv).sum(axis=0)).max()
        if orth > 1e-6 * max(1.0, sp):
            raise ValueError("normal field is not orthogonal to the curve "
                             f"tangent (sup <beta', V> = {orth:.3e})")
        if nv[2].min() <= 0:
            raise ValueError("normal field must stay in the open upper "
                             "hemisphere (stereographic image inside the "
                             "unit disc)")

    def sample_grid(self, n: int) -> np.ndarray:
        if self.curve_kind == TAYLOR:
            return np.linspace(self.center - self.s_halfwidth,
                               self.center + self.s_halfwidth, n)
        return np.linspace(0.0, self.period, n)

    def series_triples(self, resolution: int
                       ) -> Tuple[List[_Series], List[_Series]]:
        """(beta, normal) as _Series triples on a carrier of given size."""
        def convert(row: np.ndarray) -> _Series:
            if self.curve_kind == TAYLOR:
                return _Series.taylor(row, self.center, resolution)
            modes: Dict[int, complex] = {0: complex(row[0])}
            for m in range(1, (len(row) + 1) // 2):
                a = row[2 * m - 1]
                bcoef = row[2 * m] if 2 * m < len(row) else 0.0
                modes[m] = 0.5 * (a - 1j * bcoef)
                modes[-m] = 0.5 * (a + 1j * bcoef)
            return _Series.fourier(modes, self.period, resolution)

        return ([convert(r) for r in self.beta],
                [convert(r) for r in self.normal])


def solve_bjorling(data: BjorlingData, k: float, halfwidth: float, *,
                   n_u: int = 201, n_v: int = 201,
                   residual_tol: float = 1e-3,
                   resolution: Optional[int] = None) -> GaussField:
    """Grow the Gauss field off a curve with prescribed surface normal.

    The curve and normal determine the field and its first transverse
    derivative on the line v = 0; the field PDE then fixes every higher
    v-derivative (a Cauchy recursion in truncated series arithmetic, so
    all differentiation is exact).  The series is summed on the strip
    ``|v| <= halfwidth`` and returned as a ``GaussField`` whose metadata
    carries the anchor ``beta(s_center)``, so a subsequent
    ``integrate_representation`` reproduces the surface through the curve.

    ``residual_tol`` bounds the convergence certificate: the PDE residual
    of the evaluated series (``meta["certificate"]``).  A certificate above
    the tolerance, or outright growth of the scaled coefficient norms,
    raises ``NumericalError`` (strip too wide for the truncation order).
    Note the certificate is computed on the evaluation grid, so it
    includes an O(h^2) discretization floor in addition to the series
    truncation error.

    The initial value has two algebraically equivalent expressions whose
    pointwise disagreement measures how far the data are from exactly
    null-compatible; it is reported as ``meta["branch_disagreement"]``
    (NaN when one branch degenerates everywhere, as happens for straight
    lines) rather than silently resolved.
    """
    k = float(k)
    if k == 0.0:
        raise ValueError("k = 0 is outside the scope of this solver")
    if not halfwidth > 0:
        raise ValueError("halfwidth must be positive")
    if n_u < 3 or n_v < 3:
        raise ValueError("evaluation grid needs at least 3 nodes per axis")
    if resolution is None:
        resolution = 2 * data.degree + 9 + max(data.beta.shape[1],
                                               data.normal.shape[1])

    b, vfield = data.series_triples(resolution)
    sgrid = data.sample_grid(max(n_u, 129))
    if k != 1.0:
        b3min = b[2].eval(sgrid).real.min()
        if b3min <= 0:
            raise ValueError("the curve must stay at positive height when "
                             f"k != 1 (min beta_3 = {b3min:.3e}); the weight "
                             "is singular on the plane z = 0")

    bp = [c.dds() for c in b]
    cross = [bp[1] * vfield[2] - bp[2] * vfield[1],
             bp[2] * vfield[0] - bp[0] * vfield[2],
             bp[0] * vfield[1] - bp[1] * vfield[0]]
    phi = [0.5 * (bp[i] - 1j * cross[i]) for i in range(3)]
    den = phi[0] - 1j * phi[1]

    phi_v = np.stack([p.eval(sgrid) for p in phi])
    den_v = phi_v[0] - 1j * phi_v[1]
    scale = np.abs(phi_v).max()
    if scale == 0.0:
        raise ValueError("degenerate data: the curve is a single point")
    margin = 1e-8 * scale
    if np.abs(den_v).min() >= margin:
        g0 = phi[2] * den.recip()
        branch = "primary"
    elif np.abs(phi_v[2]).min() >= margin:
        g0 = (phi[0] + 1j * phi[1]) * phi[2].recip() * -1.0
        branch = "alternate"
    else:
        raise ValueError("both initial-value denominators vanish along the "
                         "curve; the data are degenerate")

    both = (np.abs(den_v) >= margin) & (np.abs(phi_v[2]) >= margin)
    if np.any(both):
        ga = phi_v[2][both] / den_v[both]
        gb = -(phi_v[0][both] + 1j * phi_v[1][both]) / phi_v[2][both]
        branch_disagreement = float(np.abs(ga - gb).max())
    else:
        branch_disagreement = math.nan

    g0c = g0.conj()
    d0 = 1.0 - (g0 * g0c) * (g0 * g0c)
    if k == 1.0:
        gzb0 = 0.25 * (d0 * den.conj())
    else:
        gzb0 = (d0 * den.conj() * b[2].recip()) * (0.5 / (k - 1.0))
    c1 = -1j * (2.0 * gzb0 - g0.dds())

    cs = _cauchy_march(g0, c1, k, data.degree)
    tails = np.array([float(np.abs(c.eval(sgrid)).max()) * halfwidth ** n
                      for n, c in enumerate(cs)])
    # A convergent evaluation has its largest scaled term early and a
    # decaying tail; genuine divergence puts the maximum at the end.  Two
    # trailing terms are inspected because symmetric data often alternate
    # between large and small coefficients.  The comparison is on evaluated
    # sup norms, not raw coefficients, because high-order coefficient noise
    # with tiny contribution on the strip is harmless.
    floor = max(float(tails.min()), 1e-300)
    tail_end = float(tails[-2:].max())
    if len(tails) >= 4 and tail_end >= tails.max() * (1.0 - 1e-12) \
            and tail_end > 1e3 * floor:
        raise NumericalError(
            "transverse series diverges on the requested strip (scaled "
            f"tail norm {tail_end:.3e} vs minimum {floor:.3e}); reduce "
            "halfwidth or raise the truncation degree")

    u = data.sample_grid(n_u)
    v = np.linspace(-halfwidth, halfwidth, n_v)
    G = _horner_eval(cs, u, v)

    ic = (n_u - 1) // 2
    anchor = np.array([c.eval(np.array([u[ic]]))[0].real for c in b])
    meta = {"anchor_point": anchor,
            "anchor_zeta": complex(u[ic], 0.0),
            "branch": branch,
            "branch_disagreement": branch_disagreement,
            "tail_norms": tails,
            "degree": data.degree,
            "resolution": resolution}
    try:
        fieldout = GaussField(u=u, v=v, G=G, k_param=k, meta=meta)
    except ValueError as exc:
        raise NumericalError(
            f"series field leaves the admissible region: {exc}") from exc

    cert = float(np.nanmax(np.abs(gauss_pde_residual(fieldout))))
    fieldout.meta["certificate"] = cert
    if not math.isfinite(cert) or cert > residual_tol:
        raise NumericalError(
            f"convergence certificate {cert:.3e} exceeds the tolerance "
            f"{residual_tol:.1e}: strip halfwidth {halfwidth:g} is too wide "
            f"for truncation degree {data.degree}")
    return fieldout


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_gauss_field(fieldobj: GaussField, path,
                     comments: Sequence[str] = ()) -> None:
    """Write a field as CSV columns (u, v, Re G, Im G), row-major in u."""
    nu, nv = fieldobj.shape
    uu = np.repeat(fieldobj.u, nv)
    vv = np.tile(fieldobj.v, nu)
    flat = fieldobj.G.reshape(-1)
    data = np.column_stack([uu, vv, flat.real, flat.imag])
    lines = [f"# {c}" for c in comments]
    lines += [f"# k = {fieldobj.k_param:.16e}",
              f"# shape = {nu} {nv}",
              "u,v,re_g,im_g"]
    np.savetxt(path, data, delimiter=",", header="\n".join(lines),
               comments="", fmt="%.16e")


def load_gauss_field(path) -> GaussField:
    """Read a field written by ``save_gauss_field``."""
    k = None
    shape = None
    n_skip = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            n_skip += 1
            line = line.strip()
            if line.startswith("# k ="):
                k = float(line.split("=", 1)[1])
            elif line.startswith("# shape ="):
                shape = tuple(int(t) for t in line.split("=", 1)[1].split())
            elif not line.startswith("#"):
                break
    if k is None or shape is None or len(shape) != 2:
        raise ValueError(f"{path} lacks the field header (k and shape)")
    raw = np.loadtxt(path, delimiter=",", skiprows=n_skip, ndmin=2)
    nu, nv = shape
    if raw.shape != (nu * nv, 4):
        raise ValueError(f"{path} holds {raw.shape[0]} rows with "
                         f"{raw.shape[1] if raw.ndim == 2 else 1} columns, "
                         f"expected {nu * nv} rows of 4")
    u = raw[::nv, 0]
    v = raw[:nv, 1]
    G = (raw[:, 2] + 1j * raw[:, 3]).reshape(nu, nv)
    return GaussField(u=u, v=v, G=G, k_param=k, meta={"source": str(path)})


def bjorling_to_json(data: BjorlingData, k: float) -> str:
    doc = {
        "curve_kind": data.curve_kind,
        "k": float(k),
        "degree": data.degree,
        "beta": data.beta.tolist(),
        "normal": data.normal.tolist(),
    }
    if data.curve_kind == TAYLOR:
        doc["center"] = data.center
        doc["s_halfwidth"] = data.s_halfwidth
    else:
        doc["period"] = data.period
    return json.dumps(doc, indent=2, sort_keys=True)


def bjorling_from_json(text: str) -> Tuple[BjorlingData, float]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid Cauchy-data document: {exc}") from exc
    for key in ("curve_kind", "k", "beta", "normal"):
        if key not in doc:
            raise ValueError(f"Cauchy-data document lacks the {key!r} entry")
    data = BjorlingData(
        curve_kind=doc["curve_kind"],
        beta=np.asarray(doc["beta"], dtype=float),
        normal=np.asarray(doc["normal"], dtype=float),
        degree=int(doc.get("degree", 12)),
        center=float(doc.get("center", 0.0)),
        s_halfwidth=float(doc.get("s_halfwidth", 1.0)),
        period=float(doc.get("period", 0.0)),
    )
    return data, float(doc["k"])
