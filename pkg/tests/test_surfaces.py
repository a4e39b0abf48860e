import math

import numpy as np
import pytest

from phimin import make_builtin
from phimin.solvers import ProfileCurve, solve_bowl, solve_catenary, solve_catenoid
from phimin.surfaces import (
    EUCLIDEAN,
    LORENTZIAN,
    GraphPatch,
    SurfaceMesh,
    cylinder_patch,
    extrude_cylinder,
    fe_residual,
    lfe_residual,
    mean_curvature_residual,
    revolve,
    rotational_patch,
    save_obj,
    save_ply,
    second_fundamental_norm,
    tilt_cylinder,
)

LIN1 = make_builtin("linear", 1.0)


def reaper_patch(n=121, half=1.0):
    x = np.linspace(-half, half, n)
    y = np.linspace(-half, half, n)
    u = np.repeat(-np.log(np.cos(x))[:, None], n, axis=1)
    return GraphPatch(x, y, u)


def sphere_mesh(radius=1.0, n_s=60, nt=80):
    s = np.linspace(0.35, math.pi - 0.35, n_s)
    curve = ProfileCurve(s=s, x=radius * np.sin(s), z=radius * np.cos(s),
                         theta=-s, curve_kind="catenoid_left", profile=LIN1,
                         initial_data={})
    return revolve(curve, nt)


def round_cylinder_mesh(radius=1.0, n_s=40, nt=60):
    s = np.linspace(0.0, 2.0, n_s)
    curve = ProfileCurve(s=s, x=np.full_like(s, radius), z=s,
                         theta=np.full_like(s, math.pi / 2),
                         curve_kind="catenoid_left", profile=LIN1,
                         initial_data={})
    return revolve(curve, nt)


# -- patches and finite-difference oracles ----------------------------------


def test_fe_residual_on_closed_form():
    res = fe_residual(reaper_patch(n=121), LIN1)
    interior = res[1:-1, 1:-1]
    assert np.nanmax(np.abs(interior)) < 5e-3
    # second-order refinement
    res2 = fe_residual(reaper_patch(n=241), LIN1)
    r = np.nanmax(np.abs(interior)) / np.nanmax(np.abs(res2[1:-1, 1:-1]))
    assert r > 3.0


def test_fe_residual_plane_negative_control():
    n = 41
    x = y = np.linspace(-1, 1, n)
    patch = GraphPatch(x, y, np.repeat(x[:, None], n, axis=1))
    res = fe_residual(patch, LIN1)
    assert np.allclose(res[1:-1, 1:-1], -2.0, atol=1e-9)


def test_fe_residual_solver_patch():
    bowl = solve_bowl(LIN1, 0.0, 6.0, tol=1e-10)
    patch = rotational_patch(bowl, 1.2, 101, 101)
    res = fe_residual(patch, LIN1)
    assert np.nanmax(np.abs(res[1:-1, 1:-1])) < 5e-3


def test_lfe_residual_constant_patch():
    n = 21
    x = y = np.linspace(-1, 1, n)
    patch = GraphPatch(x, y, np.full((n, n), 0.7), signature=LORENTZIAN)
    res = lfe_residual(patch, LIN1)
    assert np.allclose(res[1:-1, 1:-1], 1.0, atol=1e-12)


def test_lfe_rejects_non_spacelike():
    n = 21
    x = y = np.linspace(-1, 1, n)
    u = np.repeat((1.5 * x)[:, None], n, axis=1)  # slope 1.5 > 1
    with pytest.raises(ValueError):
        GraphPatch(x, y, u, signature=LORENTZIAN)
    patch = GraphPatch(x, y, u, signature=EUCLIDEAN)
    patch.signature = LORENTZIAN  # sneak past construction-time validation
    with pytest.raises(ValueError):
        lfe_residual(patch, LIN1)


def test_patch_requires_uniform_grid():
    x = np.array([0.0, 0.1, 0.3])
    with pytest.raises(ValueError):
        GraphPatch(x, np.linspace(0, 1, 3), np.zeros((3, 3)))


# -- meshes and discrete curvature ------------------------------------------


def test_extruded_reaper_mean_curvature():
    curve = solve_catenary(LIN1, 0.0, 1.2, tol=1e-11, n_samples=241)
    mesh = extrude_cylinder(curve, (-0.5, 0.5), 81)
    res = mean_curvature_residual(mesh, LIN1)
    assert np.nanmax(np.abs(res)) < 2e-3
    # the signed curvature itself is -1/W, bounded away from zero
    h = res + LIN1.dphi(mesh.vertices[:, 2]) * mesh.normals[:, 2]
    assert np.nanmax(h) < -0.25


def test_minimal_strip_mesh():
    curve = solve_catenary(LIN1, 0.0, 0.5, tol=1e-10, n_samples=41)
    mesh = extrude_cylinder(curve, (0.0, 0.1), 2)
    assert len(mesh.faces) == 2 * (curve.n_samples - 1)
    assert mesh.boundary_mask().all()


def test_extrude_rejects_degenerate_range():
    curve = solve_catenary(LIN1, 0.0, 0.5, tol=1e-10, n_samples=41)
    with pytest.raises(ValueError):
        extrude_cylinder(curve, (1.0, 1.0), 5)


def test_revolved_bowl_residual_and_orthogonality():
    bowl = solve_bowl(LIN1, 0.0, 4.0, tol=1e-10, n_samples=301)
    mesh = revolve(bowl, 128)
    res = mean_curvature_residual(mesh, LIN1)
    assert np.nanmax(np.abs(res)) < 5e-3
    # meridians meet parallels orthogonally: <psi_s, psi_t> ~ 0
    rings, nt = mesh.meta["rings"], mesh.meta["nt"]
    V = mesh.vertices[: rings * nt].reshape(rings, nt, 3)
    psi_s = V[2:, :, :] - V[:-2, :, :]
    psi_t = np.roll(V[1:-1], -1, axis=1) - np.roll(V[1:-1], 1, axis=1)
    dot = (psi_s * psi_t).sum(axis=2)
    norm = np.linalg.norm(psi_s, axis=2) * np.linalg.norm(psi_t, axis=2)
    assert np.max(np.abs(dot / norm)) < 1e-10


def test_revolve_coarse_and_negative_radius():
    bowl = solve_bowl(LIN1, 0.0, 1.0, tol=1e-8, n_samples=31)
    mesh = revolve(bowl, 3)
    assert mesh.n_vertices == 30 * 3 + 1  # axis fan vertex
    bad = ProfileCurve(s=np.array([0.0, 1.0]), x=np.array([-0.5, 1.0]),
                       z=np.zeros(2), theta=np.zeros(2),
                       curve_kind="catenoid_left", profile=LIN1,
                       initial_data={})
    with pytest.raises(ValueError):
        revolve(bad, 8)


def test_catenoid_mesh_is_annulus():
    right, left = solve_catenoid(LIN1, 1.0, 0.0, 3.0, tol=1e-9,
                                 n_samples=101)
    mesh = revolve(right, 40)
    edges = np.sort(np.concatenate([mesh.faces[:, [0, 1]],
                                    mesh.faces[:, [1, 2]],
                                    mesh.faces[:, [2, 0]]]), axis=1)
    n_edges = len(np.unique(edges, axis=0))
    chi = mesh.n_vertices - n_edges + len(mesh.faces)
    assert chi == 0


def test_round_cylinder_negative_control():
    mesh = round_cylinder_mesh(radius=1.0)
    res = mean_curvature_residual(mesh, LIN1)
    # |H| = 1/R and the weight term vanishes (horizontal normals)
    assert np.nanmin(np.abs(res)) > 0.5


def test_sphere_second_fundamental_norm():
    mesh = sphere_mesh(radius=2.0)
    s_norm, ratio = second_fundamental_norm(mesh, LIN1)
    good = ~np.isnan(s_norm)
    target = math.sqrt(2.0) / 2.0
    assert np.median(s_norm[good]) == pytest.approx(target, rel=2e-2)
    assert np.nanmax(ratio[good]) > 0


def test_plane_second_fundamental_norm_vanishes():
    n = 25
    x = y = np.linspace(-1, 1, n)
    patch = GraphPatch(x, y, 0.3 * np.repeat(x[:, None], n, axis=1) + 0.1)
    mesh = patch.to_mesh()
    s_norm, _ = second_fundamental_norm(mesh, LIN1)
    assert np.nanmax(s_norm) < 1e-9


def test_sphere_mean_curvature_control():
    mesh = sphere_mesh(radius=1.0)
    h = mean_curvature_residual(mesh, LIN1) \
        + LIN1.dphi(mesh.vertices[:, 2]) * mesh.normals[:, 2]
    # trace convention with outward normals: H = -2/R
    assert np.nanmedian(h) == pytest.approx(-2.0, rel=1e-2)


# -- tilted cylinders ---------------------------------------------------------


def test_tilt_zero_is_identity():
    curve = solve_catenary(LIN1, 0.0, 1.0, tol=1e-10, n_samples=101)
    base = extrude_cylinder(curve, (-1.0, 1.0), 100)
    tilted = tilt_cylinder(curve, 0.0, (-1.0, 1.0), 100)
    assert np.allclose(base.vertices, tilted.vertices, atol=1e-14)
    assert np.allclose(base.normals, tilted.normals, atol=1e-14)


def test_tilt_mean_curvature_scaling():
    theta = math.pi / 4
    curve = solve_catenary(LIN1, 0.0, 1.2, tol=1e-11, n_samples=201)
    base = extrude_cylinder(curve, (-0.8, 0.8), 161)
    tilted = tilt_cylinder(curve, theta, (-0.8, 0.8), 161)
    hvec_b = mean_curvature_residual(base, LIN1) \
        + LIN1.dphi(base.vertices[:, 2]) * base.normals[:, 2]
    hvec_t = mean_curvature_residual(tilted, LIN1) \
        + LIN1.dphi(tilted.vertices[:, 2]) * tilted.normals[:, 2]
    good = ~(np.isnan(hvec_b) | np.isnan(hvec_t))
    ratio = hvec_t[good] / hvec_b[good]
    assert np.max(np.abs(ratio - math.cos(theta))) < 0.02 * math.cos(theta)


def test_tilted_reaper_still_solves_equation():
    theta = math.pi / 4
    curve = solve_catenary(LIN1, 0.0, 1.2, tol=1e-11, n_samples=201)
    tilted = tilt_cylinder(curve, theta, (-0.8, 0.8), 161)
    res = mean_curvature_residual(tilted, LIN1)
    assert np.nanmax(np.abs(res)) < 2e-3


def test_tilt_rejects_bad_angle():
    curve = solve_catenary(LIN1, 0.0, 0.5, tol=1e-9, n_samples=41)
    with pytest.raises(ValueError):
        tilt_cylinder(curve, math.pi / 2)


# -- mesh validation and export ----------------------------------------------


def test_mesh_validates_normals():
    verts = np.zeros((3, 3))
    faces = np.array([[0, 1, 2]])
    with pytest.raises(ValueError):
        SurfaceMesh(verts, faces, np.full((3, 3), 0.5))


def test_mesh_validates_lorentz_normals():
    verts = np.zeros((3, 3))
    faces = np.array([[0, 1, 2]])
    n = np.repeat(np.array([[0.6, 0.0, math.sqrt(1.36)]]), 3, axis=0)
    mesh = SurfaceMesh(verts, faces, n, signature=LORENTZIAN)
    assert mesh.signature == LORENTZIAN
    with pytest.raises(ValueError):
        SurfaceMesh(verts, faces, np.repeat([[0.0, 0.0, 1.0]], 3, axis=0),
                    signature="other")


def test_obj_ply_export(tmp_path):
    curve = solve_catenary(LIN1, 0.0, 0.6, tol=1e-9, n_samples=31)
    mesh = extrude_cylinder(curve, (0.0, 0.5), 11)
    obj = tmp_path / "m.obj"
    ply = tmp_path / "m.ply"
    save_obj(mesh, obj, comments=["config_sha256: abc"])
    save_ply(mesh, ply, comments=["config_sha256: abc"])
    obj_text = obj.read_text()
    assert obj_text.count("\nv ") + obj_text.startswith("v ") \
        == mesh.n_vertices
    assert "# signature: euclidean" in obj_text
    assert "config_sha256: abc" in obj_text
    ply_lines = ply.read_text().splitlines()
    assert ply_lines[0] == "ply"
    assert f"element vertex {mesh.n_vertices}" in ply_lines
    # determinism: a second write is byte-identical
    obj2 = tmp_path / "m2.obj"
    save_obj(mesh, obj2, comments=["config_sha256: abc"])
    assert obj.read_bytes() == obj2.read_bytes()


def test_cylinder_patch_matches_curve():
    curve = solve_catenary(LIN1, 0.0, 1.3, tol=1e-11, n_samples=401)
    patch = cylinder_patch(curve, 1.0, 0.5, 81, 41)
    assert np.allclose(patch.u[:, 0], -np.log(np.cos(patch.x)), atol=1e-8)
    with pytest.raises(ValueError):
        cylinder_patch(curve, 2.0, 0.5, 11, 11)
