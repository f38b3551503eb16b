"""Inverse Gauss map, curvature determinant field, and boundary meshing.

phi(u) = h(u) u + grad h(u) sends an outward unit normal to the boundary
point where it is attained; its tangential derivative is h I + hess h, whose
determinant is the curvature determinant integrated by the brightness
formula. The mesh built here is the input of the independent shadow oracle,
so it deliberately shares nothing with the cosine-transform path beyond phi
itself.
"""

from dataclasses import dataclass

import numpy as np

from .sphere import node_tables, entries_det, entries_eigmin, _point_jet_arrays
from .body import certify_convex, NotConvexError

_DEGENERATE_AREA = 1e-14


@dataclass(eq=False)
class BoundaryField:
    """phi and det(h I + hess h) sampled at the grid nodes.

    pole_points holds phi at the north and south poles (the grid itself has
    no pole nodes); min_eigenvalue carries the convexity certificate value
    so mesh export can refuse non-convex sources.
    """

    phi: np.ndarray        # (N, 3)
    detfield: np.ndarray   # (N,)
    min_eigenvalue: float
    pole_points: np.ndarray  # (2, 3): north (+e3), south (-e3)
    source_label: str = ""


@dataclass(eq=False)
class BodyMesh:
    vertices: np.ndarray   # (M, 3)
    triangles: np.ndarray  # (T, 3) int, outward oriented
    source_label: str = ""


def _phi_at(h, pts):
    """phi = h u + grad h at arbitrary unit points via the solid basis."""
    basis = h.basis
    pts = np.atleast_2d(np.asarray(pts, float))
    vals, grads, _ = _point_jet_arrays(basis, pts)
    one_minus_l = (1.0 - basis.degrees)[None, :]
    phi_tab = grads + one_minus_l[:, None, :] * vals[:, None, :] * pts[:, :, None]
    return phi_tab @ h.coeffs


def inverse_gauss(h, grid):
    """Boundary field of h: phi, curvature determinant, PSD margin, poles."""
    tab = node_tables(grid, h.basis)
    ent = tab.M @ h.coeffs
    poles = _phi_at(h, np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]))
    return BoundaryField(
        phi=tab.PHI @ h.coeffs,
        detfield=entries_det(ent),
        min_eigenvalue=float(entries_eigmin(ent).min()),
        pole_points=poles,
        source_label=h.label,
    )


def even_phi_check(p, grid):
    """Max |phi_p(u) - phi_p(-u)| over nodes; must vanish for odd p.

    Rejects input with a nonzero even part, since the identity is a parity
    statement about odd functions only.
    """
    even = p.basis.degrees % 2 == 0
    if np.any(p.coeffs[even] != 0.0):
        raise ValueError("even_phi_check needs an odd support function "
                         "(all even-degree coefficients zero)")
    phi = inverse_gauss(p, grid).phi
    return float(np.abs(phi - phi[grid.antipode_index]).max())


def export_mesh(field, grid, tol_psd=1e-9):
    """Triangulate the phi image: lattice quads plus two pole fans.

    Vertices are the per-node phi values followed by the north and south
    pole points. Refuses non-convex sources (the lattice would
    self-intersect); reports degenerate (collapsed) triangles.
    """
    if field.min_eigenvalue < -tol_psd:
        raise NotConvexError(
            "mesh export needs a convex source (min eigenvalue %.3e)"
            % field.min_eigenvalue)
    nt, npx = grid.n_theta, grid.n_phi
    verts = np.vstack([field.phi, field.pole_points])
    i_north = nt * npx
    i_south = nt * npx + 1

    def node(i, j):
        return i * npx + j % npx

    tris = []
    # node ring i=0 is the southernmost (cos theta ascending)
    for i in range(nt - 1):
        for j in range(npx):
            a = node(i, j)
            b = node(i, j + 1)
            c = node(i + 1, j + 1)
            d = node(i + 1, j)
            tris.append((a, b, c))
            tris.append((a, c, d))
    for j in range(npx):
        tris.append((i_south, node(0, j + 1), node(0, j)))
        tris.append((i_north, node(nt - 1, j), node(nt - 1, j + 1)))
    tris = np.array(tris, dtype=np.int64)

    v0 = verts[tris[:, 0]]
    cross = np.cross(verts[tris[:, 1]] - v0, verts[tris[:, 2]] - v0)
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    n_degenerate = int(np.count_nonzero(areas < _DEGENERATE_AREA))
    if n_degenerate:
        raise ValueError("%d degenerate (collapsed) triangles in phi image"
                         % n_degenerate)
    return BodyMesh(vertices=verts, triangles=tris,
                    source_label=field.source_label)


def mesh_volume(mesh):
    """Signed volume by the divergence theorem, sum det(v0, v1, v2)/6."""
    v = mesh.vertices
    t = mesh.triangles
    return float(np.einsum("ij,ij->i", v[t[:, 0]],
                           np.cross(v[t[:, 1]], v[t[:, 2]])).sum() / 6.0)


def mesh_is_closed(mesh):
    """True when every edge is shared by exactly two triangles, once per direction."""
    edges = {}
    for tri in mesh.triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            edges[(int(a), int(b))] = edges.get((int(a), int(b)), 0) + 1
    if any(n != 1 for n in edges.values()):
        return False
    return all((b, a) in edges for (a, b) in edges)


def export_obj(mesh, path):
    """Write Wavefront OBJ: 'v x y z' lines then 1-based 'f i j k' lines."""
    lines = []
    for v in mesh.vertices:
        lines.append("v %.17g %.17g %.17g" % (v[0], v[1], v[2]))
    for t in mesh.triangles:
        lines.append("f %d %d %d" % (t[0] + 1, t[1] + 1, t[2] + 1))
    with open(path, "w") as f:
        f.write("\n".join(lines))
        f.write("\n")
