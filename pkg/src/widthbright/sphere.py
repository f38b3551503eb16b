"""Spherical quadrature grids, real spherical harmonics, and derivative jets.

Everything downstream integrates over an antipodally closed product grid
(Gauss-Legendre in cos(theta) times uniform azimuth). Basis functions are
orthonormal real spherical harmonics handled through their solid harmonic
forms: each Y_{l,m} restricted to the sphere extends to a homogeneous
harmonic polynomial R_{l,m}(x,y,z) of degree l, so values, Cartesian
gradients and Hessians are exact polynomial evaluations, never finite
differences. The degree-1 homogeneous extension of a coefficient field p is
p~(x) = |x| p(x/|x|) = sum_q c_q R_q(x) |x|^(1-l_q), and the tangential jet
of p at |u| = 1 comes from R alone:

    p(u)          = R(u)
    (grad p)_a    = e_a . dR(u)                      (e_a tangent, e_a.u = 0)
    (hess p)_ab   = e_a^T d2R(u) e_b - l R(u) delta_ab

which is the tangential part of d2p~(u) minus p(u) I.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from weakref import WeakKeyDictionary

import numpy as np
import sympy as sp

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi


# ---------------------------------------------------------------------------
# grid

@dataclass(eq=False)
class SphericalGrid:
    """Antipodally closed quadrature node set on the unit sphere.

    nodes[antipode_index[i]] == -nodes[i] holds bitwise, and the tangent
    frame at the antipode is (e1, -e2), so the frame change between u and -u
    is the constant matrix antipode_frame_flip = diag(1, -1).
    """

    n_theta: int
    n_phi: int
    nodes: np.ndarray            # (N, 3) unit vectors
    weights: np.ndarray          # (N,) positive, sum 4 pi
    antipode_index: np.ndarray   # (N,) involutive permutation
    frame: np.ndarray            # (N, 2, 3) orthonormal tangent pairs, e1 x e2 = u
    antipode_frame_flip: np.ndarray  # (2, 2)

    @property
    def n_nodes(self):
        return self.nodes.shape[0]


def _freeze(a):
    a.flags.writeable = False
    return a


@lru_cache(maxsize=None)
def make_grid(n_theta, n_phi):
    """Build the product grid with n_theta Gauss-Legendre rings and n_phi azimuths.

    n_phi must be even so that every node's antipode is again a node. Poles
    are never nodes (GL nodes are interior), so frames are well defined
    everywhere.
    """
    n_theta = int(n_theta)
    n_phi = int(n_phi)
    if n_theta < 2:
        raise ValueError("n_theta must be at least 2")
    if n_phi < 2 or n_phi % 2 != 0:
        raise ValueError("n_phi must be even and positive (antipodal closure)")

    ct, wt = np.polynomial.legendre.leggauss(n_theta)
    # symmetrize so ct[n-1-i] == -ct[i] bitwise; leggauss is only symmetric
    # to roundoff
    ct = 0.5 * (ct - ct[::-1])
    wt = 0.5 * (wt + wt[::-1])
    st = np.sqrt(1.0 - ct * ct)

    # second azimuth half by negation: cos(phi + pi) = -cos(phi) exactly
    half = n_phi // 2
    phi = TWO_PI * np.arange(half) / n_phi
    cp = np.concatenate([np.cos(phi), -np.cos(phi)])
    sg = np.concatenate([np.sin(phi), -np.sin(phi)])

    st_c = st[:, None]
    ct_c = ct[:, None]
    nodes = np.empty((n_theta, n_phi, 3))
    nodes[:, :, 0] = st_c * cp
    nodes[:, :, 1] = st_c * sg
    nodes[:, :, 2] = ct_c

    frame = np.empty((n_theta, n_phi, 2, 3))
    # e1 = d u / d theta, e2 = normalized d u / d phi
    frame[:, :, 0, 0] = ct_c * cp
    frame[:, :, 0, 1] = ct_c * sg
    frame[:, :, 0, 2] = -st_c
    frame[:, :, 1, 0] = -sg
    frame[:, :, 1, 1] = cp
    frame[:, :, 1, 2] = 0.0

    weights = np.broadcast_to(wt[:, None] * (TWO_PI / n_phi), (n_theta, n_phi))

    ii, jj = np.meshgrid(np.arange(n_theta), np.arange(n_phi), indexing="ij")
    anti = (n_theta - 1 - ii) * n_phi + (jj + half) % n_phi

    grid = SphericalGrid(
        n_theta=n_theta,
        n_phi=n_phi,
        nodes=_freeze(nodes.reshape(-1, 3)),
        weights=_freeze(np.ascontiguousarray(weights.reshape(-1))),
        antipode_index=_freeze(anti.reshape(-1)),
        frame=_freeze(frame.reshape(-1, 2, 3)),
        antipode_frame_flip=_freeze(np.diag([1.0, -1.0])),
    )
    return grid


def integrate(grid, f):
    """Quadrature sum(weights * f) over the grid nodes."""
    f = np.asarray(f, float)
    if f.shape != (grid.n_nodes,):
        raise ValueError("value sequence length does not match node count")
    return float(grid.weights @ f)


# ---------------------------------------------------------------------------
# real solid harmonics (exact monomial tables via sympy, generated once per l)

def _monomials(expr, syms):
    poly = sp.Poly(sp.expand(expr), *syms)
    exps = []
    coeffs = []
    for mono, coeff in poly.terms():
        exps.append(mono)
        coeffs.append(float(coeff))
    return np.array(exps, dtype=np.int64).reshape(len(exps), 3), np.array(coeffs)


@lru_cache(maxsize=None)
def _solid_harmonic(l, m):
    """Monomial table of the orthonormal real solid harmonic R_{l,m}.

    R_{l,m} is homogeneous of degree l and equals Y_{l,m} on |x| = 1, with
    the L2(S^2)-orthonormal normalization (Y_00 = 1/(2 sqrt(pi)), m > 0
    cosine sector, m < 0 sine sector, no Condon-Shortley sign).
    """
    x, y, z, t = sp.symbols("x y z t", real=True)
    am = abs(m)
    dP = sp.diff(sp.legendre(l, t), t, am)
    # homogenize: t^k -> z^k (x^2+y^2+z^2)^((l-am-k)/2); parity of dP makes
    # the exponent even
    r2 = x * x + y * y + z * z
    poly_t = sp.Poly(dP, t)
    body = sp.Integer(0)
    for (k,), c in poly_t.terms():
        body += c * z**k * r2 ** ((l - am - k) // 2)
    if m > 0:
        ang = sp.re(sp.expand((x + sp.I * y) ** am))
    elif m < 0:
        ang = sp.im(sp.expand((x + sp.I * y) ** am))
    else:
        ang = sp.Integer(1)
    norm = sp.sqrt(sp.Rational(2 * l + 1, 4) / sp.pi
                   * sp.factorial(l - am) / sp.factorial(l + am))
    if m != 0:
        norm = norm * sp.sqrt(2)
    return _monomials(norm * body * ang, (x, y, z))


def _diff_poly(exps, coeffs, axis):
    keep = exps[:, axis] > 0
    if not np.any(keep):
        return np.zeros((0, 3), dtype=np.int64), np.zeros(0)
    e = exps[keep].copy()
    c = coeffs[keep] * e[:, axis]
    e[:, axis] -= 1
    return e, c


@dataclass(eq=False)
class HarmonicBasis:
    """Real spherical harmonics up to degree lmax with exact derivative tables.

    Basis index q runs over (l, m) in lexicographic order, l ascending and
    m from -l to l, so q = l^2 + l + m.
    """

    lmax: int
    degrees: np.ndarray  # (B,)
    orders: np.ndarray   # (B,)
    _val: tuple          # per q: (exps, coeffs) of R_q
    _grad: tuple         # per q: 3 monomial tables (dR/dx, dR/dy, dR/dz)
    _hess: tuple         # per q: 6 tables (xx, xy, xz, yy, yz, zz)

    @property
    def size(self):
        return self.degrees.size


def basis_index(l, m):
    """Flat coefficient index of (l, m): l^2 + l + m."""
    if abs(m) > l:
        raise ValueError("|m| must not exceed l")
    return l * l + l + m


@lru_cache(maxsize=None)
def make_basis(lmax):
    lmax = int(lmax)
    if lmax < 0:
        raise ValueError("lmax must be nonnegative")
    degrees, orders, vals, grads, hesses = [], [], [], [], []
    for l in range(lmax + 1):
        for m in range(-l, l + 1):
            exps, coeffs = _solid_harmonic(l, m)
            g = tuple(_diff_poly(exps, coeffs, a) for a in range(3))
            h = tuple(_diff_poly(*g[a], b)
                      for a, b in ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)))
            degrees.append(l)
            orders.append(m)
            vals.append((exps, coeffs))
            grads.append(g)
            hesses.append(h)
    return HarmonicBasis(
        lmax=lmax,
        degrees=_freeze(np.array(degrees, dtype=np.int64)),
        orders=_freeze(np.array(orders, dtype=np.int64)),
        _val=tuple(vals),
        _grad=tuple(grads),
        _hess=tuple(hesses),
    )


def _power_table(v, nmax):
    # cumulative products keep (-v)^k == -(v^k) bitwise for odd k
    out = np.ones((v.size, nmax + 1))
    for k in range(1, nmax + 1):
        out[:, k] = out[:, k - 1] * v
    return out


def _eval_tables(polys, pts, nmax):
    pts = np.asarray(pts, float)
    px = _power_table(pts[:, 0], nmax)
    py = _power_table(pts[:, 1], nmax)
    pz = _power_table(pts[:, 2], nmax)
    out = np.empty((pts.shape[0], len(polys)))
    for q, (exps, coeffs) in enumerate(polys):
        if exps.shape[0] == 0:
            out[:, q] = 0.0
        else:
            out[:, q] = (px[:, exps[:, 0]] * py[:, exps[:, 1]]
                         * pz[:, exps[:, 2]]) @ coeffs
    return out


def basis_values(basis, pts):
    """Values of every basis function at the given unit points, shape (N, B)."""
    return _eval_tables(basis._val, np.atleast_2d(pts), basis.lmax)


def evaluate(basis, coeffs, pts):
    """Evaluate sum_q coeffs[q] Y_q at unit points."""
    coeffs = np.asarray(coeffs, float)
    if coeffs.shape != (basis.size,):
        raise ValueError("coefficient length does not match basis size")
    return basis_values(basis, pts) @ coeffs


def eval_homogeneous(basis, coeffs, xs):
    """The degree-1 homogeneous extension p~(x) = |x| p(x/|x|) at arbitrary x."""
    coeffs = np.asarray(coeffs, float)
    xs = np.atleast_2d(np.asarray(xs, float))
    r = np.linalg.norm(xs, axis=1)
    vals = _eval_tables(basis._val, xs, basis.lmax)
    # R_q is homogeneous of degree l_q, so p~ = sum c_q R_q(x) r^(1-l_q)
    scale = r[:, None] ** (1.0 - basis.degrees[None, :])
    return (vals * scale) @ coeffs


# ---------------------------------------------------------------------------
# jets

@dataclass(eq=False)
class Jet2:
    """Value, tangential gradient and tangential Hessian at a point, in a frame."""

    value: float
    grad: np.ndarray  # (2,)
    hess: np.ndarray  # (2, 2) symmetric


def _point_jet_arrays(basis, pts):
    nmax = basis.lmax
    vals = _eval_tables(basis._val, pts, nmax)
    grads = np.stack(
        [_eval_tables([g[a] for g in basis._grad], pts, nmax) for a in range(3)],
        axis=1,
    )  # (N, 3, B)
    hcomp = [_eval_tables([h[k] for h in basis._hess], pts, nmax) for k in range(6)]
    return vals, grads, hcomp


def jet(basis, coeffs, u, frame):
    """Jet2 of the coefficient field at unit vector u in the given tangent frame.

    grad and hess are the sphere-intrinsic gradient and Hessian: the
    tangential derivatives of the degree-1 homogeneous extension with the
    value part removed from the Hessian diagonal.
    """
    coeffs = np.asarray(coeffs, float)
    if coeffs.shape != (basis.size,):
        raise ValueError("coefficient length does not match basis size")
    u = np.asarray(u, float)
    frame = np.asarray(frame, float)
    vals, grads, hcomp = _point_jet_arrays(basis, u[None, :])
    value = float(vals[0] @ coeffs)
    g3 = grads[0] @ coeffs  # Cartesian gradient of the solid form, (3,)
    e1, e2 = frame[0], frame[1]
    grad = np.array([e1 @ g3, e2 @ g3])
    # assemble the symmetric 3x3 Hessian of the solid form
    hxx, hxy, hxz, hyy, hyz, hzz = (float(h[0] @ coeffs) for h in hcomp)
    H = np.array([[hxx, hxy, hxz], [hxy, hyy, hyz], [hxz, hyz, hzz]])
    lv = float(vals[0] @ (coeffs * basis.degrees))
    hess = np.array([
        [e1 @ H @ e1 - lv, e1 @ H @ e2],
        [e1 @ H @ e2, e2 @ H @ e2 - lv],
    ])
    return Jet2(value=value, grad=grad, hess=hess)


# ---------------------------------------------------------------------------
# per-(grid, basis) node tables

@dataclass(eq=False)
class NodeTables:
    """Per-node basis tables: values, boundary-point maps, and curvature forms.

    V[i, q]      = Y_q(u_i)
    PHI[i, :, q] = dR_q(u_i) + (1 - l_q) Y_q(u_i) u_i       (phi is PHI @ c)
    M[i, :, q]   = (m11, m12, m22) of Y_q I + hess Y_q in the node frame,
                   so the support matrix h I + hess h is M @ c per node.
    """

    V: np.ndarray    # (N, B)
    PHI: np.ndarray  # (N, 3, B)
    M: np.ndarray    # (N, 3, B)


_NODE_TABLES = WeakKeyDictionary()


def node_tables(grid, basis):
    per_grid = _NODE_TABLES.setdefault(grid, WeakKeyDictionary())
    tab = per_grid.get(basis)
    if tab is not None:
        return tab

    pts = grid.nodes
    vals, grads, hcomp = _point_jet_arrays(basis, pts)
    one_minus_l = (1.0 - basis.degrees)[None, :]

    phi = grads + one_minus_l[:, None, :] * vals[:, None, :] * pts[:, :, None]

    e1 = grid.frame[:, 0, :]
    e2 = grid.frame[:, 1, :]
    hxx, hxy, hxz, hyy, hyz, hzz = hcomp

    def quad_form(a, b):
        return (a[:, 0, None] * b[:, 0, None] * hxx
                + (a[:, 0, None] * b[:, 1, None] + a[:, 1, None] * b[:, 0, None]) * hxy
                + (a[:, 0, None] * b[:, 2, None] + a[:, 2, None] * b[:, 0, None]) * hxz
                + a[:, 1, None] * b[:, 1, None] * hyy
                + (a[:, 1, None] * b[:, 2, None] + a[:, 2, None] * b[:, 1, None]) * hyz
                + a[:, 2, None] * b[:, 2, None] * hzz)

    m = np.empty((pts.shape[0], 3, basis.size))
    m[:, 0, :] = quad_form(e1, e1) + one_minus_l * vals
    m[:, 1, :] = quad_form(e1, e2)
    m[:, 2, :] = quad_form(e2, e2) + one_minus_l * vals

    tab = NodeTables(V=_freeze(vals), PHI=_freeze(phi), M=_freeze(m))
    per_grid[basis] = tab
    return tab


def matrix_entries(grid, basis, coeffs):
    """Entries (m11, m12, m22) of h I + hess h at every node, shape (N, 3)."""
    coeffs = np.asarray(coeffs, float)
    return node_tables(grid, basis).M @ coeffs


def entries_det(e):
    """Determinant of symmetric 2x2 matrices given as (m11, m12, m22) rows."""
    return e[..., 0] * e[..., 2] - e[..., 1] * e[..., 1]


def entries_eigmin(e):
    """Least eigenvalue of symmetric 2x2 matrices given as entry rows."""
    mean = 0.5 * (e[..., 0] + e[..., 2])
    rad = np.hypot(0.5 * (e[..., 0] - e[..., 2]), e[..., 1])
    return mean - rad


def entries_eigmax(e):
    mean = 0.5 * (e[..., 0] + e[..., 2])
    rad = np.hypot(0.5 * (e[..., 0] - e[..., 2]), e[..., 1])
    return mean + rad
