"""Determinant identities behind the width/brightness rigidity, and a
brightness-variance minimizer probing it.

The algebra all happens on symmetric 2x2 support matrices M_f = f I + hess f
in the node frames. sigma is the polarization of det, so with h = h0 + p,

    det M_h = det M_p + 2 sigma(M_p, M_h0) + det M_h0,

det M_p is even, sigma(M_p, M_h0) is odd, and the cosine transform of the
curvature determinant turns this into the proportional-brightness relation.
The sign obstruction (for odd p, det M_p cannot be negative everywhere) is
what makes constant width + constant brightness rigid; the optimizer checks
the rigidity numerically by descending the brightness variance of
constant-width bodies gauge + p back to the gauge.
"""

import math
from dataclasses import dataclass
from weakref import WeakKeyDictionary

import numpy as np

from .sphere import make_basis, basis_index, node_tables, matrix_entries, \
    entries_det, entries_eigmin
from .body import SupportFunction, certify_convex, NotConvexError
from .brightness import _cosine_operator

_FD_STEP = 1e-5
_MIN_EIG_FLOOR = 0.01
_NORM_TOL = 1e-3
_VAR_TOL = 1e-10
_MAX_BACKTRACK = 60


# ---------------------------------------------------------------------------
# determinant algebra

def sigma_form(A, B):
    """Polarization of det on symmetric 2x2 matrices:
    sigma(A, B) = (tr A tr B - tr(AB)) / 2, so sigma(A, A) = det A."""
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    for M in (A, B):
        if M.shape != (2, 2) or abs(M[0, 1] - M[1, 0]) > 1e-12:
            raise ValueError("sigma_form needs symmetric 2x2 inputs")
    return 0.5 * (np.trace(A) * np.trace(B) - np.trace(A @ B))


def _sigma_entries(a, b):
    # entry-row form (m11, m12, m22); same reduction as sigma_form
    return 0.5 * (a[..., 0] * b[..., 2] + a[..., 2] * b[..., 0]) \
        - a[..., 1] * b[..., 1]


@dataclass(eq=False)
class ParityReport:
    """Parity and decomposition diagnostics of det(h I + hess h)."""

    max_odd_violation_sigma: float
    max_even_violation_det_p: float
    identity_residual: np.ndarray  # (N,)

    def __post_init__(self):
        ok = (math.isfinite(self.max_odd_violation_sigma)
              and self.max_odd_violation_sigma >= 0.0
              and math.isfinite(self.max_even_violation_det_p)
              and self.max_even_violation_det_p >= 0.0
              and np.all(np.isfinite(self.identity_residual)))
        if not ok:
            raise ValueError("parity report fields must be finite and nonnegative")


def parity_report_to_json(report):
    return {
        "max_odd_violation_sigma": float(report.max_odd_violation_sigma),
        "max_even_violation_det_p": float(report.max_even_violation_det_p),
        "identity_residual_max": float(np.abs(report.identity_residual).max()),
        "identity_residual": [float(r) for r in report.identity_residual],
    }


def _split_entries(h, grid):
    basis = h.basis
    c_even = np.where(basis.degrees % 2 == 0, h.coeffs, 0.0)
    c_odd = h.coeffs - c_even
    M = node_tables(grid, basis).M
    return M @ h.coeffs, M @ c_even, M @ c_odd


def parity_decomposition_check(h, grid):
    """Check det M_h = det M_p + 2 sigma(M_p, M_h0) + det M_h0 nodewise,
    plus the parity of the two cross terms (det M_p even, sigma odd)."""
    cert = certify_convex(h, grid)
    if not cert.convex:
        raise NotConvexError("parity check needs a certified convex body")
    eh, e0, ep = _split_entries(h, grid)
    Dh = entries_det(eh)
    D0 = entries_det(e0)
    Dp = entries_det(ep)
    S = _sigma_entries(ep, e0)
    anti = grid.antipode_index
    return ParityReport(
        max_odd_violation_sigma=float(np.abs(S + S[anti]).max()),
        max_even_violation_det_p=float(np.abs(Dp - Dp[anti]).max()),
        identity_residual=Dh - (Dp + 2.0 * S + D0),
    )


def det_p_identity_residual(h, beta, grid):
    """Residual R(u) = det M_p + (1 - beta) det M_h0 per node.

    Constant brightness relative to the symmetral would force R to vanish;
    the sign obstruction says that is impossible for non-ball bodies, so R
    measures how far the constant-brightness condition fails.
    """
    cert = certify_convex(h, grid)
    if not cert.convex:
        raise NotConvexError("det-p identity needs a certified convex body")
    _, e0, ep = _split_entries(h, grid)
    return entries_det(ep) + (1.0 - beta) * entries_det(e0)


def odd_sign_obstruction(p, grid):
    """(max, min) over nodes of det(p I + hess p) for odd p.

    The rigidity argument forbids det < 0 everywhere, so max_det >= 0 up to
    discretization for every odd p.
    """
    even = p.basis.degrees % 2 == 0
    if np.any(p.coeffs[even] != 0.0):
        raise ValueError("odd_sign_obstruction needs an odd support function")
    dets = entries_det(matrix_entries(grid, p.basis, p.coeffs))
    return float(dets.max()), float(dets.min())


# ---------------------------------------------------------------------------
# brightness-variance descent over constant-width bodies

@dataclass(eq=False)
class OptimizerTrace:
    """Row per accepted state: (coeff_norm, variance, min_eig, step)."""

    iterations: list
    terminal_status: str  # converged_to_gauge | stalled | infeasible
    degrees: tuple
    final_coeffs: np.ndarray  # variable-space odd coefficients
    gauge_label: str = ""


def trace_to_csv(trace, path):
    lines = ["iter,coeff_norm,variance,min_eig,step"]
    for k, (cn, var, eig, step) in enumerate(trace.iterations):
        lines.append("%d,%.17g,%.17g,%.17g,%.17g" % (k, cn, var, eig, step))
    with open(path, "w") as f:
        f.write("\n".join(lines))
        f.write("\n")


def _variable_indices(basis, degrees):
    idx = []
    for l in degrees:
        for m in range(-l, l + 1):
            idx.append(basis_index(l, m))
    return np.array(idx, dtype=np.int64)


_GAUGE_TABLES = WeakKeyDictionary()


def _gauge_tables(gauge, grid, degrees):
    """Quadratic-in-c model of the relative brightness profile.

    brightness areas of gauge + p_c are exactly quadratic in the odd
    coefficients c because the curvature determinant is: per node,
    det(M0 + sum c_j Mj) = det M0 + 2 sigma(M0, Mj) c_j + sigma(Mj, Mk) c_j c_k,
    and the cosine transform is linear. The tables push that through the
    transform once, so objective evaluations cost O(N nv^2).
    """
    per_gauge = _GAUGE_TABLES.setdefault(gauge, {})
    key = (id(grid), tuple(degrees))
    tab = per_gauge.get(key)
    if tab is not None:
        return tab

    lmax = max(gauge.lmax, max(degrees))
    basis = make_basis(lmax)
    idx = _variable_indices(basis, degrees)
    cg = np.zeros(basis.size)
    cg[:gauge.coeffs.size] = gauge.coeffs

    M = node_tables(grid, basis).M
    M0 = M @ cg                   # (N, 3)
    MJ = M[:, :, idx]             # (N, 3, nv)
    d0 = entries_det(M0)
    lin = (M0[:, 0, None] * MJ[:, 2, :] + M0[:, 2, None] * MJ[:, 0, :]
           - 2.0 * M0[:, 1, None] * MJ[:, 1, :])          # 2 sigma(M0, Mj)
    quad = 0.5 * (np.einsum("nj,nk->njk", MJ[:, 0, :], MJ[:, 2, :])
                  + np.einsum("nj,nk->njk", MJ[:, 2, :], MJ[:, 0, :])) \
        - np.einsum("nj,nk->njk", MJ[:, 1, :], MJ[:, 1, :])  # sigma(Mj, Mk)

    O = _cosine_operator(grid)
    n, nv = lin.shape
    b0 = 0.5 * (O @ d0)           # gauge brightness areas
    if np.any(b0 <= 0.0):
        raise NotConvexError("gauge brightness must be positive")
    BL = 0.5 * (O @ lin)
    BQ = (0.5 * (O @ quad.reshape(n, nv * nv))).reshape(n, nv, nv)
    # relative-brightness form: r(c) = areas(c)/areas_gauge = 1 + RL c + c RQ c
    RL = BL / b0[:, None]
    RQ = BQ / b0[:, None, None]
    wn = grid.weights / (4.0 * math.pi)
    tab = (idx, cg, basis, M0, MJ, RL, RQ.reshape(n, nv * nv), wn)
    per_gauge[key] = tab
    return tab


def _variance(RL, RQflat, wn, c):
    r = RL @ c + RQflat @ np.outer(c, c).ravel()  # r(c) - 1
    mean = wn @ r
    d = r - mean
    return float(wn @ (d * d))


def _feasible(M0, MJ, c, floor):
    ent = M0 + MJ @ c
    return float(entries_eigmin(ent).min()) >= floor


def _min_eig(M0, MJ, c):
    return float(entries_eigmin(M0 + MJ @ c).min())


def minimize_brightness_variance(gauge, init_odd, grid, degrees=(3, 5),
                                 max_iter=500, fd_step=_FD_STEP,
                                 min_eig_floor=_MIN_EIG_FLOOR,
                                 norm_tol=_NORM_TOL, var_tol=_VAR_TOL):
    """Descend F(c) = weighted variance of brightness(gauge + p_c)/brightness(gauge).

    Variables are the odd coefficients of the given degrees (degree 1 is
    excluded: it is a pure translation). Gradient by central differences
    (step fd_step), Barzilai-Borwein step seeding, monotone backtracking,
    and projection to the convexity region by step halving (min eigenvalue
    of the support matrix kept at or above min_eig_floor). Terminal states:
    converged_to_gauge (||c|| < norm_tol and F < var_tol), stalled,
    infeasible (init outside the convexity region).
    """
    if any(int(d) % 2 == 0 or int(d) < 3 for d in degrees):
        raise ValueError("variable degrees must be odd and >= 3")
    cert = certify_convex(gauge, grid)
    if not cert.convex or cert.min_eigenvalue <= min_eig_floor:
        raise ValueError("gauge must be certified convex with margin above the floor")
    if np.any(gauge.coeffs[gauge.basis.degrees % 2 == 1] != 0.0):
        raise ValueError("gauge must be even")

    idx, cg, basis, M0, MJ, RL, RQflat, wn = _gauge_tables(gauge, grid, degrees)

    if isinstance(init_odd, SupportFunction):
        full = np.zeros(basis.size)
        full[:init_odd.coeffs.size] = init_odd.coeffs
        c = full[idx].copy()
        full[idx] = 0.0
        if np.any(full != 0.0):
            raise ValueError("init_odd has support outside the variable degrees")
    else:
        c = np.asarray(init_odd, float).copy()
        if c.shape != (idx.size,):
            raise ValueError("init_odd length does not match the variable count")

    def F(cv):
        return _variance(RL, RQflat, wn, cv)

    def grad(cv):
        g = np.empty(cv.size)
        for j in range(cv.size):
            e = np.zeros(cv.size)
            e[j] = fd_step
            g[j] = (F(cv + e) - F(cv - e)) / (2.0 * fd_step)
        return g

    trace = []
    if not _feasible(M0, MJ, c, min_eig_floor):
        return OptimizerTrace(iterations=trace, terminal_status="infeasible",
                              degrees=tuple(degrees), final_coeffs=c,
                              gauge_label=gauge.label)

    Fc = F(c)
    trace.append((float(np.linalg.norm(c)), Fc, _min_eig(M0, MJ, c), 0.0))
    status = "stalled"
    g_prev = None
    s_prev = None
    alpha = None

    for _ in range(max_iter):
        if np.linalg.norm(c) < norm_tol and Fc < var_tol:
            status = "converged_to_gauge"
            break
        g = grad(c)
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            break
        if s_prev is not None:
            sy = float(s_prev @ (g - g_prev))
            if sy > 0.0:
                alpha = float(s_prev @ s_prev) / sy
            else:
                alpha *= 2.0
        if alpha is None:
            # first step: conservative scale from the gradient itself
            alpha = min(1.0, 0.1 * max(np.linalg.norm(c), norm_tol) / gn)
        step = alpha
        accepted = False
        for _ in range(_MAX_BACKTRACK):
            c_try = c - step * g
            if _feasible(M0, MJ, c_try, min_eig_floor):
                F_try = F(c_try)
                if F_try <= Fc:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            break
        s_prev = c_try - c
        g_prev = g
        c = c_try
        Fc = F_try
        trace.append((float(np.linalg.norm(c)), Fc, _min_eig(M0, MJ, c), step))
    else:
        status = "stalled"

    if np.linalg.norm(c) < norm_tol and Fc < var_tol:
        status = "converged_to_gauge"

    return OptimizerTrace(iterations=trace, terminal_status=status,
                          degrees=tuple(degrees), final_coeffs=c,
                          gauge_label=gauge.label)


def trace_body(gauge, trace):
    """SupportFunction of gauge + final odd coefficients of a trace."""
    lmax = max(gauge.lmax, max(trace.degrees))
    basis = make_basis(lmax)
    coeffs = np.zeros(basis.size)
    coeffs[:gauge.coeffs.size] = gauge.coeffs
    coeffs[_variable_indices(basis, trace.degrees)] += trace.final_coeffs
    return SupportFunction(coeffs, lmax, label="optimized(%s)" % gauge.label)
