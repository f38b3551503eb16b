"""Support functions of convex bodies and their width/symmetral/sum algebra.

A body is stored as real spherical-harmonic coefficients of its support
function h(u) = max_{y in K} <y, u>. Parity does all the work here: the even
part of h is the central symmetral (same width function, centrally
symmetric), the odd part is the asymmetry, and Minkowski sum is coefficient
addition. Convexity is certified by the least eigenvalue of the support
matrix h I + hess h over the grid, whose determinant is the reciprocal
Gauss curvature at the boundary point with outward normal u.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .sphere import (
    make_basis, make_grid, integrate, evaluate,
    node_tables, matrix_entries, entries_det, entries_eigmin,
)

TOL_PSD = 1e-9


class NotConvexError(RuntimeError):
    """Raised when an operation that needs a certified convex body gets none."""


@dataclass(eq=False)
class SupportFunction:
    """Harmonic coefficients of a support function, plus provenance.

    coeffs follows the (l, m) lexicographic order of the basis, l ascending,
    m from -l to l. closed_form is an optional evaluator tag ("ball:r" or
    "ellipsoid:a,b,c") for bodies with an exact formula; truncation_tol
    records how far the stored coefficients deviate from that formula on the
    grid they were fitted on.
    """

    coeffs: np.ndarray
    lmax: int
    closed_form: str = None
    label: str = ""
    truncation_tol: float = 0.0

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, float)
        if self.coeffs.shape != ((self.lmax + 1) ** 2,):
            raise ValueError("coefficient length does not match lmax")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("support function coefficients must be finite")

    @property
    def basis(self):
        return make_basis(self.lmax)

    def values(self, pts):
        return evaluate(self.basis, self.coeffs, pts)


@dataclass(eq=False)
class ConvexityCertificate:
    """Grid minimum of the support-matrix eigenvalues and determinant."""

    min_eigenvalue: float
    det_min: float
    node_of_min: int
    convex: bool
    tol_psd: float = TOL_PSD


def closed_form_values(tag, pts):
    """Evaluate a closed-form support function tag at unit points."""
    pts = np.atleast_2d(np.asarray(pts, float))
    kind, _, args = tag.partition(":")
    params = [float(s) for s in args.split(",")] if args else []
    if kind == "ball":
        (r,) = params
        return np.full(pts.shape[0], r)
    if kind == "ellipsoid":
        a, b, c = params
        return np.sqrt((a * pts[:, 0]) ** 2 + (b * pts[:, 1]) ** 2
                       + (c * pts[:, 2]) ** 2)
    raise ValueError("unknown closed form tag: %r" % tag)


def support_values(h, grid):
    """h at every grid node."""
    return node_tables(grid, h.basis).V @ h.coeffs


def width(h, grid):
    """Width function w(u) = h(u) + h(-u) at every node, via antipode_index."""
    vals = support_values(h, grid)
    return vals + vals[grid.antipode_index]


def _parity_filtered(h, keep_odd):
    mask = (h.basis.degrees % 2 == 1) == keep_odd
    coeffs = np.where(mask, h.coeffs, 0.0)
    dropped = np.where(~mask, h.coeffs, 0.0)
    tag = h.closed_form if not np.any(dropped != 0.0) else None
    return coeffs, tag


def central_symmetral(h):
    """Even part of h: the support function of the central symmetral."""
    coeffs, tag = _parity_filtered(h, keep_odd=False)
    return SupportFunction(coeffs, h.lmax, closed_form=tag,
                           label="sym(%s)" % h.label if h.label else "",
                           truncation_tol=h.truncation_tol if tag else 0.0)


def odd_part(h):
    """Odd part of h: what central symmetrization removes."""
    coeffs, tag = _parity_filtered(h, keep_odd=True)
    return SupportFunction(coeffs, h.lmax, closed_form=None,
                           label="odd(%s)" % h.label if h.label else "")


def _padded(coeffs, lmax_from, lmax_to):
    out = np.zeros((lmax_to + 1) ** 2)
    out[:(lmax_from + 1) ** 2] = coeffs
    return out


def minkowski_sum(h1, h2):
    """Support function of the Minkowski sum: coefficientwise addition."""
    lmax = max(h1.lmax, h2.lmax)
    coeffs = _padded(h1.coeffs, h1.lmax, lmax) + _padded(h2.coeffs, h2.lmax, lmax)
    tag = None
    if (h1.closed_form or "").startswith("ball:") and \
       (h2.closed_form or "").startswith("ball:"):
        r = float(h1.closed_form[5:]) + float(h2.closed_form[5:])
        tag = "ball:%r" % r
    label = "+".join(s for s in (h1.label, h2.label) if s)
    return SupportFunction(coeffs, lmax, closed_form=tag, label=label)


def scale(h, factor):
    """Homothety lambda K: coefficients scale linearly."""
    tag = None
    if (h.closed_form or "").startswith("ball:") and factor > 0:
        tag = "ball:%r" % (factor * float(h.closed_form[5:]))
    return SupportFunction(factor * h.coeffs, h.lmax, closed_form=tag,
                           label=h.label)


def certify_convex(h, grid, tol_psd=TOL_PSD):
    """Certificate from the support matrix h I + hess h at every node.

    Convex iff the global minimum eigenvalue is >= -tol_psd. The minimum
    determinant is recorded too (it lower-bounds reciprocal Gauss
    curvature, which Minkowski summands can only increase).
    """
    ent = matrix_entries(grid, h.basis, h.coeffs)
    eigmin = entries_eigmin(ent)
    dets = entries_det(ent)
    i = int(np.argmin(eigmin))
    return ConvexityCertificate(
        min_eigenvalue=float(eigmin[i]),
        det_min=float(dets.min()),
        node_of_min=i,
        convex=bool(eigmin[i] >= -tol_psd),
        tol_psd=tol_psd,
    )


def volume(h, grid, tol_psd=TOL_PSD):
    """Body volume (1/3) int h det(h I + hess h) dS. Refuses non-convex input."""
    cert = certify_convex(h, grid, tol_psd)
    if not cert.convex:
        raise NotConvexError(
            "volume needs a certified convex body "
            "(min eigenvalue %.3e)" % cert.min_eigenvalue)
    ent = matrix_entries(grid, h.basis, h.coeffs)
    vals = support_values(h, grid)
    return integrate(grid, vals * entries_det(ent)) / 3.0


def homothety_fit(h1, h2, grid):
    """Weighted least-squares fit h1(u) ~ lambda h2(u) + <v, u>.

    Returns (lambda, v, residual) where residual is the weighted RMS misfit.
    Degree-1 terms absorb translations, so residual ~ 0 means h1 is
    homothetic to h2.
    """
    v1 = support_values(h1, grid)
    v2 = support_values(h2, grid)
    if np.max(np.abs(v2)) < 1e-14:
        raise ValueError("homothety_fit against the zero body is degenerate")
    sw = np.sqrt(grid.weights)
    A = np.column_stack([v2, grid.nodes[:, 0], grid.nodes[:, 1],
                         grid.nodes[:, 2]]) * sw[:, None]
    sol, *_ = np.linalg.lstsq(A, v1 * sw, rcond=None)
    misfit = v1 - (sol[0] * v2 + grid.nodes @ sol[1:])
    residual = math.sqrt(integrate(grid, misfit * misfit) / (4.0 * math.pi))
    return float(sol[0]), sol[1:], residual


# ---------------------------------------------------------------------------
# body-spec JSON

def body_to_spec(h):
    spec = {
        "basis": "real-sph-harm",
        "lmax": int(h.lmax),
        "coeffs": [float(c) for c in h.coeffs],
        "label": h.label,
    }
    if h.closed_form is not None:
        spec["closed_form"] = h.closed_form
        spec["truncation_tol"] = float(h.truncation_tol)
    return spec


def body_from_spec(spec):
    if not isinstance(spec, dict):
        raise ValueError("body spec must be a JSON object")
    if spec.get("basis") != "real-sph-harm":
        raise ValueError("unsupported basis tag: %r" % spec.get("basis"))
    try:
        lmax = int(spec["lmax"])
        coeffs = np.asarray(spec["coeffs"], float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError("malformed body spec: %s" % exc) from None
    h = SupportFunction(
        coeffs, lmax,
        closed_form=spec.get("closed_form"),
        label=spec.get("label", ""),
        truncation_tol=float(spec.get("truncation_tol", 0.0)),
    )
    if h.closed_form is not None:
        grid = make_grid(16, 32)
        dev = np.abs(support_values(h, grid)
                     - closed_form_values(h.closed_form, grid.nodes)).max()
        if dev > 2.0 * h.truncation_tol + 1e-8:
            raise ValueError(
                "closed_form %r disagrees with coefficients "
                "(max deviation %.3g)" % (h.closed_form, dev))
    return h


def save_body(h, path):
    with open(path, "w") as f:
        json.dump(body_to_spec(h), f, indent=2, sort_keys=True)
        f.write("\n")


def load_body(path):
    with open(path) as f:
        try:
            spec = json.load(f)
        except json.JSONDecodeError as exc:
            raise ValueError("not valid JSON: %s" % exc) from None
    return body_from_spec(spec)
