"""Vectorised adaptive quadrature and bracketed root finding.

The adaptive engine splits an interval into panels until every panel's
Gauss-Kronrod (7, 15) error estimate is below a relative tolerance.  Panels
are processed in batches so each refinement round costs one vectorised call
of the integrand.  The resulting partition doubles as a lookup table for
cumulative integrals (see ``PanelTable``).
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteDensity, QuadratureFailure

# Gauss-Kronrod 7-15 abscissae and weights (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

K15_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
K15_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_G7_POS = np.array([1, 3, 5, 7, 9, 11, 13])
_G7_WEIGHTS = np.concatenate([_WG[:-1], _WG[::-1]])

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(20)

DEFAULT_RTOL = 1e-13
MAX_PANELS = 200_000


def quad_rtol() -> float:
    """Relative panel tolerance; ``OT_QUAD_TOL`` overrides the default."""
    env = os.environ.get("OT_QUAD_TOL")
    if env:
        return float(env)
    return DEFAULT_RTOL


def _check_finite(f: np.ndarray) -> None:
    if np.isnan(f).any() or np.isposinf(f).any():
        raise NonFiniteDensity("integrand returned NaN or +inf")


def adaptive_panels(func, breakpoints, rtol: float | None = None,
                    atol: float = 0.0, initial_pieces: int = 8,
                    max_panels: int = MAX_PANELS):
    """Partition ``[breakpoints[0], breakpoints[-1]]`` into accurate panels.

    ``func`` must accept a 2-D array and return an array of the same shape.
    Returns ``(edges, masses)`` with ``masses[i]`` the K15 integral over
    ``[edges[i], edges[i+1]]``.
    """
    rtol = quad_rtol() if rtol is None else rtol
    bp = np.unique(np.asarray(breakpoints, dtype=float))
    if bp.size < 2:
        raise ValueError("need at least two distinct breakpoints")
    frac = np.linspace(0.0, 1.0, initial_pieces + 1)
    starts = (bp[:-1, None] + np.diff(bp)[:, None] * frac[None, :-1]).ravel()
    ends = (bp[:-1, None] + np.diff(bp)[:, None] * frac[None, 1:]).ravel()

    acc_a, acc_b, acc_m = [], [], []
    total = 0
    while starts.size:
        half = 0.5 * (ends - starts)
        mid = 0.5 * (ends + starts)
        x = mid[:, None] + half[:, None] * K15_NODES[None, :]
        f = np.asarray(func(x), dtype=float)
        _check_finite(f)
        k15 = half * (f @ K15_WEIGHTS)
        g7 = half * (f[:, _G7_POS] @ _G7_WEIGHTS)
        err = np.abs(k15 - g7)
        ok = (err <= np.maximum(rtol * np.abs(k15), atol)) | (half <= 1e-15 * np.maximum(1.0, np.abs(mid)))
        acc_a.append(starts[ok])
        acc_b.append(ends[ok])
        acc_m.append(k15[ok])
        total += int(ok.sum())
        bad = ~ok
        if total + 2 * int(bad.sum()) > max_panels:
            raise QuadratureFailure(f"panel budget {max_panels} exceeded")
        s, e, m = starts[bad], ends[bad], mid[bad]
        starts = np.concatenate([s, m])
        ends = np.concatenate([m, e])

    a = np.concatenate(acc_a)
    b = np.concatenate(acc_b)
    mass = np.concatenate(acc_m)
    order = np.argsort(a, kind="stable")
    a, b, mass = a[order], b[order], mass[order]
    edges = np.append(a, b[-1])
    return edges, mass


def gl_integrate(func, a, b):
    """20-point Gauss-Legendre integral of ``func`` over each ``[a_i, b_i]``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[..., None] + half[..., None] * GL_NODES
    f = np.asarray(func(x), dtype=float)
    _check_finite(f)
    return half * (f @ GL_WEIGHTS)


@dataclass(frozen=True)
class PanelTable:
    """Cumulative masses of a non-negative integrand over an adaptive partition.

    Lower and upper cumulative sums are accumulated from opposite ends so that
    both tails keep full relative precision.
    """
    edges: np.ndarray
    mass: np.ndarray
    func: object

    @classmethod
    def build(cls, func, breakpoints, rtol=None):
        edges, mass = adaptive_panels(func, breakpoints, rtol=rtol)
        if (mass < 0).any():
            mass = np.maximum(mass, 0.0)
        return cls(edges=edges, mass=mass, func=func)

    def __post_init__(self):
        cum_lo = np.concatenate([[0.0], np.cumsum(self.mass)])
        cum_hi = np.concatenate([np.cumsum(self.mass[::-1])[::-1], [0.0]])
        object.__setattr__(self, "cum_lo", cum_lo)
        object.__setattr__(self, "cum_hi", cum_hi)
        object.__setattr__(self, "total", float(cum_lo[-1]))

    @property
    def lo(self) -> float:
        return float(self.edges[0])

    @property
    def hi(self) -> float:
        return float(self.edges[-1])

    def panel_index(self, x):
        k = np.searchsorted(self.edges, x, side="right") - 1
        return np.clip(k, 0, self.mass.size - 1)

    def lower(self, x):
        """Integral from the left end of the table up to ``x``."""
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self.lo, self.hi)
        k = self.panel_index(xc)
        part = gl_integrate(self.func, self.edges[k], xc)
        return self.cum_lo[k] + part

    def upper(self, x):
        """Integral from ``x`` up to the right end of the table."""
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self.lo, self.hi)
        k = self.panel_index(xc)
        part = gl_integrate(self.func, xc, self.edges[k + 1])
        return self.cum_hi[k + 1] + part

    def integrate(self, g, a=None, b=None):
        """Integral of ``g * func`` over ``[a, b]`` (default: whole table)."""
        a = self.lo if a is None else max(a, self.lo)
        b = self.hi if b is None else min(b, self.hi)
        if b <= a:
            return 0.0
        inner = self.edges[(self.edges > a) & (self.edges < b)]
        pts = np.concatenate([[a], inner, [b]])
        vals = gl_integrate(lambda x: g(x) * self.func(x), pts[:-1], pts[1:])
        return float(np.sum(vals))


def bracketed_newton(f, fprime, lo, hi, x0, xtol=4e-16, ftol=0.0, maxiter=100):
    """Solve ``f(x) = 0`` for increasing ``f`` on each bracket ``[lo_i, hi_i]``.

    Newton steps are taken when they stay strictly inside the current bracket,
    otherwise the bracket is bisected.  ``f`` and ``fprime`` receive the
    active subset of points together with their indices.  A point is done once
    ``|f| <= ftol`` or the step falls below ``xtol * |x|``.
    """
    x = np.array(x0, dtype=float, copy=True)
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    active = np.arange(x.size)
    for _ in range(maxiter):
        if active.size == 0:
            break
        xa = x[active]
        fx = f(xa, active)
        zero = np.abs(fx) <= ftol
        neg = fx < 0
        a[active] = np.where(neg, xa, a[active])
        b[active] = np.where(~neg & ~zero, xa, b[active])
        d = fprime(xa, active)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = xa - fx / d
        aa, bb = a[active], b[active]
        bad = ~np.isfinite(xn) | (xn <= aa) | (xn >= bb)
        xn = np.where(bad, 0.5 * (aa + bb), xn)
        xn = np.where(zero, xa, xn)
        tol = xtol * np.maximum(np.abs(xn), 1e-300)
        done = zero | (np.abs(xn - xa) <= tol) | ((bb - aa) <= tol)
        x[active] = xn
        active = active[~done]
    return x
