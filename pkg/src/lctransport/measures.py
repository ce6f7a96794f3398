"""Convex potentials, bounded perturbations and the 1-D measures they define.

A ``WeightedMeasure1D`` has density

    exp(c - V(t) - q(t)) * t**k

on an interval, where ``k`` is the Jacobian power (``n - 1`` for radial
reductions).  Integrals are computed once into an adaptive panel table that
serves CDF, tail and expectation queries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import InvalidDeclaration, NonIntegrable
from .quadrature import PanelTable, bracketed_newton, gl_integrate

Func = Callable[[np.ndarray], np.ndarray]

# log-density drop (relative to the mode) at which the table is cut;
# exp(-700) keeps far-tail CDF values representable while the neglected
# mass is far below 1e-14.
TAIL_LOG_DROP = 700.0
DECLARATION_TOL = 1e-6


def _fd_second(f, x, h):
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


@dataclass(frozen=True)
class Potential:
    """Convex potential with declared Hessian bounds ``lambda_lo <= V'' <= lambda_hi``.

    ``value``/``deriv``/``second_deriv`` must accept numpy arrays.  When
    ``finite_support`` is set the potential is +inf outside it.
    """
    value: Func
    deriv: Func
    second_deriv: Optional[Func] = None
    lambda_lo: float = 0.0
    lambda_hi: float = math.inf
    argmin: float = 0.0
    finite_support: Optional[tuple] = None
    name: str = "custom"
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if self.lambda_lo < 0 or not self.lambda_hi > 0:
            raise InvalidDeclaration("need lambda_lo >= 0 and lambda_hi > 0")
        if self.lambda_lo > self.lambda_hi:
            raise InvalidDeclaration(f"lambda_lo={self.lambda_lo} exceeds lambda_hi={self.lambda_hi}")
        if self.finite_support is not None:
            a, b = self.finite_support
            if not a < b:
                raise InvalidDeclaration("finite_support must be a non-empty interval")
        if self.check:
            self.verify_declaration()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        v = self.value(x)
        if self.finite_support is not None:
            a, b = self.finite_support
            v = np.where((x < a) | (x > b), np.inf, v)
        return v

    def sample_grid(self, num: int = 1000) -> np.ndarray:
        width = 5.0 / math.sqrt(self.lambda_lo) if self.lambda_lo > 0 else 10.0
        a, b = self.argmin - width, self.argmin + width
        if self.finite_support is not None:
            a = max(a, self.finite_support[0])
            b = min(b, self.finite_support[1])
        return np.linspace(a, b, num)

    def verify_declaration(self, num: int = 1000, tol: float = DECLARATION_TOL) -> None:
        """Spot-check curvature bounds and the minimiser on a ``num``-point grid."""
        x = self.sample_grid(num)
        v = self.value(x)
        if self.second_deriv is not None:
            d2 = self.second_deriv(x)
            noise = 0.0
        else:
            h = 1e-3
            inner = x[1:-1]
            d2 = _fd_second(self.value, inner, h)
            noise = 8 * np.finfo(float).eps * np.max(np.abs(v)) / h**2
        scale = max(1.0, self.lambda_hi if math.isfinite(self.lambda_hi) else 1.0)
        slack = tol * scale + noise
        if np.min(d2) < self.lambda_lo - slack:
            raise InvalidDeclaration(
                f"{self.name}: V'' reaches {np.min(d2):.6g} < lambda_lo={self.lambda_lo}")
        if np.max(d2) > self.lambda_hi + slack:
            raise InvalidDeclaration(
                f"{self.name}: V'' reaches {np.max(d2):.6g} > lambda_hi={self.lambda_hi}")
        v0 = float(self.value(np.asarray(self.argmin)))
        if np.min(v) < v0 - tol * max(1.0, abs(v0)):
            raise InvalidDeclaration(f"{self.name}: V(argmin) is not the minimum on the sample grid")

    def shifted(self, m: float) -> "Potential":
        """Potential ``t -> V(t - m)``."""
        fs = None if self.finite_support is None else (self.finite_support[0] + m, self.finite_support[1] + m)
        d2 = None if self.second_deriv is None else (lambda x, f=self.second_deriv: f(np.asarray(x) - m))
        return replace(self,
                       value=lambda x, f=self.value: f(np.asarray(x) - m),
                       deriv=lambda x, f=self.deriv: f(np.asarray(x) - m),
                       second_deriv=d2, argmin=self.argmin + m, finite_support=fs,
                       name=f"{self.name}>>{m:g}")


@dataclass(frozen=True)
class Perturbation:
    """Bounded perturbation ``q`` supported in ``[center - R, center + R]``.

    ``support_radius = inf`` flags a bounded but not compactly supported ``q``.
    ``semiconvexity`` is ``lambda_q`` with ``q'' >= -lambda_q``.
    """
    value: Func
    support_radius: float
    semiconvexity: float
    sup_pos: float
    sup_neg: float
    center: float = 0.0
    second_deriv: Optional[Func] = None
    name: str = "custom"
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if not self.support_radius > 0:
            raise InvalidDeclaration("support_radius must be positive")
        if min(self.semiconvexity, self.sup_pos, self.sup_neg) < 0:
            raise InvalidDeclaration("semiconvexity and sup-norms must be non-negative")
        if self.check:
            self.verify_declaration()

    def __call__(self, x):
        return self.value(np.asarray(x, dtype=float))

    @property
    def compact(self) -> bool:
        return math.isfinite(self.support_radius)

    @property
    def sup_norm(self) -> float:
        return max(self.sup_pos, self.sup_neg)

    @property
    def oscillation_bound(self) -> float:
        """``||q+|| + ||q-||``, the right-hand side of the 1-D log-Lipschitz bound."""
        return self.sup_pos + self.sup_neg

    @property
    def support(self) -> tuple:
        return (self.center - self.support_radius, self.center + self.support_radius)

    def verify_declaration(self, num: int = 4096, tol: float = 1e-12) -> None:
        if self.compact:
            a, b = self.support
            x = np.linspace(a, b, num)
            outside = np.concatenate([np.linspace(b, b + 3 * self.support_radius + 1, 64)[1:],
                                      np.linspace(a - 3 * self.support_radius - 1, a, 64)[:-1]])
            if np.any(self(outside) != 0):
                raise InvalidDeclaration(f"{self.name}: nonzero outside declared support")
        else:
            x = np.linspace(self.center - 20.0, self.center + 20.0, num)
        q = self(x)
        slack = tol * max(1.0, self.sup_norm)
        if np.max(q) > self.sup_pos + slack:
            raise InvalidDeclaration(f"{self.name}: sampled q+ {np.max(q):.6g} exceeds sup_pos={self.sup_pos}")
        if -np.min(q) > self.sup_neg + slack:
            raise InvalidDeclaration(f"{self.name}: sampled q- {-np.min(q):.6g} exceeds sup_neg={self.sup_neg}")
        if self.second_deriv is not None:
            d2 = self.second_deriv(x)
            if np.min(d2) < -self.semiconvexity - DECLARATION_TOL * max(1.0, self.semiconvexity):
                raise InvalidDeclaration(f"{self.name}: q'' below -lambda_q")

    def scaled(self, factor: float) -> "Perturbation":
        """``factor * q`` for ``factor >= 0``."""
        if factor < 0:
            raise ValueError("factor must be non-negative")
        d2 = None if self.second_deriv is None else (lambda x, f=self.second_deriv: factor * f(x))
        return replace(self, value=lambda x, f=self.value: factor * f(x), second_deriv=d2,
                       semiconvexity=factor * self.semiconvexity,
                       sup_pos=factor * self.sup_pos, sup_neg=factor * self.sup_neg,
                       name=f"{factor:g}*{self.name}")


@dataclass(frozen=True)
class WeightedMeasure1D:
    """Density ``exp(normalization - V - q) * t**jacobian_power`` on ``domain``."""
    potential: Potential
    perturbation: Optional[Perturbation] = None
    jacobian_power: int = 0
    normalization: Optional[float] = None
    domain: Optional[tuple] = None

    def __post_init__(self):
        if self.jacobian_power < 0 or int(self.jacobian_power) != self.jacobian_power:
            raise ValueError("jacobian_power must be a non-negative integer")
        if self.domain is None:
            dom = (0.0, math.inf) if self.jacobian_power > 0 else (-math.inf, math.inf)
            object.__setattr__(self, "domain", dom)

    # -- support -----------------------------------------------------------
    @property
    def support(self) -> tuple:
        a, b = self.domain
        if self.potential.finite_support is not None:
            a = max(a, self.potential.finite_support[0])
            b = min(b, self.potential.finite_support[1])
        return (a, b)

    @property
    def is_normalized(self) -> bool:
        return self.normalization is not None

    # -- log densities -------------------------------------------------------
    def log_base(self, x):
        """``-V(x) + k log x`` without the perturbation (concave)."""
        x = np.asarray(x, dtype=float)
        a, b = self.support
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -self.potential(x)
            if self.jacobian_power:
                out = out + self.jacobian_power * np.log(x)
        inside = (x >= a) & (x <= b)
        return np.where(inside, out, -np.inf)

    def log_base_deriv(self, x):
        x = np.asarray(x, dtype=float)
        d = -self.potential.deriv(x)
        if self.jacobian_power:
            d = d + self.jacobian_power / x
        return d

    def log_density_unnormalized(self, x):
        out = self.log_base(x)
        if self.perturbation is not None:
            out = out - self.perturbation(x)
        return out

    def log_density(self, x):
        if self.normalization is None:
            raise ValueError("measure is not normalized")
        return self.normalization + self.log_density_unnormalized(x)

    def density(self, x):
        return np.exp(self.log_density(x))

    # -- quadrature table --------------------------------------------------------
    @cached_property
    def base_mode(self) -> float:
        """Maximiser of the concave base log-density."""
        a, b = self.support
        if self.jacobian_power == 0:
            return float(min(max(self.potential.argmin, a), b))
        # -V'(r) + k/r is decreasing on r > 0
        lo = max(a, 0.0)
        lo = lo if lo > 0 else 1e-300
        hi = max(1.0, lo * 2)
        while self.log_base_deriv(hi) > 0:
            if hi >= b:
                return float(b)
            hi *= 2.0
            if hi > 1e12:
                raise NonIntegrable("radial base density has no mode")
        hi = min(hi, b)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.log_base_deriv(mid) > 0:
                lo = mid
            else:
                hi = mid
        return float(0.5 * (lo + hi))

    def _q_bounds(self) -> tuple:
        if self.perturbation is None:
            return 0.0, 0.0
        return self.perturbation.sup_pos, self.perturbation.sup_neg

    def _tail_cut(self, mode: float, peak: float, side: int) -> float:
        """Point beyond which the (log-concave) tail mass is below exp(-TAIL_LOG_DROP)."""
        a, b = self.support
        edge = b if side > 0 else a
        qp, qn = self._q_bounds()
        lam_hi = self.potential.lambda_hi
        step = 1.0 / math.sqrt(lam_hi) if math.isfinite(lam_hi) and lam_hi > 0 else 1.0

        def small_enough(x):
            lb = float(self.log_base(x))
            slope = -side * float(self.log_base_deriv(x))
            if not slope > 0:
                return False
            return lb - peak + qn + qp - math.log(slope) <= -TAIL_LOG_DROP

        d = step
        prev = 0.0
        while True:
            x = mode + side * d
            if (side > 0 and x >= edge) or (side < 0 and x <= edge):
                return float(edge)
            if small_enough(x):
                break
            prev = d
            d *= 2.0
            if d > 1e8:
                raise NonIntegrable(
                    f"{self.potential.name}: no growth certificate for the density tail")
        lo, hi = prev, d
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if small_enough(mode + side * mid):
                hi = mid
            else:
                lo = mid
        return float(mode + side * hi)

    @cached_property
    def _scale(self) -> float:
        qp, qn = self._q_bounds()
        return float(self.log_base(self.base_mode)) + qn

    @cached_property
    def table(self) -> PanelTable:
        mode = self.base_mode
        peak = float(self.log_base(mode))
        if not math.isfinite(peak):
            raise NonIntegrable("base density vanishes at its mode")
        lo = self._tail_cut(mode, peak, -1)
        hi = self._tail_cut(mode, peak, +1)
        pts = [lo, hi, mode, self.potential.argmin, 0.0]
        if self.perturbation is not None and self.perturbation.compact:
            pts.extend(self.perturbation.support)
        if self.potential.finite_support is not None:
            pts.extend(self.potential.finite_support)
        pts = [p for p in pts if lo <= p <= hi]
        scale = self._scale

        def f(x):
            return np.exp(self.log_density_unnormalized(x) - scale)

        return PanelTable.build(f, pts)

    # -- public API -------------------------------------------------------------
    def normalized(self) -> "WeightedMeasure1D":
        out = replace(self, normalization=normalize_constant(self))
        # the table does not depend on the normalization
        for key in ("table", "base_mode", "_scale"):
            out.__dict__[key] = self.__dict__[key]
        return out

    def cdf(self, x, tail: str = "lower"):
        return cdf(self, x, tail)

    def quantile(self, u, tail: str = "lower"):
        """Solve ``cdf(x, tail) = u`` (vectorised)."""
        u = np.asarray(u, dtype=float)
        t = self.table
        if tail == "lower":
            x = _invert(t, u * t.total, lower=True)
        else:
            x = _invert(t, u * t.total, lower=False)
        return x

    def expect(self, g, a=None, b=None) -> float:
        """``E[g]`` restricted to ``[a, b]``."""
        t = self.table
        return t.integrate(g, a, b) / t.total


def make_measure(potential: Potential, perturbation: Optional[Perturbation] = None,
                 jacobian_power: int = 0, domain=None) -> WeightedMeasure1D:
    """Build and normalise a measure in one step."""
    return WeightedMeasure1D(potential, perturbation, jacobian_power, None, domain).normalized()


def normalize_constant(measure: WeightedMeasure1D) -> float:
    """Return ``c`` with ``int exp(c - V - q) t**k dt = 1``."""
    t = measure.table
    if not t.total > 0:
        raise NonIntegrable("density integrates to zero")
    return -(measure._scale + math.log(t.total))


def cdf(measure: WeightedMeasure1D, x, tail: str = "lower"):
    """Lower CDF ``Phi(x)`` or upper tail ``Psi(x)``, each by direct integration."""
    if not measure.is_normalized:
        raise ValueError("measure is not normalized")
    t = measure.table
    x = np.asarray(x, dtype=float)
    if tail == "lower":
        val = t.lower(x)
    elif tail == "upper":
        val = t.upper(x)
    else:
        raise ValueError("tail must be 'lower' or 'upper'")
    out = val / t.total
    return float(out) if out.ndim == 0 else out


def ball_mass(measure: WeightedMeasure1D, r: float) -> float:
    """Mass of ``[-r, r]``; of ``[0, r]`` for measures living on the half-line."""
    if r == math.inf:
        return 1.0
    if measure.support[0] >= 0:
        return float(cdf(measure, r, "lower"))
    return float(1.0 - cdf(measure, -r, "lower") - cdf(measure, r, "upper"))


def truncate(potential: Potential, j: float) -> Potential:
    """``V`` on ``[-j, j]`` and +inf outside."""
    if not j > 0:
        raise ValueError("truncation radius must be positive")
    fs = (-j, j)
    if potential.finite_support is not None:
        fs = (max(-j, potential.finite_support[0]), min(j, potential.finite_support[1]))
    return replace(potential, finite_support=fs, name=f"{potential.name}|[-{j:g},{j:g}]",
                   argmin=min(max(potential.argmin, fs[0]), fs[1]))


def _invert(table: PanelTable, level, lower: bool):
    """Invert cumulative table masses in log space, bracketing by panel."""
    level = np.atleast_1d(np.asarray(level, dtype=float))
    shape = level.shape
    level = level.ravel()
    edges, mass = table.edges, table.mass
    if lower:
        k = np.searchsorted(table.cum_lo, level, side="right") - 1
    else:
        # cum_hi is decreasing; search on the reversed copy
        rev = table.cum_hi[::-1]
        k = table.cum_hi.size - 1 - np.searchsorted(rev, level, side="left")
    k = np.clip(k, 0, mass.size - 1)
    a, b = edges[k], edges[k + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        if lower:
            frac = (level - table.cum_lo[k]) / mass[k]
        else:
            frac = (table.cum_hi[k] - level) / mass[k]
    frac = np.where(np.isfinite(frac), np.clip(frac, 0.0, 1.0), 0.5)
    x0 = a + frac * (b - a)
    loglev = np.log(level)

    if lower:
        def f(x, idx):
            return np.log(table.cum_lo[k[idx]] + _partial(table, a[idx], x)) - loglev[idx]

        def fp(x, idx):
            return table.func(x) / (table.cum_lo[k[idx]] + _partial(table, a[idx], x))
    else:
        def f(x, idx):
            return loglev[idx] - np.log(table.cum_hi[k[idx] + 1] + _partial(table, x, b[idx]))

        def fp(x, idx):
            return table.func(x) / (table.cum_hi[k[idx] + 1] + _partial(table, x, b[idx]))

    with np.errstate(divide="ignore", invalid="ignore"):
        x = bracketed_newton(f, fp, a, b, x0, ftol=1e-15)
    return x.reshape(shape)


def _partial(table: PanelTable, a, b):
    return gl_integrate(table.func, a, b)
