"""Radially symmetric transport in R^n through the weighted half-line problem.

For radial profiles ``V(x) = Vbar(|x|)`` and ``q(x) = qbar(|x|)`` the Brenier
map is ``T(x) = Ttilde(|x|) x/|x|`` where ``Ttilde`` transports
``e^{-Vbar} r^{n-1} dr`` to ``e^{-Vbar-qbar} r^{n-1} dr``.  The dimension only
enters the Jacobian exponent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidDeclaration, InvalidDimension
from .measures import Perturbation, Potential, WeightedMeasure1D
from .transport1d import GridSpec, TransportMap1D, build_transport, log_derivative


def _check_dimension(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidDimension(f"dimension must be an integer >= 1, got {n!r}")
    return int(n)


def _induced_convexity(V_bar: Potential, n: int, num: int = 1000) -> None:
    """Scan ``Vtilde'' = Vbar'' + (n-1)/r^2`` on ``(0, r_max]``."""
    r_max = 5.0 / math.sqrt(V_bar.lambda_lo) if V_bar.lambda_lo > 0 else 10.0
    r = np.linspace(r_max / num, r_max, num)
    if V_bar.second_deriv is not None:
        d2 = V_bar.second_deriv(r)
    else:
        h = 1e-4 * r_max
        d2 = (V_bar.value(r + h) - 2 * V_bar.value(r) + V_bar.value(r - h)) / h**2
    d2 = d2 + (n - 1) / r**2
    if np.min(d2) < -1e-6 * max(1.0, V_bar.lambda_hi if math.isfinite(V_bar.lambda_hi) else 1.0):
        raise InvalidDeclaration("induced radial potential is not convex")


def reduce_to_1d(V_bar: Potential, q_bar: Optional[Perturbation], n: int):
    """Normalised source ``e^{-Vbar} r^{n-1}`` and target ``e^{-Vbar-qbar} r^{n-1}`` on ``[0, inf)``."""
    n = _check_dimension(n)
    _induced_convexity(V_bar, n)
    dom = (0.0, math.inf)
    source = WeightedMeasure1D(V_bar, None, n - 1, None, dom).normalized()
    target = WeightedMeasure1D(V_bar, q_bar, n - 1, None, dom).normalized()
    return source, target


@dataclass(frozen=True)
class RadialTransport:
    dimension: int
    profile: TransportMap1D
    q_pos: float
    q_neg: float

    @property
    def oscillation(self) -> float:
        return self.q_pos + self.q_neg

    @property
    def eigen_interval(self) -> tuple:
        s = self.oscillation
        return (math.exp(-s), math.exp(s))

    @property
    def log_deriv_at_zero(self) -> float:
        """Linear extrapolation of ``log Ttilde'`` from the first two nodes to ``r = 0``."""
        r, ld = self.profile.grid, self.profile.log_deriv
        return float(ld[0] - r[0] * (ld[1] - ld[0]) / (r[1] - r[0]))

    def radius_map(self, r):
        """``Ttilde(r)`` with ``Ttilde(0) = 0``."""
        r = np.asarray(r, dtype=float)
        pos = r > 0
        out = np.zeros_like(r)
        if np.any(pos):
            out[pos] = self.profile(r[pos])
        return float(out) if out.ndim == 0 else out


def build_radial(V_bar: Potential, q_bar: Optional[Perturbation], n: int,
                 grid_spec: Optional[GridSpec] = None) -> RadialTransport:
    source, target = reduce_to_1d(V_bar, q_bar, n)
    prof = build_transport(source, target, grid_spec)
    qp = q_bar.sup_pos if q_bar is not None else 0.0
    qn = q_bar.sup_neg if q_bar is not None else 0.0
    return RadialTransport(dimension=_check_dimension(n), profile=prof, q_pos=qp, q_neg=qn)


def evaluate_map(rt: RadialTransport, x):
    """``Ttilde(|x|) x / |x|`` for one point (shape ``(n,)``) or a batch ``(m, n)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != rt.dimension:
        raise InvalidDimension(f"expected vectors of length {rt.dimension}")
    r = np.linalg.norm(x, axis=-1)
    scale = np.zeros_like(r)
    pos = r > 0
    if np.any(pos):
        scale[pos] = np.asarray(rt.radius_map(r[pos])) / r[pos]
    return x * scale[..., None]


def gradient_eigenvalues(rt: RadialTransport, r):
    """``(Ttilde'(r), Ttilde(r)/r)``: radial and (n-1)-fold tangential eigenvalues."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("radii must be positive")
    radial = np.exp(log_derivative(rt.profile, r))
    tangential = np.asarray(rt.profile(r)) / r
    return radial, tangential
