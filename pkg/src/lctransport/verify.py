"""Numerical checks of the Lipschitz estimates and supporting lemmas.

Every check returns a ``VerificationOutcome`` with ``passed`` iff
``measured <= bound + tolerance``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from .bounds import PogorelovParams, PsiBar, build_psi_bar, theorem_1_1_constant
from .errors import PreconditionViolated
from .measures import Perturbation, Potential, make_measure
from .radial import build_radial, gradient_eigenvalues
from .transport1d import GridSpec, TransportMap1D, build_transport, log_derivative

LOG_TOL = 1e-8
PUSH_TOL = 1e-6


@dataclass(frozen=True)
class VerificationOutcome:
    claim: str
    measured: float
    bound: float
    margin: float
    passed: bool
    metadata: dict = field(default_factory=dict)

    @classmethod
    def make(cls, claim, measured, bound, tol, **meta):
        measured, bound = float(measured), float(bound)
        meta["tolerance"] = tol
        return cls(claim, measured, bound, bound - measured, bool(measured <= bound + tol), meta)

    def to_dict(self) -> dict:
        return {"claim": self.claim, "measured": self.measured, "bound": self.bound,
                "margin": self.margin, "passed": self.passed, "metadata": self.metadata}


def _central(n: int, frac: float = 0.9) -> slice:
    cut = int(math.floor(n * (1 - frac) / 2))
    return slice(cut, n - cut)


def _refine_extreme(tmap: TransportMap1D, sign: float) -> float:
    """Golden-section refinement of ``sign * log T'`` around its best node."""
    ld = sign * tmap.log_deriv
    i = int(np.argmax(ld))
    best = float(ld[i])
    if 0 < i < ld.size - 1 and ld[i] >= ld[i - 1] and ld[i] >= ld[i + 1]:
        a, b, c = tmap.grid[i - 1], tmap.grid[i], tmap.grid[i + 1]
        if ld[i] > ld[i - 1] and ld[i] > ld[i + 1]:
            res = optimize.minimize_scalar(lambda x: -sign * float(log_derivative(tmap, x)),
                                           bracket=(a, b, c), method="golden",
                                           options={"xtol": 1e-10})
            if a <= res.x <= c:
                best = max(best, -float(res.fun))
    return sign * best


def lipschitz_estimate(tmap: TransportMap1D) -> float:
    """``max T'`` over the grid, refined near the arg-max node."""
    return math.exp(_refine_extreme(tmap, 1.0))


def log_lipschitz_range(tmap: TransportMap1D) -> tuple:
    """``(min log T', max log T')`` with both extremes refined."""
    return _refine_extreme(tmap, -1.0), _refine_extreme(tmap, 1.0)


def sup_abs_log_derivative(tmap: TransportMap1D) -> float:
    lo, hi = log_lipschitz_range(tmap)
    return max(abs(lo), abs(hi))


def _osc(q: Optional[Perturbation]) -> float:
    return 0.0 if q is None else q.oscillation_bound


def check_theorem_1_2(V: Potential, q: Optional[Perturbation],
                      grid_spec: Optional[GridSpec] = None, tol: float = LOG_TOL) -> VerificationOutcome:
    """``sup |log T'| <= ||q+|| + ||q-||`` for ``e^{-V} -> e^{-V-q}``."""
    tmap = build_transport(make_measure(V), make_measure(V, q), grid_spec)
    return VerificationOutcome.make(
        "thm12:sup|logT'|", sup_abs_log_derivative(tmap), _osc(q), tol,
        potential=V.name, perturbation=None if q is None else q.name, nodes=int(tmap.grid.size))


def _radii(rt, num: int) -> np.ndarray:
    # spread along the node index so sampling follows the radial mass
    g = rt.profile.grid
    idx = np.linspace(0, g.size - 1, num)
    return np.interp(idx, np.arange(g.size), g)


def check_theorem_1_3(V_bar: Potential, q_bar: Optional[Perturbation], n: int,
                      num: int = 1000, grid_spec: Optional[GridSpec] = None,
                      tol: float = LOG_TOL) -> VerificationOutcome:
    """Both eigenvalues of ``grad T`` lie in ``[e^{-s}, e^{s}]`` at ``num`` radii."""
    rt = build_radial(V_bar, q_bar, n, grid_spec)
    r = _radii(rt, num)
    rad, tan = gradient_eigenvalues(rt, r)
    measured = float(max(np.max(np.abs(np.log(rad))), np.max(np.abs(np.log(tan)))))
    return VerificationOutcome.make(
        "thm13:sup|log eig|", measured, rt.oscillation, tol, dimension=int(n),
        potential=V_bar.name, perturbation=None if q_bar is None else q_bar.name,
        radii=int(num))


@dataclass(frozen=True)
class HProfile:
    x: np.ndarray
    h: np.ndarray

    @property
    def max(self) -> float:
        return float(np.max(self.h))


def pogorelov_h_profile(tmap: TransportMap1D, psi: PsiBar) -> HProfile:
    """``h(x) = T'(x) e^{psi(|T(x)|)}`` at the grid nodes."""
    h = np.exp(tmap.log_deriv + psi.psi(np.abs(tmap.values)))
    return HProfile(tmap.grid.copy(), h)


def theorem_1_1_params(V: Potential, q: Optional[Perturbation]) -> PogorelovParams:
    """Hypotheses of the compact-support estimate read off a 1-D instance."""
    if not (V.lambda_lo > 0 and math.isfinite(V.lambda_hi)):
        raise PreconditionViolated("needs 0 < lambda <= Lambda < inf")
    if q is None:
        return PogorelovParams(1.0, V.lambda_lo, V.lambda_hi, 0.0)
    if not q.compact:
        raise PreconditionViolated("needs a compactly supported perturbation")
    R = max(abs(q.support[0]), abs(q.support[1]))
    return PogorelovParams(R, V.lambda_lo, V.lambda_hi, q.semiconvexity)


def check_pogorelov(V: Potential, q: Optional[Perturbation],
                    grid_spec: Optional[GridSpec] = None) -> list:
    """``max h <= final_C`` and ``max T' <= final_C`` (compared in log space)."""
    params = theorem_1_1_params(V, q)
    report = theorem_1_1_constant(params, strict=False)
    tmap = build_transport(make_measure(V), make_measure(V, q), grid_spec)
    prof = pogorelov_h_profile(tmap, build_psi_bar(params))
    meta = dict(params=params.as_dict(), log_final_C=report.log_final_C, overflow=report.overflow)
    # log scale keeps the comparison meaningful when final_C overflows
    out = [VerificationOutcome.make("pogorelov:log max h", math.log(prof.max), report.log_final_C,
                                    LOG_TOL, **meta),
           VerificationOutcome.make("thm11:log lipschitz", math.log(lipschitz_estimate(tmap)),
                                    report.log_final_C, LOG_TOL, **dict(meta))]
    return out


def check_lemma_5_1(V: Potential, pairs: int = 500, seed: int = 0,
                    tol: float = LOG_TOL) -> VerificationOutcome:
    """Both tail inequalities on random ordered pairs on each side of the minimiser."""
    mu = make_measure(V)
    x0 = V.argmin
    rng = np.random.default_rng(seed)
    lo = float(mu.quantile(1e-200)[0])
    hi = float(mu.quantile(1e-200, "upper")[0])
    left = np.sort(rng.uniform(lo, x0, size=(pairs, 2)), axis=1)
    right = np.sort(rng.uniform(x0, hi, size=(pairs, 2)), axis=1)
    x, y = left[:, 0], left[:, 1]
    lhs = V(x) - V(y)
    rhs = np.log(mu.cdf(y)) - np.log(mu.cdf(x))
    viol_left = float(np.max(lhs - rhs))
    x, y = right[:, 0], right[:, 1]
    lhs = V(x) - V(y)
    rhs = np.log(mu.cdf(y, "upper")) - np.log(mu.cdf(x, "upper"))
    viol_right = float(np.max(rhs - lhs))
    return VerificationOutcome.make("lemma51:max violation", max(viol_left, viol_right), 0.0, tol,
                                    potential=V.name, pairs=pairs, seed=seed,
                                    left=viol_left, right=viol_right)


def remark_5_2_constant(s: float) -> float:
    """``C`` with ``|e^u - 1| <= C |u|`` on ``|u| <= s`` (chord of ``e^u - 1``)."""
    m = max(s, 1.0)
    return math.expm1(m) / m


def check_remark_5_2(V: Potential, q: Perturbation,
                     grid_spec: Optional[GridSpec] = None) -> VerificationOutcome:
    """``sup |T' - 1| <= C (||q+|| + ||q-||)`` for ``||q|| <= 1``."""
    if q is not None and q.sup_norm > 1:
        raise PreconditionViolated("needs ||q||_inf <= 1")
    tmap = build_transport(make_measure(V), make_measure(V, q), grid_spec)
    lo, hi = log_lipschitz_range(tmap)
    measured = max(abs(math.expm1(lo)), abs(math.expm1(hi)))
    s = _osc(q)
    return VerificationOutcome.make("remark52:sup|T'-1|", measured, remark_5_2_constant(s) * s,
                                    LOG_TOL, perturbation=None if q is None else q.name)


@dataclass(frozen=True)
class LinearizationResult:
    eps: float
    residual: float
    c_eps: float
    iota_q: float

    @property
    def ratio(self) -> float:
        return self.residual / self.eps

    @property
    def iota_error(self) -> float:
        return abs(self.c_eps / self.eps - self.iota_q)


def iota_q(q: Optional[Perturbation]) -> float:
    """``-int q d gamma`` by scipy quadrature, independent of the panel engine."""
    if q is None:
        return 0.0
    pdf = lambda t: math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)  # noqa: E731
    f = lambda t: float(q(t)) * pdf(t)  # noqa: E731
    if q.compact:
        a, b = q.support
        val = integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    else:
        val = integrate.quad(f, -40, 40, epsabs=1e-15, epsrel=1e-13, limit=400)[0]
    return -val


def _gaussian():
    from .catalog import gaussian
    return gaussian(1.0)


def linearization(q: Optional[Perturbation], eps: float,
                  grid_spec: Optional[GridSpec] = None) -> LinearizationResult:
    """Sup over the central 90% of ``psi'' - x psi' - eps/2 psi'^2 - q(T) - c_eps/eps``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    V = _gaussian()
    src = make_measure(V)
    qe = None if q is None else q.scaled(eps)
    tgt = make_measure(V, qe)
    c_eps = src.normalization - tgt.normalization
    tmap = build_transport(src, tgt, grid_spec)
    sl = _central(tmap.grid.size)
    x, T = tmap.grid[sl], tmap.values[sl]
    d1 = (T - x) / eps
    d2 = np.expm1(tmap.log_deriv[sl]) / eps
    qT = np.zeros_like(T) if q is None else q(T)
    res = d2 - x * d1 - 0.5 * eps * d1**2 - qT - c_eps / eps
    return LinearizationResult(eps, float(np.max(np.abs(res))), float(c_eps), iota_q(q))


def linearization_residual(V: Potential, q: Optional[Perturbation], eps: float,
                           grid_spec: Optional[GridSpec] = None) -> float:
    """Residual of the linearised equation; ``V`` must be the standard Gaussian."""
    if not (V.lambda_lo == 1.0 and V.lambda_hi == 1.0 and V.argmin == 0.0):
        raise PreconditionViolated("the linearisation is stated for the standard Gaussian")
    return linearization(q, eps, grid_spec).residual


def linearization_constant(q: Optional[Perturbation], eps_max: float) -> float:
    """``K = (s^2/2) e^{eps s}`` bounding residual/eps.

    In 1-D the residual equals ``(T' - 1 - log T')/eps`` and
    ``|log T'| <= eps s`` by the oscillation bound applied to ``eps q``.
    """
    s = _osc(q)
    return 0.5 * s * s * math.exp(eps_max * s)


def check_linearization(q: Optional[Perturbation], eps_values: Sequence[float] = (1e-1, 1e-2, 1e-3),
                        grid_spec: Optional[GridSpec] = None) -> list:
    results = [linearization(q, e, grid_spec) for e in eps_values]
    K = linearization_constant(q, max(eps_values))
    ratio = max(r.ratio for r in results)
    name = None if q is None else q.name
    out = [VerificationOutcome.make("linearization:residual/eps", ratio, K, LOG_TOL,
                                    perturbation=name, eps=list(eps_values),
                                    ratios=[r.ratio for r in results])]
    qn = 0.0 if q is None else q.sup_norm
    # the iota check is relative to its own budget 5 eps ||q||^2 per eps
    worst = max((r.iota_error - 5 * r.eps * qn * qn) for r in results)
    out.append(VerificationOutcome.make("linearization:iota excess", worst, 0.0, 1e-12,
                                        perturbation=name, iota_q=results[0].iota_q,
                                        errors=[r.iota_error for r in results]))
    return out


def check_pushforward(tmap: TransportMap1D, tol: float = PUSH_TOL) -> VerificationOutcome:
    from .transport1d import pushforward_errors
    errs = pushforward_errors(tmap)
    return VerificationOutcome.make("pushforward:max error", max(errs.values()), 0.0, tol, **errs)


SUITES = ("thm12", "thm13", "lemma51", "pogorelov", "linearization", "remark52")


def run_suite(suite: str, V: Potential, q: Optional[Perturbation], n: int = 3,
              grid_spec: Optional[GridSpec] = None):
    """Run one named suite (or ``all``); returns ``(outcomes, skipped)``."""
    names = SUITES if suite == "all" else (suite,)
    outcomes, skipped = [], []
    for name in names:
        if name == "thm12":
            outcomes.append(check_theorem_1_2(V, q, grid_spec))
        elif name == "thm13":
            outcomes.append(check_theorem_1_3(V, q, n, grid_spec=grid_spec))
        elif name == "lemma51":
            outcomes.append(check_lemma_5_1(V))
        elif name == "pogorelov":
            try:
                outcomes.extend(check_pogorelov(V, q, grid_spec))
            except PreconditionViolated as exc:
                skipped.append((name, str(exc)))
        elif name == "linearization":
            outcomes.extend(check_linearization(q, grid_spec=grid_spec))
        elif name == "remark52":
            if q is not None and q.sup_norm > 1:
                skipped.append((name, "||q|| > 1"))
            else:
                outcomes.append(check_remark_5_2(V, q, grid_spec))
        else:
            raise ValueError(f"unknown suite {suite!r}")
    return outcomes, skipped
