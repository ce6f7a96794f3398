"""Explicit constants: Caffarelli bound, bootstrap, the auxiliary function
psi-bar, the outreach radius, the full Lipschitz constant chain for compactly
supported perturbations, and the Talagrand / cost / log-Sobolev helpers.

Large constants are carried in log space; ``e^{9 Lambda P^2}`` overflows a
double for modest parameters.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import List

import numpy as np

from .errors import (BoundOverflow, DegenerateConstruction, DivergentIteration,
                     InvalidDeclaration, PreconditionViolated)

LOG_FLOAT_MAX = math.log(np.finfo(float).max)  # about 709.78
REMEDY_FACTOR = 1.0 + 1e-9


@dataclass(frozen=True)
class PogorelovParams:
    R: float
    lam: float
    Lam: float
    lambda_q: float

    def __post_init__(self):
        if not (self.lam > 0 and self.Lam > 0 and self.R > 0):
            raise InvalidDeclaration("need R > 0 and lambda, Lambda > 0")
        if self.lam > self.Lam:
            raise InvalidDeclaration("need lambda <= Lambda")
        if self.lambda_q < 0:
            raise InvalidDeclaration("need lambda_q >= 0")

    def as_dict(self) -> dict:
        return {"R": self.R, "lambda": self.lam, "Lambda": self.Lam, "lambda_q": self.lambda_q}


# -- Caffarelli and bootstrap ---------------------------------------------------

def caffarelli_bound(Lambda_V: float, lambda_W: float) -> float:
    """``sqrt(Lambda_V / lambda_W)``."""
    if not (Lambda_V > 0 and lambda_W > 0):
        raise PreconditionViolated("both curvature constants must be positive")
    return math.sqrt(Lambda_V / lambda_W)


def bootstrap_refine(C: float, a0: float, tol: float = 1e-12, max_iter: int = 200) -> List[float]:
    """Iterates of ``a -> (2Ca - C^2)/a`` from ``a0`` until ``|a - C| < tol``.

    The error obeys ``1/e_{k+1} = 1/e_k + 1/C``, so convergence is harmonic:
    ``e_k = C e_0 / (C + k e_0)``.
    """
    if not C > 0:
        raise PreconditionViolated("C must be positive")
    if a0 < C:
        raise PreconditionViolated("need a0 >= C")
    seq = [float(a0)]
    a = float(a0)
    for _ in range(max_iter):
        if abs(a - C) < tol:
            break
        nxt = (2.0 * C * a - C * C) / a
        if nxt > a:
            raise DivergentIteration(f"iterate increased from {a!r} to {nxt!r}")
        if nxt == a:
            # float stall: the correction is below half an ulp of a
            break
        seq.append(nxt)
        a = nxt
    return seq


def bootstrap_error(C: float, a0: float, k: int) -> float:
    """Exact error ``a_k - C`` of the bootstrap iteration in real arithmetic."""
    e0 = a0 - C
    return C * e0 / (C + k * e0) if e0 > 0 else 0.0


# -- the auxiliary function --------------------------------------------------------

def _pq(lam: float, lq: float, R: float):
    P = (2 * lq + 4 * lq * R) / lam + 1 + R
    Q = lam / (2 * lq) + 1 + R if lq > 0 else math.inf
    return P, Q


@dataclass(frozen=True)
class PsiBar:
    """Piecewise ``theta`` and its first and second antiderivatives ``psi'``, ``psi``.

    ``theta = lq`` on ``[0, R]``, ``lq (1 + R - t)`` on ``[R, Q]``, linear from
    ``-lam/2`` to 0 on ``[Q, P]`` and 0 beyond ``P``.
    """
    params: PogorelovParams
    P: float
    Q: float
    lambda_q_used: float
    remedy_applied: bool
    slope: float = field(repr=False)
    intercept: float = field(repr=False)

    # knot values, filled in __post_init__
    def __post_init__(self):
        lq, R = self.lambda_q_used, self.params.R
        if lq == 0:
            vals = dict(dR=0.0, dQ=0.0, dP=0.0, pR=0.0, pQ=0.0, pP=0.0)
        else:
            Q, P, A = self.Q, self.P, self.slope
            dR = lq * R
            dQ = dR + lq * ((1 + R) * (Q - R) - 0.5 * (Q * Q - R * R))
            w = P - Q
            # third piece written around P to avoid cancellation when w is tiny
            dP = dQ - 0.5 * A * w * w
            pR = 0.5 * lq * R * R
            pQ = pR + self._mid_int(Q)
            pP = pQ + dQ * w - A * w**3 / 3.0
            vals = dict(dR=dR, dQ=dQ, dP=dP, pR=pR, pQ=pQ, pP=pP)
        object.__setattr__(self, "_knots", vals)

    def _mid_int(self, t):
        """``int_R^t psi'`` for ``t`` in ``[R, Q]``."""
        lq, R = self.lambda_q_used, self.params.R
        u = t - R
        return lq * R * u + lq * (0.5 * (1 + R) * u * u - 0.5 * ((t**3 - R**3) / 3 - R * R * u))

    def theta(self, t):
        t = np.asarray(t, dtype=float)
        lq, R = self.lambda_q_used, self.params.R
        if lq == 0:
            return np.zeros_like(t)
        out = np.where(t <= R, lq,
              np.where(t <= self.Q, lq * (1 + R - t),
              np.where(t <= self.P, self.slope * (t - self.P), 0.0)))
        return out

    def psi_prime(self, t):
        t = np.asarray(t, dtype=float)
        lq, R = self.lambda_q_used, self.params.R
        if lq == 0:
            return np.zeros_like(t)
        k = self._knots
        Q, P, A = self.Q, self.P, self.slope
        mid = k["dR"] + lq * ((1 + R) * (t - R) - 0.5 * (t * t - R * R))
        third = k["dQ"] + 0.5 * A * ((t - P) ** 2 - (Q - P) ** 2)
        return np.where(t <= R, lq * t, np.where(t <= Q, mid, np.where(t < self.P, third, 0.0)))

    def psi(self, t):
        t = np.asarray(t, dtype=float)
        lq, R = self.lambda_q_used, self.params.R
        if lq == 0:
            return np.zeros_like(t)
        k = self._knots
        Q, P, A = self.Q, self.P, self.slope
        mid = k["pR"] + self._mid_int(t)
        u = t - Q
        third = (k["pQ"] + k["dQ"] * u
                 + 0.5 * A * (((t - P) ** 3 - (Q - P) ** 3) / 3 - (Q - P) ** 2 * u))
        return np.where(t <= R, 0.5 * lq * t * t,
               np.where(t <= Q, mid, np.where(t < self.P, third, k["pP"])))

    @property
    def sup_psi(self) -> float:
        """``psi(P)``: psi is non-decreasing, constant beyond ``P``."""
        return float(self._knots["pP"])

    @property
    def sup_psi_prime(self) -> float:
        """``psi'(1 + R) = lq (R + 1/2)``, where theta changes sign."""
        return self.lambda_q_used * (self.params.R + 0.5)

    @property
    def psi_prime_at_P(self) -> float:
        """Closed-form ``int_0^P theta`` (zero by construction)."""
        return float(self._knots["dP"])


def build_psi_bar(params: PogorelovParams, remedy: bool = True) -> PsiBar:
    """Construct psi-bar; enlarges ``lambda_q`` when the third interval is empty."""
    lam, R, lq = params.lam, params.R, params.lambda_q
    if lq == 0:
        P, Q = _pq(lam, 0.0, R)
        return PsiBar(params, P, Q, 0.0, False, 0.0, 0.0)
    remedied = False
    if 4 * lq * lq * (1 + 2 * R) <= lam * lam:
        if not remedy:
            raise DegenerateConstruction(
                f"P <= Q for lambda={lam}, lambda_q={lq}, R={R}")
        lq = lam / (2 * math.sqrt(1 + 2 * R)) * REMEDY_FACTOR
        remedied = True
    P, Q = _pq(lam, lq, R)
    if not P > Q:
        raise DegenerateConstruction("remedy failed to separate P and Q")
    A = 0.5 * lam / (P - Q)
    return PsiBar(params, P, Q, lq, remedied, A, -A * P)


# -- the constant chain ------------------------------------------------------------

def perturbation_sup_bound(lambda_p: float, P: float) -> float:
    """``4 lambda_p P^2``."""
    return 4.0 * lambda_p * P * P


def _log_outreach(P: float, lam: float, Lam: float, p_sup: float):
    if not (P > 0 and lam > 0 and Lam > 0) or p_sup < 0:
        raise PreconditionViolated("outreach_radius needs P, lambda, Lambda > 0 and p_sup >= 0")
    log_first = math.log(3 * math.sqrt(2))
    if p_sup == 0:
        log_c = log_first
    else:
        log_second = (math.log(4.5) + 9 * Lam * P * P + 0.5 * p_sup - math.log(P)
                      + 0.5 * math.log(p_sup / lam))
        log_c = float(np.logaddexp(log_first, log_second))
    log_p = float(np.logaddexp(log_c, 0.0)) + math.log(P)
    return log_c, log_p


def _exp_or_inf(x: float) -> float:
    return math.exp(x) if x < LOG_FLOAT_MAX else math.inf


def outreach_radius(P: float, lam: float, Lam: float, p_sup: float, strict: bool = True):
    """``(C', P')`` with ``C' = 3 sqrt 2 + 9 e^{9 Lambda P^2 + p/2} / (2P) sqrt(p/lam)``."""
    log_c, log_p = _log_outreach(P, lam, Lam, p_sup)
    if strict and log_p >= LOG_FLOAT_MAX:
        raise BoundOverflow(f"log P' = {log_p:.6g} exceeds the double range")
    return _exp_or_inf(log_c), _exp_or_inf(log_p)


@dataclass(frozen=True)
class BoundReport:
    params: PogorelovParams
    q_sup_bound: float
    P: float
    Q: float
    lambda_q_used: float
    remedy_applied: bool
    sup_psi: float
    sup_psi_prime: float
    C_prime: float
    P_prime: float
    C_tilde: float
    phi11_bound: float
    pogorelov_C: float
    caffarelli_C: float
    final_C: float
    log_C_prime: float
    log_P_prime: float
    log_C_tilde: float
    log_phi11_bound: float
    log_pogorelov_C: float
    log_final_C: float
    overflow: bool
    reconstructed: bool = True
    details: tuple = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = self.params.as_dict()
        d["details"] = list(self.details)
        # JSON has no infinities; unbounded or overflowing values become null
        for key, val in d.items():
            if isinstance(val, float) and not math.isfinite(val):
                d[key] = None
        return d


def theorem_1_1_constant(params: PogorelovParams, strict: bool = True) -> BoundReport:
    """Chain every displayed inequality into the final Lipschitz constant.

    ``strict`` raises ``BoundOverflow`` when a constant leaves the double
    range; otherwise float fields become ``inf`` and ``overflow`` is set, with
    the ``log_*`` fields still exact.
    """
    lam, Lam, R, lq = params.lam, params.Lam, params.R, params.lambda_q
    notes = []
    q_sup = perturbation_sup_bound(lq, R)
    notes.append(f"q_sup_bound = 4*lambda_q*R^2 = {q_sup!r}")
    psi = build_psi_bar(params)
    if psi.remedy_applied:
        notes.append(f"P <= Q for the declared lambda_q; enlarged lambda_q to {psi.lambda_q_used!r}")
    notes.append(f"P = {psi.P!r}, Q = {psi.Q!r}, sup psi = {psi.sup_psi!r}, sup psi' = {psi.sup_psi_prime!r}")
    log_c, log_pp = _log_outreach(psi.P, lam, Lam, q_sup)
    notes.append(f"log C' = {log_c!r}, log P' = {log_pp!r}")
    spp = psi.sup_psi_prime
    log_ct = math.log(Lam) + log_pp + math.log(spp) if spp > 0 else -math.inf
    log_phi = float(np.logaddexp(math.log(2.0) + log_ct - math.log(lam), 0.5 * math.log(2 * Lam / lam)))
    log_pog = log_phi + psi.sup_psi
    caff = caffarelli_bound(Lam, lam)
    log_final = max(log_pog, math.log(caff))
    notes.append(f"log C_tilde = {log_ct!r}, log phi11 = {log_phi!r}, log pogorelov_C = {log_pog!r}")
    notes.append(f"caffarelli_C = {caff!r}; final_C = max(pogorelov_C, caffarelli_C)")
    overflow = max(log_pp, log_ct, log_phi, log_pog) >= LOG_FLOAT_MAX
    if overflow and strict:
        raise BoundOverflow(f"log final_C = {log_final:.6g} exceeds the double range")
    return BoundReport(
        params=params, q_sup_bound=q_sup, P=psi.P, Q=psi.Q,
        lambda_q_used=psi.lambda_q_used, remedy_applied=psi.remedy_applied,
        sup_psi=psi.sup_psi, sup_psi_prime=spp,
        C_prime=_exp_or_inf(log_c), P_prime=_exp_or_inf(log_pp),
        C_tilde=_exp_or_inf(log_ct) if spp > 0 else 0.0,
        phi11_bound=_exp_or_inf(log_phi), pogorelov_C=_exp_or_inf(log_pog),
        caffarelli_C=caff, final_C=_exp_or_inf(log_final),
        log_C_prime=log_c, log_P_prime=log_pp, log_C_tilde=log_ct,
        log_phi11_bound=log_phi, log_pogorelov_C=log_pog, log_final_C=log_final,
        overflow=overflow, details=tuple(notes))


# -- entropy and cost ------------------------------------------------------------

def talagrand_bound(lambda_V: float, entropy: float) -> float:
    """``(2 / lambda_V) Ent``."""
    if entropy < 0:
        raise PreconditionViolated("entropy must be non-negative")
    if not lambda_V > 0:
        raise PreconditionViolated("lambda_V must be positive")
    return 2.0 * entropy / lambda_V


def cost_upper_bound(lam: float, p_sup: float, c_pj: float, c_p: float, mass_BP: float) -> float:
    """``(6/lam) ||p|| e^{c_pj + c_p + ||p||} mu(B_P)``."""
    if not 0.0 <= mass_BP <= 1.0:
        raise PreconditionViolated("mass_BP must lie in [0, 1]")
    if p_sup == 0:
        return 0.0
    return 6.0 / lam * p_sup * math.exp(c_pj + c_p + p_sup) * mass_BP


def log_sobolev_transfer(grad_T_sup: float, base_constant: float) -> float:
    """Log-Sobolev constant ``base * ||grad T||^2`` of the push-forward measure."""
    if not (grad_T_sup > 0 and base_constant > 0):
        raise PreconditionViolated("both arguments must be positive")
    return base_constant * grad_T_sup**2

