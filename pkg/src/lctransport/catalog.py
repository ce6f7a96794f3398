"""Named potentials and perturbations addressable from config files.

Spec strings look like ``gaussian(1.0)``, ``bump(0.2, 1, 2)`` or
``cosine-bump(height=0.3, radius=1)``.  Curvature and sup-norm constants are
derived analytically for each family.
"""
from __future__ import annotations

import math
import re

import numpy as np

from .errors import ConfigError
from .measures import Perturbation, Potential


# -- potentials ---------------------------------------------------------------

def gaussian(sigma: float = 1.0, mean: float = 0.0) -> Potential:
    """``V(t) = (t - mean)^2 / (2 sigma^2)`` with ``lambda = Lambda = 1/sigma^2``."""
    if not sigma > 0:
        raise ConfigError("gaussian: sigma must be positive")
    k = 1.0 / sigma**2
    return Potential(
        value=lambda t: 0.5 * k * (t - mean) ** 2,
        deriv=lambda t: k * (t - mean),
        second_deriv=lambda t: np.full_like(np.asarray(t, dtype=float), k),
        lambda_lo=k, lambda_hi=k, argmin=mean, name=f"gaussian({sigma:g})")


def quartic_regularized(a: float = 1.0, b: float = 0.5) -> Potential:
    """``V(t) = a t^2/2 + b t^4/(1 + t^2)``; ``a <= V'' <= a + 5b/2``.

    ``t^4/(1+t^2) = t^2 - 1 + 1/(1+t^2)`` has second derivative
    ``2 + (6t^2 - 2)/(1+t^2)^3`` which ranges over ``[0, 5/2]``.
    """
    if not a > 0 or b < 0:
        raise ConfigError("quartic-regularized: need a > 0 and b >= 0")

    def value(t):
        t2 = t * t
        return 0.5 * a * t2 + b * t2 * t2 / (1.0 + t2)

    def deriv(t):
        return a * t + b * (2.0 * t - 2.0 * t / (1.0 + t * t) ** 2)

    def second(t):
        t2 = t * t
        return a + b * (2.0 + (6.0 * t2 - 2.0) / (1.0 + t2) ** 3)

    return Potential(value=value, deriv=deriv, second_deriv=second,
                     lambda_lo=a, lambda_hi=a + 2.5 * b, argmin=0.0,
                     name=f"quartic-regularized({a:g},{b:g})")


def smoothed_abs(eps: float = 0.5) -> Potential:
    """``V(t) = sqrt(eps^2 + t^2)``: convex, ``lambda = 0``, ``Lambda = 1/eps``."""
    if not eps > 0:
        raise ConfigError("smoothed-abs: eps must be positive")
    e2 = eps * eps
    return Potential(
        value=lambda t: np.sqrt(e2 + t * t),
        deriv=lambda t: t / np.sqrt(e2 + t * t),
        second_deriv=lambda t: e2 / (e2 + t * t) ** 1.5,
        lambda_lo=0.0, lambda_hi=1.0 / eps, argmin=0.0, name=f"smoothed-abs({eps:g})")


# -- perturbations -------------------------------------------------------------

def bump(height: float, radius: float = 1.0, smoothness: int = 2, center: float = 0.0) -> Perturbation:
    """``q = h (1 - s^2)^k`` on ``|s| < 1`` where ``s = (t - center)/radius``.

    ``q'' = (2kh/R^2) (1-s^2)^(k-2) ((2k-1)s^2 - 1)``.  For ``h > 0`` the
    minimum is at ``s = 0``; for ``h < 0`` the maximum of the bracket sits at
    ``s^2 = 3/(2k-1)``.
    """
    k = int(smoothness)
    if k < 2 or k != smoothness:
        raise ConfigError("bump: smoothness must be an integer >= 2 (C^1 bump)")
    if not radius > 0:
        raise ConfigError("bump: radius must be positive")
    h, R = float(height), float(radius)

    def value(t):
        s = (np.asarray(t, dtype=float) - center) / R
        w = np.clip(1.0 - s * s, 0.0, None)
        return h * w**k

    def second(t):
        s = (np.asarray(t, dtype=float) - center) / R
        w = np.clip(1.0 - s * s, 0.0, None)
        inside = np.abs(s) < 1
        d2 = 2 * k * h / R**2 * w ** (k - 2) * ((2 * k - 1) * s * s - 1.0)
        return np.where(inside, d2, 0.0)

    if h >= 0:
        lam_q = 2 * k * h / R**2
    else:
        lam_q = -h * 4 * k * (1.0 - 3.0 / (2 * k - 1)) ** (k - 2) / R**2
    return Perturbation(value=value, support_radius=R, semiconvexity=lam_q,
                        sup_pos=max(h, 0.0), sup_neg=max(-h, 0.0), center=center,
                        second_deriv=second, name=f"bump({h:g},{R:g},{k})")


def cosine_bump(height: float, radius: float = 1.0, center: float = 0.0) -> Perturbation:
    """``q = h (1 + cos(pi s))/2`` on ``|s| < 1``; ``|q''| <= |h| pi^2 / (2R^2)``."""
    if not radius > 0:
        raise ConfigError("cosine-bump: radius must be positive")
    h, R = float(height), float(radius)

    def value(t):
        s = (np.asarray(t, dtype=float) - center) / R
        return np.where(np.abs(s) < 1, 0.5 * h * (1.0 + np.cos(np.pi * s)), 0.0)

    def second(t):
        s = (np.asarray(t, dtype=float) - center) / R
        return np.where(np.abs(s) < 1, -0.5 * h * (np.pi / R) ** 2 * np.cos(np.pi * s), 0.0)

    return Perturbation(value=value, support_radius=R,
                        semiconvexity=abs(h) * np.pi**2 / (2 * R**2),
                        sup_pos=max(h, 0.0), sup_neg=max(-h, 0.0), center=center,
                        second_deriv=second, name=f"cosine-bump({h:g},{R:g})")


def odd_bump(height: float, radius: float = 1.0, smoothness: int = 2, center: float = 0.0) -> Perturbation:
    """Antisymmetric bump ``q = h s (1 - s^2)^k / M`` with ``max |q| = |h|``.

    ``M = (2k+1)^(-1/2) (2k/(2k+1))^k`` is the maximum of ``s (1-s^2)^k``.
    """
    k = int(smoothness)
    if k < 2 or k != smoothness:
        raise ConfigError("odd-bump: smoothness must be an integer >= 2")
    h, R = float(height), float(radius)
    M = (2 * k / (2 * k + 1)) ** k / math.sqrt(2 * k + 1)

    def value(t):
        s = (np.asarray(t, dtype=float) - center) / R
        w = np.clip(1.0 - s * s, 0.0, None)
        return np.where(np.abs(s) < 1, h * s * w**k / M, 0.0)

    def second(t):
        s = (np.asarray(t, dtype=float) - center) / R
        w = np.clip(1.0 - s * s, 0.0, None)
        d2 = (-2 * (k - 1) * s * w ** (k - 2) * (1 - (2 * k + 1) * s * s)
              - 2 * (2 * k + 1) * s * w ** (k - 1))
        return np.where(np.abs(s) < 1, h / (M * R**2) * d2, 0.0)

    # q'' is odd, so the semiconvexity constant is max |q''| on the support;
    # a dense scan plus a 1e-6 relative margin covers the grid error.
    s = np.linspace(-1.0, 1.0, 200001)
    lam_q = float(np.max(np.abs(second(center + R * s)))) * (1 + 1e-6)
    return Perturbation(value=value, support_radius=R, semiconvexity=lam_q,
                        sup_pos=abs(h), sup_neg=abs(h), center=center,
                        second_deriv=second, name=f"odd-bump({h:g},{R:g},{k})")


def sine(height: float, freq: float = 1.0) -> Perturbation:
    """Bounded but not compactly supported ``q = h sin(freq t)``."""
    h, w = float(height), float(freq)
    return Perturbation(value=lambda t: h * np.sin(w * np.asarray(t, dtype=float)),
                        support_radius=math.inf, semiconvexity=abs(h) * w * w,
                        sup_pos=abs(h), sup_neg=abs(h),
                        second_deriv=lambda t: -h * w * w * np.sin(w * np.asarray(t, dtype=float)),
                        name=f"sine({h:g},{w:g})")


POTENTIALS = {
    "gaussian": gaussian,
    "quartic-regularized": quartic_regularized,
    "smoothed-abs": smoothed_abs,
}

PERTURBATIONS = {
    "bump": bump,
    "cosine-bump": cosine_bump,
    "odd-bump": odd_bump,
    "sine": sine,
}

_SPEC_RE = re.compile(r"^\s*([A-Za-z][\w-]*)\s*(?:\((.*)\))?\s*$")


def parse_spec(text: str):
    """Split ``name(a, b, key=c)`` into ``(name, args, kwargs)``."""
    m = _SPEC_RE.match(text)
    if not m:
        raise ConfigError(f"malformed catalog spec {text!r}")
    name, body = m.group(1).lower().replace("_", "-"), m.group(2)
    args, kwargs = [], {}
    if body and body.strip():
        for item in body.split(","):
            item = item.strip()
            if not item:
                raise ConfigError(f"empty argument in {text!r}")
            key = None
            if "=" in item:
                key, item = (s.strip() for s in item.split("=", 1))
            try:
                val = float(item)
            except ValueError:
                raise ConfigError(f"non-numeric argument {item!r} in {text!r}") from None
            if key is None:
                if kwargs:
                    raise ConfigError(f"positional argument after keyword in {text!r}")
                args.append(val)
            else:
                kwargs[key.replace("-", "_")] = val
    return name, args, kwargs


def _int_args(fn, args, kwargs):
    # smoothness is integral; accept "2" or "2.0"
    if fn in (bump, odd_bump):
        if len(args) >= 3:
            args[2] = int(args[2]) if float(args[2]).is_integer() else args[2]
        if "smoothness" in kwargs and float(kwargs["smoothness"]).is_integer():
            kwargs["smoothness"] = int(kwargs["smoothness"])
    return args, kwargs


def potential_from_spec(text: str) -> Potential:
    name, args, kwargs = parse_spec(text)
    if name not in POTENTIALS:
        raise ConfigError(f"unknown potential {name!r}; known: {sorted(POTENTIALS)}")
    try:
        return POTENTIALS[name](*args, **kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad arguments for {name}: {exc}") from None


def perturbation_from_spec(text: str):
    """Return a ``Perturbation`` or ``None`` for ``none``/``zero``."""
    name, args, kwargs = parse_spec(text)
    if name in ("none", "zero"):
        return None
    if name not in PERTURBATIONS:
        raise ConfigError(f"unknown perturbation {name!r}; known: {sorted(PERTURBATIONS)}")
    fn = PERTURBATIONS[name]
    args, kwargs = _int_args(fn, args, kwargs)
    try:
        return fn(*args, **kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad arguments for {name}: {exc}") from None


def theorem_1_2_instances():
    """Twelve (label, V, q) pairs spanning potentials and bump shapes."""
    out = []
    for vname, V in (("gaussian", gaussian(1.0)), ("quartic", quartic_regularized(1.0, 0.5))):
        for q in (bump(0.05, 1.0), bump(0.3, 1.5, 3), bump(-0.5, 1.0),
                  cosine_bump(1.0, 2.0), odd_bump(0.2, 1.0), odd_bump(1.0, 2.0, 3)):
            out.append((f"{vname}/{q.name}", V, q))
    return out
