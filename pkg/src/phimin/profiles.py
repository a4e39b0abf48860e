"""Height-dependent weight profiles.

A profile is a scalar function ``phi`` of the vertical coordinate, together
with its first two derivatives.  Every surface construction in this package
is driven by such a profile through the density ``exp(phi(z))``:  the weighted
mean-curvature equation reads ``H = dphi(z) * <N, e3>``.

Four kinds are supported:

* ``linear``   : phi(z) = m z on all of R (m != 0),
* ``log``      : phi(z) = a log z on (0, inf) (a != 0),
* ``series``   : dphi(u) = L u + b + sum c_n / u^n on (u_min, inf),
* ``custom``   : user-supplied callables (phi optional; it is then recovered
                 from dphi by quadrature against an anchor point).

Profiles may be strictly increasing or strictly decreasing; most of the
solvers require increasing ones and check the flag themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq


class ProfileError(ValueError):
    """Invalid profile parameters or evaluation outside the domain."""


class DomainError(ProfileError):
    """Argument outside the profile's height domain."""


def _as_float_pair(domain: Sequence[float]) -> Tuple[float, float]:
    lo, hi = float(domain[0]), float(domain[1])
    if not lo < hi:
        raise ProfileError(f"empty domain ({lo}, {hi})")
    return lo, hi


@dataclass
class WeightProfile:
    """Bundle of phi, dphi, ddphi on an open interval.

    ``kind`` is one of ``linear / log / series / custom`` and ``params`` keeps
    the defining constants for serialization.  ``increasing`` declares strict
    monotonicity of phi on the domain (checked by sampling at construction).
    ``sup_phi`` is the supremum of phi at the right end of the domain
    (``inf`` when phi is unbounded above); it decides whether the half-width
    integral can be finite at all.
    """

    phi: Callable[[np.ndarray], np.ndarray]
    dphi: Callable[[np.ndarray], np.ndarray]
    ddphi: Callable[[np.ndarray], np.ndarray]
    domain: Tuple[float, float]
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    increasing: bool = True
    sup_phi: float = math.inf
    # (L, b) with dphi(u) -> L*u + b as u -> inf, when that limit is known.
    asymptote: Optional[Tuple[float, float]] = None
    # growth exponent hint: dphi ~ u^alpha for large u (1 for linear kinds)
    growth_alpha: Optional[float] = None

    def __post_init__(self):
        self.domain = _as_float_pair(self.domain)
        self._check_monotone()

    # -- evaluation helpers ------------------------------------------------

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        lo, hi = self.domain
        return (z > lo) & (z < hi)

    def require_inside(self, z, what: str = "height") -> None:
        z = np.asarray(z, dtype=float)
        if not np.all(self.contains(z)):
            lo, hi = self.domain
            bad = z[~self.contains(z)]
            raise DomainError(
                f"{what} {bad.flat[0]!r} outside profile domain ({lo}, {hi})"
            )

    def phi_range(self) -> Tuple[float, float]:
        """Image of the open domain under phi (ordered)."""
        lo, hi = self.domain
        a = self._limit_phi(lo, side="right")
        b = self._limit_phi(hi, side="left")
        return (a, b) if a < b else (b, a)

    def _limit_phi(self, endpoint: float, side: str) -> float:
        if not math.isfinite(endpoint):
            # probe far out; linear/series grow without bound, log too
            probe = math.copysign(1e12, endpoint)
            try:
                val = float(self.phi(probe))
            except (OverflowError, FloatingPointError):
                return math.copysign(math.inf, endpoint) if self.increasing else -math.copysign(math.inf, endpoint)
            if abs(val) > 1e300:
                return math.copysign(math.inf, val)
            # fall back to declared sup
            return self.sup_phi if endpoint > 0 else -math.inf
        eps = max(abs(endpoint), 1.0) * 1e-9
        z = endpoint + eps if side == "right" else endpoint - eps
        return float(self.phi(z))

    def inverse_phi(self, w: float) -> float:
        """Solve phi(z) = w on the domain (phi strictly monotone)."""
        lo, hi = self.domain
        a, b = self._bracket(lambda z: float(self.phi(z)) - w, lo, hi)
        return brentq(lambda z: float(self.phi(z)) - w, a, b, xtol=1e-13, rtol=1e-13)

    def _bracket(self, f, lo, hi):
        # expand from a finite seed until f changes sign; domain ends may be inf
        seed_lo = lo + 1e-9 * max(1.0, abs(lo)) if math.isfinite(lo) else -1.0
        seed_hi = hi - 1e-9 * max(1.0, abs(hi)) if math.isfinite(hi) else 1.0
        a, b = seed_lo, seed_hi
        if a >= b:
            a, b = seed_lo, seed_lo + 1.0
        fa, fb = f(a), f(b)
        grow = 0
        while fa * fb > 0:
            grow += 1
            if grow > 200:
                raise DomainError("value not attained by phi on its domain")
            if abs(fa) < abs(fb):
                a = lo + (a - lo) * 0.5 if math.isfinite(lo) else a - 2 ** grow
                fa = f(a)
            else:
                b = hi - (hi - b) * 0.5 if math.isfinite(hi) else b + 2 ** grow
                fb = f(b)
        return a, b

    # -- validation --------------------------------------------------------

    def _check_monotone(self, n: int = 257) -> None:
        lo, hi = self.domain
        a = lo if math.isfinite(lo) else -50.0
        b = hi if math.isfinite(hi) else max(a + 1.0, 50.0)
        pad = (b - a) * 1e-6
        zs = np.linspace(a + pad, b - pad, n)
        try:
            d = np.asarray(self.dphi(zs), dtype=float)
        except (DomainError, OverflowError, FloatingPointError):
            # quadrature-backed closures may only be evaluable on part of
            # the window; keep the points that work
            vals = []
            for z in zs:
                try:
                    vals.append(float(self.dphi(z)))
                except (DomainError, OverflowError, FloatingPointError):
                    continue
            d = np.asarray(vals, dtype=float)
            if d.size < 32:
                raise ProfileError(
                    "dphi could not be sampled across enough of the domain "
                    "to check monotonicity")
        d = d[~np.isnan(d)]
        if self.increasing and not np.all(d > 0):
            raise ProfileError(
                "profile flagged increasing but dphi <= 0 somewhere on the domain"
            )
        if not self.increasing and not np.all(d < 0):
            raise ProfileError(
                "profile flagged decreasing but dphi >= 0 somewhere on the domain"
            )


# ---------------------------------------------------------------------------
# builtin constructors
# ---------------------------------------------------------------------------

def make_builtin(kind: str, *params, domain: Optional[Sequence[float]] = None,
                 increasing: Optional[bool] = None) -> WeightProfile:
    """Build one of the named profile kinds.

    make_builtin("linear", m)            phi = m z
    make_builtin("log", a)               phi = a log z
    make_builtin("series", L, b, c)      dphi = L u + b + sum c[n]/u^(n+1)
    """
    kind = kind.lower()
    if kind == "linear":
        (m,) = params
        m = float(m)
        if m == 0.0:
            raise ProfileError("linear profile needs a nonzero slope")
        inc = m > 0
        if increasing is not None and increasing != inc:
            raise ProfileError("linear slope sign contradicts the increasing flag")
        dom = _as_float_pair(domain) if domain is not None else (-math.inf, math.inf)
        return WeightProfile(
            phi=lambda z, m=m: m * np.asarray(z, dtype=float),
            dphi=lambda z, m=m: np.full_like(np.asarray(z, dtype=float), m),
            ddphi=lambda z: np.zeros_like(np.asarray(z, dtype=float)),
            domain=dom, kind="linear", params={"slope": m},
            increasing=inc,
            sup_phi=math.inf if inc else -math.inf,
            asymptote=(0.0, m), growth_alpha=0.0,
        )

    if kind == "log":
        (a,) = params
        a = float(a)
        if a == 0.0:
            raise ProfileError("log profile needs a nonzero exponent")
        inc = a > 0
        if increasing is not None and increasing != inc:
            raise ProfileError("log exponent sign contradicts the increasing flag")
        dom = _as_float_pair(domain) if domain is not None else (0.0, math.inf)
        if dom[0] < 0.0:
            raise ProfileError("log profile lives on positive heights")
        return WeightProfile(
            phi=lambda z, a=a: a * np.log(np.asarray(z, dtype=float)),
            dphi=lambda z, a=a: a / np.asarray(z, dtype=float),
            ddphi=lambda z, a=a: -a / np.asarray(z, dtype=float) ** 2,
            domain=dom, kind="log", params={"alpha": a},
            increasing=inc,
            sup_phi=math.inf if inc else -math.inf,
            asymptote=None, growth_alpha=-1.0,
        )

    if kind == "series":
        L, b = float(params[0]), float(params[1])
        coeffs = [float(c) for c in (params[2] if len(params) > 2 else [])]
        if L < 0:
            raise ProfileError("series profile needs L >= 0")
        if L == 0.0 and b <= 0.0:
            raise ProfileError("series profile with L = 0 needs b > 0")
        if domain is not None:
            dom = _as_float_pair(domain)
        else:
            dom = (0.0, math.inf) if (coeffs or L > 0) else (-math.inf, math.inf)

        def dd(u):
            u = np.asarray(u, dtype=float)
            out = np.full_like(u, L * 1.0) * u + b
            for n, c in enumerate(coeffs, start=1):
                out = out + c / u ** n
            return out

        def d2(u):
            u = np.asarray(u, dtype=float)
            out = np.full_like(u, L)
            for n, c in enumerate(coeffs, start=1):
                out = out - n * c / u ** (n + 1)
            return out

        def p(u):
            u = np.asarray(u, dtype=float)
            out = 0.5 * L * u ** 2 + b * u
            for n, c in enumerate(coeffs, start=1):
                if n == 1:
                    out = out + c * np.log(u)
                else:
                    out = out - c / ((n - 1) * u ** (n - 1))
            return out

        prof = WeightProfile(
            phi=p, dphi=dd, ddphi=d2, domain=dom, kind="series",
            params={"L": L, "b": b, "coeffs": coeffs},
            increasing=True, sup_phi=math.inf,
            asymptote=(L, b), growth_alpha=1.0 if L > 0 else 0.0,
        )
        return prof

    raise ProfileError(f"unknown builtin profile kind {kind!r}")


def make_custom(dphi: Callable, phi: Optional[Callable] = None,
                ddphi: Optional[Callable] = None,
                domain: Sequence[float] = (-math.inf, math.inf),
                increasing: bool = True,
                anchor: Optional[float] = None,
                growth_alpha: Optional[float] = None,
                asymptote: Optional[Tuple[float, float]] = None,
                params: Optional[dict] = None) -> WeightProfile:
    """Wrap user callables into a profile.

    When ``phi`` is omitted it is reconstructed from ``dphi`` by cumulative
    quadrature anchored at ``anchor`` (phi(anchor) = 0); the additive constant
    never enters the minimal-surface equation, only overall weights.
    When ``ddphi`` is omitted a central difference of ``dphi`` is used.
    """
    dom = _as_float_pair(domain)
    if phi is None:
        if anchor is None:
            anchor = dom[0] + 1.0 if math.isfinite(dom[0]) else 0.0
        phi = _antiderivative(dphi, anchor, dom)
    if ddphi is None:
        def ddphi(z, _d=dphi):
            z = np.asarray(z, dtype=float)
            h = 1e-6 * np.maximum(1.0, np.abs(z))
            return (np.asarray(_d(z + h)) - np.asarray(_d(z - h))) / (2 * h)
    sup = math.inf if increasing else -math.inf
    try:
        probe = dom[1] - 1e-6 if math.isfinite(dom[1]) else 1e9
        v = float(phi(probe))
        if math.isfinite(dom[1]) and math.isfinite(v):
            sup = v
    except Exception:
        pass
    return WeightProfile(phi=phi, dphi=dphi, ddphi=ddphi, domain=dom,
                         kind="custom", params=params or {},
                         increasing=increasing, sup_phi=sup,
                         asymptote=asymptote, growth_alpha=growth_alpha)


def _antiderivative(dphi: Callable, anchor: float, dom: Tuple[float, float]):
    """Antiderivative of dphi with value 0 at the anchor, via cached dense ODE
    solutions grown lazily in both directions."""
    cache = {"lo": anchor, "hi": anchor, "sols": []}

    def extend(target: float) -> None:
        if cache["lo"] <= target <= cache["hi"]:
            return
        # record only the span the solver actually covered: with a stiff or
        # overflowing integrand it can stop early, and claiming the full
        # requested interval would poison every later evaluation in it
        if target > cache["hi"]:
            a, b = cache["hi"], target + 0.25 * (target - anchor + 1.0)
            b = min(b, dom[1] - 1e-12) if math.isfinite(dom[1]) else b
        else:
            a, b = cache["lo"], target - 0.25 * (anchor - target + 1.0)
            b = max(b, dom[0] + 1e-12) if math.isfinite(dom[0]) else b
        y0 = _eval(a)
        if not math.isfinite(y0):
            raise DomainError(f"antiderivative diverges before {target}")
        # stop cleanly at a magnitude wall instead of letting the stepper
        # grind its step size down against float overflow
        wall = lambda t, y: 1e250 - abs(y[0])
        wall.terminal = True
        try:
            sol = solve_ivp(lambda t, y: [float(dphi(t))], (a, b), [y0],
                            rtol=1e-12, atol=1e-12, dense_output=True,
                            events=[wall])
        except ValueError as err:
            raise DomainError(
                f"antiderivative not integrable toward {target}") from err
        reached = float(sol.t[-1])
        if not math.isfinite(reached) or not math.isfinite(float(sol.y[0, -1])):
            raise DomainError(f"antiderivative diverges before {target}")
        if target > cache["hi"]:
            cache["sols"].append((a, reached, sol.sol))
            cache["hi"] = reached
        else:
            cache["sols"].append((reached, a, sol.sol))
            cache["lo"] = reached

    def _eval(z: float) -> float:
        if z == anchor:
            return 0.0
        for a, b, s in cache["sols"]:
            if a <= z <= b:
                return float(s(z)[0])
        raise DomainError(f"height {z} outside cached antiderivative range")

    def phi(z):
        z = np.asarray(z, dtype=float)
        flat = np.atleast_1d(z).ravel()
        for t in (flat.min(), flat.max()):
            extend(float(t))
        out = np.empty(flat.shape)
        done = flat == anchor
        out[done] = 0.0
        for a, b, s in cache["sols"]:
            m = ~done & (flat >= a) & (flat <= b)
            if m.any():
                out[m] = s(flat[m])[0]
                done |= m
        if not done.all():
            raise DomainError(
                f"height {flat[~done][0]} outside cached antiderivative range")
        return out.reshape(z.shape) if z.shape else float(out[0])

    return phi


# ---------------------------------------------------------------------------
# derived scalar functions
# ---------------------------------------------------------------------------

def lambda_of_z(profile: WeightProfile, z) -> np.ndarray:
    """dphi written as a function of w = phi(height): lambda(w) = dphi(phi^{-1}(w)).

    For the linear kind this is the constant slope; for the log kind it has
    the closed form a * exp(-w/a).
    """
    z = np.asarray(z, dtype=float)
    w_lo, w_hi = profile.phi_range()
    if np.any(z <= w_lo) or np.any(z >= w_hi):
        raise DomainError(f"value outside phi image ({w_lo}, {w_hi})")
    if profile.kind == "linear":
        m = profile.params["slope"]
        return np.full_like(z, m)
    if profile.kind == "log":
        a = profile.params["alpha"]
        return a * np.exp(-z / a)
    flat = np.atleast_1d(z).ravel()
    out = np.array([float(profile.dphi(profile.inverse_phi(w))) for w in flat])
    return out.reshape(z.shape) if z.shape else float(out[0])


def curly_g(profile: WeightProfile, u0: float, u) -> np.ndarray:
    """Integral of 1/dphi from u0 to u (strictly increasing in u).

    This is the reparametrized height that linearizes the far-field law for
    profiles whose dphi stays positive; see the asymptotics fitter.
    """
    profile.require_inside(u0)
    u = np.asarray(u, dtype=float)
    profile.require_inside(u)
    flat = np.atleast_1d(u).ravel()
    out = np.empty_like(flat)
    for i, ui in enumerate(flat):
        if ui == u0:
            out[i] = 0.0
            continue
        val, _err = quad(lambda s: 1.0 / float(profile.dphi(s)), u0, ui,
                         limit=200, epsabs=1e-13, epsrel=1e-12)
        out[i] = val
    return out.reshape(u.shape) if u.shape else float(out[0])


# small expression evaluator used by the CLI for custom profiles -------------

_EXPR_NS = {
    "np": np, "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp,
    "log": np.log, "sqrt": np.sqrt, "abs": np.abs, "pi": np.pi, "e": np.e,
    "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh, "arctan": np.arctan,
}


def expression_callable(expr: str) -> Callable:
    """Compile a one-variable numpy expression 'f(z)' into a callable.

    Only the names in a tiny math namespace are visible; no builtins.
    """
    code = compile(expr, "<profile-expr>", "eval")
    for name in code.co_names:
        if name not in _EXPR_NS and name != "z":
            raise ProfileError(f"unknown name {name!r} in profile expression")

    def f(z):
        return eval(code, {"__builtins__": {}}, {**_EXPR_NS, "z": np.asarray(z, dtype=float)})

    return f
