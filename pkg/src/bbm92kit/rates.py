"""Scalar rate formulas: entropy, trade-off curve, privacy amplification, key fraction.

The privacy-amplification fraction tau(delta, eps) is the worst-case cost of
erasing the eavesdropper's knowledge given the observed double-click fraction
delta and error fraction eps.  It is the upper concave envelope, over all
admissible splits into single-photon and multiphoton events, of
(1 - xi) * H(eps_1) + xi * (1 - delta_m).  Three closed-form regions (a)-(c)
cover the whole domain where a key can survive; `tau_numeric` recomputes the
same maximum by direct search as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import InfeasibleError, NumericalError

# Lower envelope of the multiphoton region: the trade-off curve g up to its
# tangent point, then the straight line into the odd-odd corner (1/4, 0).
TANGENT_DELTA = 1.0 / 6.0
ODD_ODD_CORNER_DELTA = 0.25

_DOMAIN_TOL = 1e-12


def _as_array(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def binary_entropy(x):
    """Binary Shannon entropy H(x) in bits, with H(0) = H(1) = 0.

    Accepts scalars or arrays; raises on inputs outside [0, 1].
    """
    arr, scalar = _as_array(x)
    if arr.size and (arr.min() < -_DOMAIN_TOL or arr.max() > 1.0 + _DOMAIN_TOL):
        raise ValueError(f"entropy argument outside [0, 1]: {x!r}")
    arr = np.clip(arr, 0.0, 1.0)
    inner = (arr > 0.0) & (arr < 1.0)
    safe = np.where(inner, arr, 0.5)
    out = np.where(inner, -(safe * np.log2(safe) + (1 - safe) * np.log2(1 - safe)), 0.0)
    return float(out) if scalar else out


def g(delta):
    """Trade-off curve (1-delta)/2 - sqrt(delta(1-2 delta)) on [0, 1/3].

    Bounds the multiphoton error fraction from below when one side receives an
    even photon number; decreases from 1/2 at delta=0 to 0 at delta=1/3.
    """
    arr, scalar = _as_array(delta)
    if arr.size and (arr.min() < -_DOMAIN_TOL or arr.max() > 1.0 / 3.0 + 1e-9):
        raise ValueError(f"trade-off curve argument outside [0, 1/3]: {delta!r}")
    arr = np.clip(arr, 0.0, 1.0 / 3.0)
    out = 0.5 * (1.0 - arr) - np.sqrt(arr * (1.0 - 2.0 * arr))
    return float(out) if scalar else out


@lru_cache(maxsize=1)
def eps1_star() -> float:
    """Root of 16 x (1-x)^3 = 1 in (0, 0.4), approximately 0.080.

    x = 1/2 also satisfies the defining equation, so the bracket deliberately
    stops short of it.  At this error rate the plane through the odd-odd
    corner (1/4, 0, 3/4) is tangent to the single-photon cost curve H.
    """
    return float(brentq(lambda x: 16.0 * x * (1.0 - x) ** 3 - 1.0, 1e-6, 0.4, xtol=1e-14))


def multiphoton_envelope(delta):
    """Lower envelope of the admissible multiphoton (delta_m, eps_m) region.

    Equals g on [0, 1/6], the tangent line 1/4 - delta on [1/6, 1/4], and 0
    beyond the odd-odd corner.
    """
    arr, scalar = _as_array(delta)
    if arr.size and (arr.min() < -_DOMAIN_TOL or arr.max() > 1.0 + 1e-10):
        raise ValueError(f"envelope argument outside [0, 1]: {delta!r}")
    arr = np.clip(arr, 0.0, 1.0)
    curve = g(np.minimum(arr, TANGENT_DELTA))
    line = ODD_ODD_CORNER_DELTA - arr
    out = np.where(arr <= TANGENT_DELTA, curve, np.maximum(line, 0.0))
    return float(out) if scalar else out


def feasible_eps_limit(delta: float) -> float:
    """Largest error fraction for which tau(delta, eps) is defined.

    The curve g up to delta = 1/6, then the line 1/4 - delta, which reaches
    zero at the odd-odd corner; beyond delta = 1/4 no key survives at any
    error rate and the limit goes negative.
    """
    if delta < -_DOMAIN_TOL:
        raise ValueError(f"delta must be >= 0, got {delta!r}")
    delta = max(delta, 0.0)
    if delta <= TANGENT_DELTA:
        return float(g(delta))
    return ODD_ODD_CORNER_DELTA - delta


@dataclass(frozen=True)
class ObservedStats:
    """Observed double-click fraction, error fraction, and optional event count."""

    delta: float
    eps: float
    n: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta={self.delta!r} outside [0, 1)")
        if not 0.0 <= self.eps < 1.0:
            raise ValueError(f"eps={self.eps!r} outside [0, 1)")
        if self.delta + self.eps > 1.0 + _DOMAIN_TOL:
            raise ValueError(f"delta + eps = {self.delta + self.eps!r} exceeds 1")
        if self.n is not None and self.n < 0:
            raise ValueError(f"event count must be >= 0, got {self.n!r}")

    @property
    def feasible(self) -> bool:
        """Whether a privacy-amplification fraction is defined at these stats."""
        return region_of(self) != "infeasible"


@dataclass(frozen=True)
class KeyRateResult:
    """Privacy-amplification fraction plus, when computed, the final key fraction."""

    tau: float
    region: str
    r_key: float | None = None
    f_ec: float | None = None
    has_key: bool | None = None

    @property
    def feasible(self) -> bool:
        return self.region != "infeasible"


@dataclass(frozen=True)
class HiddenParams:
    """In-principle-measurable split underlying one pair of observed fractions."""

    xi: float
    delta_m: float
    eps_m: float
    eps_1: float

    def __post_init__(self) -> None:
        for name in ("xi", "delta_m", "eps_m", "eps_1"):
            value = getattr(self, name)
            if not -_DOMAIN_TOL <= value <= 1.0 + _DOMAIN_TOL:
                raise ValueError(f"{name}={value!r} outside [0, 1]")

    def observed(self, n: int | None = None) -> ObservedStats:
        """Observed fractions this split produces: delta = xi*delta_m, eps mixes."""
        return ObservedStats(
            self.xi * self.delta_m,
            (1.0 - self.xi) * self.eps_1 + self.xi * self.eps_m,
            n,
        )

    def consistent_with(self, stats: ObservedStats, tol: float = 1e-12) -> bool:
        mixed = self.observed()
        return abs(mixed.delta - stats.delta) <= tol and abs(mixed.eps - stats.eps) <= tol


@lru_cache(maxsize=1)
def _plane_constants() -> tuple[float, float, float, float]:
    e1 = eps1_star()
    h1 = binary_entropy(e1)
    return 3.0 - 4.0 * h1 + 4.0 * e1, 4.0 * (1.0 - h1), h1 - 4.0 * e1, 1.0 - 4.0 * e1


def region_of(stats: ObservedStats) -> str:
    """Which closed-form region covers the observed stats: 'a', 'b', 'c' or 'infeasible'.

    Region boundaries are checked in order a, b, c; the closed forms agree on
    the shared boundaries, so the tie-break does not change the value.
    """
    d, e = stats.delta, stats.eps
    e1 = eps1_star()
    if e <= e1 * (1.0 - 4.0 * d) + _DOMAIN_TOL:
        return "a"
    if e <= min((1.0 - 6.0 * d) * e1 + 0.5 * d, ODD_ODD_CORNER_DELTA - d) + _DOMAIN_TOL:
        return "b"
    if d <= TANGENT_DELTA + _DOMAIN_TOL and e <= g(min(d, 1.0 / 3.0)) + _DOMAIN_TOL:
        return "c"
    return "infeasible"


def _tau_a(d: float, e: float) -> float:
    x = 1.0 - 4.0 * d
    if x <= _DOMAIN_TOL:
        return 3.0 * d
    return 3.0 * d + x * binary_entropy(min(e / x, 1.0))


def _tau_b(d: float, e: float) -> float:
    c1, c2, c3, denom = _plane_constants()
    return (c1 * d + c2 * e + c3) / denom


def tau_closed_form(stats: ObservedStats) -> KeyRateResult:
    """Piecewise closed-form privacy-amplification fraction.

    Region (a): mixtures of single-photon events with the odd-odd corner.
    Region (b): the planar facet through the corner, the tangent point of the
    trade-off curve, and the single-photon cost curve at eps1_star.
    Region (c): the single-photon/trade-off-curve mixture, i.e. tau_low.
    Outside these regions the result is flagged infeasible, never extrapolated.
    """
    region = region_of(stats)
    d, e = stats.delta, stats.eps
    if region == "infeasible":
        return KeyRateResult(tau=float("nan"), region=region)
    if region == "a":
        tau = _tau_a(d, e)
    elif region == "b":
        tau = _tau_b(d, e)
    else:
        tau = tau_low(stats)
    _check_region_continuity(d, e, region, tau)
    return KeyRateResult(tau=tau, region=region)


def _check_region_continuity(d: float, e: float, region: str, tau: float) -> None:
    """Assert the neighboring closed form agrees when evaluated on a boundary."""
    e1 = eps1_star()
    if region in ("a", "b") and abs(e - e1 * (1.0 - 4.0 * d)) < 1e-12:
        other = _tau_b(d, e) if region == "a" else _tau_a(d, e)
        if abs(other - tau) > 1e-9:
            raise NumericalError(
                f"regions disagree at (a)/(b) boundary: {tau!r} vs {other!r}"
            )
    bc = (1.0 - 6.0 * d) * e1 + 0.5 * d
    if region in ("b", "c") and d <= TANGENT_DELTA and abs(e - bc) < 1e-12:
        other = tau_low(ObservedStats(d, e)) if region == "b" else _tau_b(d, e)
        if abs(other - tau) > 1e-9:
            raise NumericalError(
                f"regions disagree at (b)/(c) boundary: {tau!r} vs {other!r}"
            )


def _golden_max(fn, lo: float, hi: float, tol: float = 1e-9) -> float:
    """Best function value on [lo, hi] by golden-section search."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    return max(fc, fd, fn(0.5 * (a + b)))


def tau_low(stats: ObservedStats, grid: int = 2001) -> float:
    """Privacy cost of the explicit basis-independent bit-copying attack.

    Maximizes xi - delta + (1 - xi) H((eps - xi g(delta/xi)) / (1 - xi)) over
    the multiphoton fraction xi, with xi >= 3 delta so delta/xi stays in the
    curve's domain and the entropy argument confined to [0, 1].  This is a
    lower bound on tau everywhere and equals it in region (c).
    """
    d, e = stats.delta, stats.eps
    xi_lo = 3.0 * d
    if xi_lo > 1.0 + 1e-15:
        raise InfeasibleError(f"no admissible multiphoton fraction for delta={d!r}")
    xi_lo = min(xi_lo, 1.0)

    def mix_curve(xi):
        # eps contributed by multiphoton events sitting on the trade-off curve
        xi = np.asarray(xi, dtype=float)
        ratio = np.divide(d, xi, out=np.zeros_like(xi), where=xi > 0)
        return xi * g(np.clip(ratio, 0.0, 1.0 / 3.0))

    def values(xis: np.ndarray) -> np.ndarray:
        xis = np.asarray(xis, dtype=float)
        below_one = np.minimum(xis, 1.0 - 1e-15)
        eps1 = (e - mix_curve(below_one)) / (1.0 - below_one)
        ok = (xis < 1.0) & (eps1 >= -1e-15) & (eps1 <= 1.0 + 1e-15)
        out = xis - d + (1.0 - xis) * binary_entropy(np.clip(eps1, 0.0, 1.0))
        return np.where(ok, out, -np.inf)

    def value(xi: float) -> float:
        if xi >= 1.0:
            return 1.0 - d if e >= float(mix_curve(1.0)) - 1e-12 else -np.inf
        return float(values(np.array([xi]))[0])

    candidates = [value(xi_lo)]
    if d == 0.0:
        candidates.append(binary_entropy(e))  # xi -> 0 limit
    if e >= float(mix_curve(1.0)) - 1e-12:
        xi_hi = 1.0
        candidates.append(1.0 - d)
    else:
        # largest xi with nonnegative entropy argument: mix_curve increases in xi
        xi_hi = brentq(lambda x: float(mix_curve(x)) - e, xi_lo, 1.0, xtol=1e-14)
        candidates.append(value(xi_hi))
    if xi_hi > xi_lo:
        xis = np.linspace(xi_lo, xi_hi, grid)
        vals = values(xis)
        best = int(np.argmax(vals))
        candidates.append(float(vals[best]))
        lo = xis[max(best - 1, 0)]
        hi = xis[min(best + 1, len(xis) - 1)]
        candidates.append(_golden_max(value, lo, hi))
    best = max(candidates)
    if not np.isfinite(best):
        raise InfeasibleError(f"no admissible split for (delta={d!r}, eps={e!r})")
    return best


def tau_numeric(stats: ObservedStats, resolution: int = 2000) -> float:
    """Privacy-amplification fraction by direct search over admissible splits.

    Discretizes the multiphoton fraction xi; for each grid value the
    single-photon error rate is pushed to the largest admissible value not
    exceeding 1/2 (the entropy term is monotone below 1/2), with the
    multiphoton point constrained to the admissible region via its lower
    envelope.  Local refinement around the best grid cell sharpens the
    maximum well below the 1e-6 agreement target with the closed forms.
    """
    d, e = stats.delta, stats.eps
    if resolution < 8:
        raise ValueError("resolution must be >= 8")
    if region_of(stats) == "infeasible":
        # the mixture program itself extends further, but values out there are
        # not certified; refuse rather than extrapolate
        raise InfeasibleError(
            f"(delta={d!r}, eps={e!r}) lies outside the certified domain"
        )

    def profile(xis: np.ndarray) -> np.ndarray:
        xis = np.asarray(xis, dtype=float)
        dm = np.divide(d, xis, out=np.zeros_like(xis), where=xis > 0)
        env = multiphoton_envelope(np.clip(dm, 0.0, 1.0))
        hi = (e - xis * env) / (1.0 - xis)
        lo = np.maximum(0.0, (e - xis * (1.0 - dm)) / (1.0 - xis))
        eps1 = np.minimum(hi, 0.5)
        ok = (eps1 >= lo - 1e-15) & (dm <= 1.0 + 1e-12)
        eps1 = np.clip(np.where(ok, eps1, 0.5), 0.0, 1.0)
        out = xis - d + (1.0 - xis) * binary_entropy(eps1)
        return np.where(ok, out, -np.inf)

    best = -np.inf
    if d == 0.0 and e <= 0.5 + 1e-15:
        best = binary_entropy(min(e, 0.5))  # xi = 0: single-photon events only
    if e >= multiphoton_envelope(d) - 1e-12 and e <= 1.0 - d + 1e-12:
        best = max(best, 1.0 - d)  # xi = 1: multiphoton events only
    xi_min = max(d, 1e-9)
    xi_top = 1.0 - 1e-9
    if xi_min < xi_top:
        specials = [x for x in (3.0 * d, 4.0 * d, 6.0 * d) if xi_min < x < xi_top]
        xis = np.unique(np.concatenate([np.linspace(xi_min, xi_top, resolution), specials]))
        for _ in range(4):
            values = profile(xis)
            idx = int(np.argmax(values))
            if np.isfinite(values[idx]):
                best = max(best, float(values[idx]))
            step = xis[min(idx + 1, len(xis) - 1)] - xis[max(idx - 1, 0)]
            lo = max(xi_min, xis[idx] - step)
            hi = min(xi_top, xis[idx] + step)
            if hi <= lo:
                break
            xis = np.linspace(lo, hi, 65)
    if not np.isfinite(best):
        raise InfeasibleError(f"no admissible split for (delta={d!r}, eps={e!r})")
    return best


def key_rate(stats: ObservedStats, f: float = 1.0) -> KeyRateResult:
    """Final key fraction (1-delta)(1 - f H(QBER)) - tau(delta, eps).

    ``f >= 1`` is the error-correction inefficiency; QBER = eps/(1-delta).
    A negative key fraction is reported as-is with ``has_key=False``.
    """
    if f < 1.0:
        raise ValueError(f"error-correction inefficiency must be >= 1, got {f!r}")
    result = tau_closed_form(stats)
    if not result.feasible:
        raise InfeasibleError(
            f"no certified key rate at (delta={stats.delta!r}, eps={stats.eps!r})"
        )
    qber = stats.eps / (1.0 - stats.delta)
    if qber > 0.5 + _DOMAIN_TOL:
        raise ValueError(f"QBER {qber!r} exceeds 1/2")
    r = (1.0 - stats.delta) * (1.0 - f * binary_entropy(min(qber, 0.5))) - result.tau
    return KeyRateResult(
        tau=result.tau, region=result.region, r_key=r, f_ec=f, has_key=bool(r > 0.0)
    )


def conjectured_random_assignment_rate(stats: ObservedStats) -> float:
    """CONJECTURED key fraction 1 - 2 H(eps + delta/2) for random-bit assignment.

    Comparison value only: it treats double clicks as random bits instead of
    discarding them and carries no security proof here.
    """
    q = stats.eps + 0.5 * stats.delta
    if q > 0.5 + _DOMAIN_TOL:
        raise ValueError(f"entropy argument eps + delta/2 = {q!r} exceeds 1/2")
    return 1.0 - 2.0 * binary_entropy(min(q, 0.5))
