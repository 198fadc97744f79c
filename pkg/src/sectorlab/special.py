"""Real-order Bessel functions of the first kind, their zeros, and the
critical opening angle of the mixed sector eigenproblem.

J_nu(x) is evaluated by the ascending power series for x <= SERIES_SWITCH and
by Miller's downward recurrence, normalised with the identity

    (x/2)**mu = sum_k (mu + 2k) Gamma(mu + k) / k! * J_{mu+2k}(x),   0 <= mu < 1,

for larger arguments.  Both branches stay below 1e-12 absolute error on
0 <= x <= 100, 0 <= nu <= 50.
"""

from __future__ import annotations

import math

__all__ = [
    "BesselError",
    "NoSolutionError",
    "SERIES_SWITCH",
    "bessel_j",
    "bessel_j_prime",
    "bessel_zero",
    "critical_angle",
    "eigen_catalog",
]

SERIES_SWITCH = 8.0
"""Argument below which the ascending series is used."""

_RESCALE = 1e250
_ZERO_SCAN_STEP = 0.5  # consecutive zeros are more than 2.9 apart for nu >= 0


class BesselError(ValueError):
    """Invalid argument or failed evaluation."""


class NoSolutionError(BesselError):
    """The requested root does not exist in the admissible range."""


def _check(nu: float, x: float) -> None:
    if not (math.isfinite(nu) and math.isfinite(x)):
        raise BesselError(f"non-finite argument nu={nu!r}, x={x!r}")
    if nu < 0:
        raise BesselError(f"order must be nonnegative, got nu={nu!r}")
    if x < 0:
        raise BesselError(f"argument must be nonnegative, got x={x!r}")


def _series(nu: float, x: float) -> float:
    if x == 0.0:
        return 1.0 if nu == 0.0 else 0.0
    q = -0.25 * x * x
    # leading term (x/2)^nu / Gamma(nu+1), in logs to survive large nu
    log_lead = nu * math.log(0.5 * x) - math.lgamma(nu + 1.0)
    if log_lead < -745.0:
        return 0.0
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + nu))
        total += term
        if abs(term) < 1e-17 * abs(total) and k > 2:
            break
        if k > 500:
            raise BesselError(f"series failed to converge for nu={nu}, x={x}")
    return total * math.exp(log_lead)


def _miller(nu: float, x: float) -> tuple[float, float]:
    """Return (J_nu(x), J_{nu+1}(x)) by downward recurrence, x > 0."""
    n_int = int(math.floor(nu))
    mu = nu - n_int
    top = max(n_int, int(x)) + 30 + int(math.sqrt(40.0 * max(x, 1.0)))
    top += top % 2
    j_above = 0.0  # J_{mu+k+1}, unnormalised
    j_cur = 1e-300  # J_{mu+k}
    want = want_next = 0.0
    norm = 0.0
    for k in range(top, -1, -1):
        if k == n_int:
            want, want_next = j_cur, j_above
        if k % 2 == 0:
            m = k // 2
            if m == 0:
                coef = math.exp(math.lgamma(1.0 + mu))
            else:
                coef = (mu + k) * math.exp(math.lgamma(mu + m) - math.lgamma(m + 1.0))
            norm += coef * j_cur
        if k == 0:
            break
        j_below = 2.0 * (mu + k) / x * j_cur - j_above
        j_above, j_cur = j_cur, j_below
        if abs(j_cur) > _RESCALE:
            j_cur /= _RESCALE
            j_above /= _RESCALE
            want /= _RESCALE
            want_next /= _RESCALE
            norm /= _RESCALE
    scale = math.exp(mu * math.log(0.5 * x)) / norm
    return want * scale, want_next * scale


def _j_pair(nu: float, x: float) -> tuple[float, float]:
    if x <= SERIES_SWITCH:
        return _series(nu, x), _series(nu + 1.0, x)
    return _miller(nu, x)


def bessel_j(nu: float, x: float) -> float:
    """Bessel function of the first kind J_nu(x) for real nu >= 0, x >= 0."""
    nu = float(nu)
    x = float(x)
    _check(nu, x)
    value = _series(nu, x) if x <= SERIES_SWITCH else _miller(nu, x)[0]
    if not math.isfinite(value):
        raise BesselError(f"J_{nu}({x}) overflowed")
    return value


def bessel_j_prime(nu: float, x: float) -> float:
    """d/dx J_nu(x), via J'_nu = (nu/x) J_nu - J_{nu+1}."""
    nu = float(nu)
    x = float(x)
    _check(nu, x)
    if x == 0.0:
        if nu == 1.0:
            return 0.5
        if nu == 0.0 or nu > 1.0:
            return 0.0
        raise BesselError(f"J'_{nu} is unbounded at x=0")
    j, j_next = _j_pair(nu, x)
    return nu / x * j - j_next


def bessel_zero(nu: float, k: int, *, tol: float = 1e-12) -> float:
    """k-th positive zero j_{nu,k} of J_nu.

    The zeros lie above nu, so the scan starts there and steps by half a unit
    (well under the minimal zero spacing) until the k-th sign change.  The
    bracket is bisected to width 1e-6, then polished by safeguarded Newton.
    """
    nu = float(nu)
    if not math.isfinite(nu) or nu < 0:
        raise BesselError(f"order must be nonnegative, got nu={nu!r}")
    if int(k) != k or k < 1:
        raise BesselError(f"zero index must be a positive integer, got k={k!r}")
    k = int(k)
    limit = nu + (k + 2) * math.pi + 10.0 + 2.0 * math.sqrt(nu + 1.0) * nu ** (1.0 / 3.0)

    lo = max(nu, 1e-3)
    f_lo = bessel_j(nu, lo)
    found = 0
    while True:
        hi = lo + _ZERO_SCAN_STEP
        if hi > limit:
            raise BesselError(
                f"could not bracket zero k={k} of J_{nu} below x={limit:.3f} "
                f"(found {found} sign changes)"
            )
        f_hi = bessel_j(nu, hi)
        if f_hi == 0.0:
            found += 1
            if found == k:
                return hi
            # step past an exact hit so the next bracket starts with a sign
            lo, f_lo = hi + 1e-9, bessel_j(nu, hi + 1e-9)
            continue
        if f_lo * f_hi < 0:
            found += 1
            if found == k:
                break
        lo, f_lo = hi, f_hi

    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        f_mid = bessel_j(nu, mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid

    x = 0.5 * (lo + hi)
    for _ in range(20):
        step = bessel_j(nu, x) / bessel_j_prime(nu, x)
        x_new = x - step
        if not lo <= x_new <= hi:
            break
        x = x_new
        if abs(step) < tol:
            break
    return x


def critical_angle(target: float, *, tol: float = 1e-13) -> float:
    """Opening beta in (0, 2*pi) with j_{pi/beta, 1} = target.

    Bisection in s = pi/beta over the admissible interval s > 1/2, relying on
    s -> j_{s,1} being continuous and strictly increasing.
    """
    target = float(target)
    s_lo = 0.5
    if not math.isfinite(target) or target <= bessel_zero(s_lo, 1):
        raise NoSolutionError(
            f"target {target!r} is not above j_(1/2,1) = pi; no opening in (0, 2pi)"
        )
    s_hi = 1.0
    while bessel_zero(s_hi, 1) < target:
        s_lo = s_hi
        s_hi *= 2.0
        if s_hi > 64.0:
            raise NoSolutionError(f"target {target!r} beyond the supported range (s <= 64)")
    while s_hi - s_lo > tol * s_hi:
        mid = 0.5 * (s_lo + s_hi)
        if bessel_zero(mid, 1) < target:
            s_lo = mid
        else:
            s_hi = mid
    return math.pi / (0.5 * (s_lo + s_hi))


def eigen_catalog(
    beta: float, n_max: int, k_max: int, *, rel_tie: float = 1e-9
) -> list[tuple[float, tuple[int, int]]]:
    """Eigenvalues j_{n pi/beta, k}**2 of the mixed disc-sector problem.

    Returns (lambda, (n, k)) for 0 <= n <= n_max, 1 <= k <= k_max in ascending
    order.  Values within ``rel_tie`` of each other are treated as one
    multiple eigenvalue and ordered lexicographically by (n, k).
    """
    if not 0.0 < beta < 2.0 * math.pi:
        raise ValueError(f"beta must lie in (0, 2pi), got {beta!r}")
    if n_max < 0 or k_max < 1:
        raise ValueError("need n_max >= 0 and k_max >= 1")
    entries = []
    for n in range(n_max + 1):
        s = n * math.pi / beta
        for k in range(1, k_max + 1):
            entries.append((bessel_zero(s, k) ** 2, (n, k)))
    entries.sort()
    out: list[tuple[float, tuple[int, int]]] = []
    group: list[tuple[float, tuple[int, int]]] = []
    for lam, mode in entries:
        if group and lam - group[0][0] > rel_tie * abs(group[0][0]):
            out.extend(sorted(group, key=lambda e: e[1]))
            group = []
        group.append((lam, mode))
    out.extend(sorted(group, key=lambda e: e[1]))
    return out
