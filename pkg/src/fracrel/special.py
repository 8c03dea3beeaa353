"""Macdonald functions, the fractional-power normalization constant, and the
closed-form half-power heat kernel.

The Macdonald function K_nu is evaluated by three cooperating strategies:

* an ascending series built from the modified Bessel functions I_{+nu} and
  I_{-nu}, used for small arguments when nu is safely away from an integer
  (the I-pair difference cancels catastrophically near integer order);
* trapezoid quadrature of the integral representation
  K_nu(z) = int_0^inf exp(-z cosh w) cosh(nu w) dw, refined until the
  requested relative tolerance is met.  This path is valid for every
  (nu, z) and also backs the integer-order limit: at integer nu the
  function is evaluated at nu +- 1e-6 and averaged;
* the large-argument expansion sqrt(pi/(2z)) exp(-z) (1 + ...), with the
  running term monitored and a fallback to quadrature whenever the
  expansion cannot reach tolerance.

The series and quadrature branches are required to agree to 1e-8 relative
in an overlap window around the series cutoff; the test-suite enforces it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, PoleError

# Branch switch to the large-argument expansion.
ASYMPTOTIC_SWITCH_Z = 30.0
# Below this distance to the nearest integer the I-pair series is abandoned.
INTEGER_GUARD = 0.05
# Offset used when averaging around an exactly integer order.
INTEGER_EPS = 1e-6

_SERIES_MAX_TERMS = 60

# numpy 2.x renamed trapz; support both.
_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class BesselEvalConfig:
    """Evaluation controls for :func:`macdonald_k`.

    series_cutoff_z : arguments below this go to the ascending series.
    quad_rel_tol    : relative tolerance of the quadrature refinement.
    max_quad_nodes  : hard cap on quadrature nodes per refinement level.
    """

    series_cutoff_z: float = 2.0
    quad_rel_tol: float = 1e-12
    max_quad_nodes: int = 20000

    def __post_init__(self):
        if not (0.5 <= self.series_cutoff_z <= 10.0):
            raise ConfigError("series_cutoff_z must lie in [0.5, 10]")
        if not (0.0 < self.quad_rel_tol <= 1e-6):
            raise ConfigError("quad_rel_tol must lie in (0, 1e-6]")
        if self.max_quad_nodes < 64:
            raise ConfigError("max_quad_nodes must be at least 64")


DEFAULT_BESSEL_CONFIG = BesselEvalConfig()


def gamma(x: float) -> float:
    """Gamma function on the real line with explicit pole rejection.

    Thin wrapper over the C library implementation; nonpositive integers
    raise :class:`PoleError` instead of returning garbage.
    """
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise PoleError(f"gamma pole at x={x:g}")
    return math.gamma(x)


def _iv_series(nu: float, z: np.ndarray) -> np.ndarray:
    # Ascending series of I_nu, term-recursive; z is expected small (<~ 10).
    half = 0.5 * z
    term = half**nu / gamma(nu + 1.0)
    total = term.copy()
    q = half * half
    for k in range(_SERIES_MAX_TERMS):
        term = term * q / ((k + 1.0) * (nu + k + 1.0))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def _kv_series(nu: float, z: np.ndarray) -> np.ndarray:
    # K from the I-pair; caller guarantees nu is away from integers.
    i_plus = _iv_series(nu, z)
    i_minus = _iv_series(-nu, z)
    return 0.5 * math.pi * (i_minus - i_plus) / math.sin(math.pi * nu)


def _kv_quadrature(nu: float, z: np.ndarray, cfg: BesselEvalConfig) -> np.ndarray:
    # Trapezoid on [0, w_max] of exp(-z(cosh w - 1)) cosh(nu w); returns the
    # scaled value exp(z) K_nu(z).  w_max makes the dropped tail < 1e-14
    # relative: past sinh w = (nu+30)/z the exponent falls at rate >= 30.
    zmin = float(np.min(z))
    w_max = math.asinh((nu + 30.0) / zmin) + 2.0
    zc = z[:, None]

    def evaluate(n_nodes: int) -> np.ndarray:
        w = np.linspace(0.0, w_max, n_nodes)
        expo = -zc * (np.cosh(w)[None, :] - 1.0) + _log_cosh(nu * w)[None, :]
        vals = np.exp(expo)
        return _trapezoid(vals, dx=w[1] - w[0], axis=1)

    n = max(256, int(w_max / 0.25) + 1)
    prev = evaluate(n)
    while True:
        n_next = 2 * n - 1
        if n_next > cfg.max_quad_nodes:
            return prev
        cur = evaluate(n_next)
        done = np.abs(cur - prev) <= cfg.quad_rel_tol * np.abs(cur)
        prev, n = cur, n_next
        if np.all(done):
            return prev


def _log_cosh(x: np.ndarray) -> np.ndarray:
    # log(cosh x) without overflow for large x.
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)


def _kv_asymptotic(nu: float, z: np.ndarray, rel_tol: float):
    # Scaled expansion exp(z) K_nu(z) ~ sqrt(pi/2z) sum_j c_j / z^j with the
    # running term monitored; entries whose terms start growing before the
    # tolerance is reached are flagged for the quadrature fallback.
    mu = 4.0 * nu * nu
    total = np.ones_like(z)
    term = np.ones_like(z)
    converged = np.zeros(z.shape, dtype=bool)
    frozen = np.zeros(z.shape, dtype=bool)
    for j in range(1, 40):
        factor = (mu - (2.0 * j - 1.0) ** 2) / (8.0 * j * z)
        new_term = term * factor
        active = ~frozen & ~converged
        frozen |= active & (np.abs(new_term) >= np.abs(term)) & (term != 0.0)
        active &= ~frozen
        term = np.where(active, new_term, term)
        total = np.where(active, total + new_term, total)
        converged |= active & (np.abs(term) <= rel_tol * np.abs(total))
        if np.all(converged | frozen):
            break
    return np.sqrt(0.5 * math.pi / z) * total, converged


def macdonald_k(nu: float, z, cfg: BesselEvalConfig | None = None,
                scaled: bool = False):
    """Macdonald function K_nu(z) for nu >= 0, z > 0.

    Parameters
    ----------
    nu : float
        Order, nonnegative.
    z : float or array_like
        Argument(s), strictly positive.
    cfg : BesselEvalConfig, optional
        Evaluation controls.
    scaled : bool
        When True, return exp(z) * K_nu(z), which stays representable for
        large arguments.

    Returns
    -------
    float or ndarray matching the shape of ``z``.
    """
    cfg = cfg or DEFAULT_BESSEL_CONFIG
    nu = float(nu)
    if nu < 0.0:
        raise DomainError(f"order must be nonnegative, got nu={nu:g}")
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if z_arr.size == 0:
        return np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z_arr)) or np.any(z_arr <= 0.0):
        raise DomainError("argument must be finite and strictly positive")

    flat = z_arr.ravel()
    out = np.empty_like(flat)

    near_int = abs(nu - round(nu)) < INTEGER_GUARD
    small = flat < cfg.series_cutoff_z
    large = flat >= ASYMPTOTIC_SWITCH_Z
    mid = ~small & ~large

    # quadrature serves the mid range always, and the small range near
    # integer order where the series cancels.
    if near_int:
        series_mask = np.zeros_like(small)
        quad_mask = small | mid
    else:
        series_mask = small
        quad_mask = mid

    if np.any(series_mask):
        zs = flat[series_mask]
        vals = _kv_series(nu, zs)
        out[series_mask] = vals * np.exp(zs) if scaled else vals
    if np.any(quad_mask):
        zq = flat[quad_mask]
        if nu == round(nu):
            # integer order: average the two neighbouring orders
            v = 0.5 * (_kv_quadrature(nu + INTEGER_EPS, zq, cfg)
                       + _kv_quadrature(max(nu - INTEGER_EPS, 0.0), zq, cfg))
        else:
            v = _kv_quadrature(nu, zq, cfg)
        out[quad_mask] = v if scaled else v * np.exp(-zq)
    if np.any(large):
        zl = flat[large]
        v, ok = _kv_asymptotic(nu, zl, cfg.quad_rel_tol)
        if not np.all(ok):
            zbad = zl[~ok]
            if nu == round(nu):
                vb = 0.5 * (_kv_quadrature(nu + INTEGER_EPS, zbad, cfg)
                            + _kv_quadrature(max(nu - INTEGER_EPS, 0.0), zbad, cfg))
            else:
                vb = _kv_quadrature(nu, zbad, cfg)
            v[~ok] = vb
        out[large] = v if scaled else v * np.exp(-zl)

    out = out.reshape(z_arr.shape)
    if np.isscalar(z) or np.ndim(z) == 0:
        return float(out[()]) if out.shape == () else float(out[0])
    return out


def frac_power_constant(N: int, s: float) -> float:
    """Normalization constant of the singular-integral representation.

    C(N, s) = -2^(1 + s - N/2) / (pi^(N/2) * Gamma(-s)), positive for
    s in (0, 1).  C(1, 1/2) = 1/pi.
    """
    if int(N) != N or N < 1:
        raise DomainError(f"dimension must be a positive integer, got {N!r}")
    if not (0.0 < s < 1.0):
        raise DomainError(f"power must lie in (0, 1), got s={s:g}")
    return -(2.0 ** (1.0 + s - N / 2.0)) / (math.pi ** (N / 2.0) * gamma(-s))


def half_kernel_explicit(t: float, x, m: float, N: int = 1,
                         cfg: BesselEvalConfig | None = None):
    """Closed-form heat kernel of the half power (s = 1/2) with mass m.

    K_t(x) = 2^((1-N)/2) pi^(-(N+1)/2) m^((N+1)/2) t
             (|x|^2 + t^2)^(-(N+1)/4) K_((N+1)/2)(m sqrt(|x|^2 + t^2))

    normalized so that its integral over R^N equals exp(-m t).

    ``x`` is interpreted as the radial coordinate |x| (vectorized).
    """
    if t <= 0.0:
        raise DomainError(f"time must be positive, got t={t:g}")
    if m <= 0.0:
        raise DomainError(f"mass must be positive, got m={m:g}")
    if int(N) != N or N < 1:
        raise DomainError(f"dimension must be a positive integer, got {N!r}")
    x_arr = np.asarray(x, dtype=float)
    rho = np.sqrt(x_arr * x_arr + t * t)
    nu = 0.5 * (N + 1.0)
    pref = (2.0 ** (0.5 * (1.0 - N)) * math.pi ** (-0.5 * (N + 1.0))
            * m ** (0.5 * (N + 1.0)) * t)
    vals = pref * rho ** (-0.5 * (N + 1.0)) * macdonald_k(nu, m * rho, cfg)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(vals)
    return vals
