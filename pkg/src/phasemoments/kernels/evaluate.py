"""Sampling kernels K_k(x) for the exponential phase moments.

The k-fold integrals over t_1..t_k depend on the t_j only through
S = sum_j t_j^2 via z = (exp(-S) - 1)/2, so each kernel collapses to

    K_k(x) = P_k * W_k * int_0^inf f_k(s) g_k(z(s), x) ds

with f_k the normalised mixing density, W_k = prod_j sqrt(pi/j) and

    even k = 2m:   P = m! / (2 pi)^(m+1),
                   g = Phi(m+1, 1/2, x^2 z/(1+z)) / (z^m (1+z)^(m+1)) - z^-m
    odd k = 2m+1:  P = 2x (m+1)! / (2 pi)^(m+3/2),
                   g = Phi(m+2, 3/2, x^2 z/(1+z)) / (z^m (1+z)^(m+2))

The s-integral runs over v = ln s, which resolves the s^-1/2 endpoint of odd
kernels and the feature near s ~ 1/x^2 with one adaptive vector quadrature
shared by every x.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import comb, poch

from ..errors import NumericalError
from .kummer import kummer_phi_array
from .mixing import mixing_density

MAX_M = 4
SERIES_SWITCH = 1e-3
SERIES_EXTRA_ORDERS = 12
S_MIN = 1e-24
EPSABS = 1e-9


def _prefactor(k):
    m = k // 2
    if k % 2 == 0:
        p = math.factorial(m) / (2.0 * math.pi) ** (m + 1)
    else:
        p = 2.0 * math.factorial(m + 1) / (2.0 * math.pi) ** (m + 1.5)
    return p


def _even_series_coeffs(m, x2, order):
    # Taylor coefficients in z of h(z) = (1+z)^-(m+1) Phi(m+1, 1/2, x^2 z/(1+z)):
    #   c_j = sum_{n<=j} (-1)^(j-n) C(j+m, j-n) (m+1)_n / ((1/2)_n n!) x^(2n)
    n = np.arange(order + 1)
    alpha = poch(m + 1, n) / (poch(0.5, n) * np.array([math.factorial(i) for i in n], dtype=float))
    powers = x2[:, None] ** n[None, :]
    coeffs = np.empty((x2.size, order + 1))
    for j in range(order + 1):
        w = (-1.0) ** (j - n[: j + 1]) * comb(j + m, j - n[: j + 1]) * alpha[: j + 1]
        coeffs[:, j] = powers[:, : j + 1] @ w
    return coeffs


def even_bracket(m, z, x2, switch=SERIES_SWITCH):
    """Bracket {Phi(m+1,1/2,x^2 z/(1+z)) / (z^m (1+z)^(m+1)) - z^-m} on a (z, x^2) mesh.

    ``z`` has shape (n_z,), ``x2`` shape (n_x,); the result is (n_z, n_x).
    Where |z| < switch/2 the bracket comes from its Laurent series
    sum_{j>=1} c_j z^(j-m), which removes the cancellation between the two terms.
    """
    z = np.asarray(z, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    out = np.empty((z.size, x2.size))
    small = np.abs(z) < 0.5 * switch
    big = ~small
    if np.any(big):
        zb = z[big][:, None]
        u = x2[None, :] * zb / (1.0 + zb)
        phi = kummer_phi_array(m + 1, 0.5, u)
        out[big] = phi / (zb ** m * (1.0 + zb) ** (m + 1)) - 1.0 / zb ** m
    if np.any(small):
        order = m + SERIES_EXTRA_ORDERS
        c = _even_series_coeffs(m, x2, order)
        zs = z[small]
        j = np.arange(1, order + 1)
        zpow = zs[:, None] ** (j - m)[None, :]
        out[small] = zpow @ c[:, 1:].T
    return out


def odd_integrand(m, z, x2):
    """Phi(m+2, 3/2, x^2 z/(1+z)) / (z^m (1+z)^(m+2)) on a (z, x^2) mesh."""
    zb = np.asarray(z, dtype=float)[:, None]
    u = np.asarray(x2, dtype=float)[None, :] * zb / (1.0 + zb)
    return kummer_phi_array(m + 2, 1.5, u) / (zb ** m * (1.0 + zb) ** (m + 2))


def kernel_values(k, x, epsabs=EPSABS):
    """Evaluate K_k at every point of ``x`` (any shape) for 1 <= |k| <= 2*MAX_M+1.

    One adaptive Gauss-Kronrod quadrature over ln s is shared across the
    x values; ``epsabs`` bounds the max-norm error of the kernel values.
    """
    k = abs(int(k))
    if not 1 <= k <= 2 * MAX_M + 1:
        raise ValueError(f"kernel order must satisfy 1 <= |k| <= {2 * MAX_M + 1}, got {k}")
    x = np.asarray(x, dtype=float)
    flat = np.abs(x.ravel())
    if not np.all(np.isfinite(flat)):
        raise ValueError("x must be finite")
    m = k // 2
    dens = mixing_density(k)
    scale = _prefactor(k) * dens.weight_mass
    x2 = flat * flat
    even = k % 2 == 0
    weight = np.ones_like(flat) if even else flat

    def integrand(v):
        s = math.exp(v)
        z = math.expm1(-s) / 2.0
        f = float(dens.pdf(s)) * s * scale
        if even:
            g = even_bracket(m, np.array([z]), x2)[0]
        else:
            g = odd_integrand(m, np.array([z]), x2)[0]
        return f * g * weight

    res, err, info = quad_vec(
        integrand, math.log(S_MIN), math.log(dens.s_max),
        epsabs=epsabs, epsrel=0.0, norm="max", limit=4000, full_output=True,
    )
    if not info.success or not np.all(np.isfinite(res)) or err > epsabs:
        raise NumericalError(
            f"kernel K_{k} quadrature did not converge: error estimate {err:.3e}, "
            f"{info.neval} evaluations, status {info.status}"
        )
    out = res.reshape(x.shape)
    if not even:
        out = out * np.sign(x)
    return out


def _kernel_scalar_or_array(k, x, epsabs):
    val = kernel_values(k, x, epsabs)
    return float(val) if np.ndim(x) == 0 else val


def kernel_even(m, x, epsabs=EPSABS):
    """K_{2m}(x) for 1 <= m <= 4 (scalar or array ``x``)."""
    if int(m) != m or not 1 <= m <= MAX_M:
        raise ValueError(f"kernel_even supports 1 <= m <= {MAX_M}, got {m}")
    return _kernel_scalar_or_array(2 * int(m), x, epsabs)


def kernel_odd(m, x, epsabs=EPSABS):
    """K_{2m+1}(x) for 0 <= m <= 4; odd in ``x`` by construction."""
    if int(m) != m or not 0 <= m <= MAX_M:
        raise ValueError(f"kernel_odd supports 0 <= m <= {MAX_M}, got {m}")
    return _kernel_scalar_or_array(2 * int(m) + 1, x, epsabs)


def classical_slope(k):
    """Coefficient of ln|x| in the even-order asymptote, (-1)^(m+1) m / pi."""
    m = abs(k) // 2
    return (-1) ** (m + 1) * m / math.pi


def kernel_classical(k, x, constant=0.0):
    """Large-|x| asymptote of K_k.

    Odd k = 2m+1 gives (1/4)(-1)^m (2m+1) sign(x); even k = 2m gives
    (-1)^(m+1) (m/pi) ln|x| + ``constant``.
    """
    k = abs(int(k))
    if k == 0:
        raise ValueError("k must be nonzero")
    x = np.asarray(x, dtype=float)
    if k % 2:
        m = (k - 1) // 2
        val = 0.25 * (-1) ** m * k * np.sign(x)
    else:
        if np.any(x == 0):
            raise ValueError("even-order classical kernel diverges at x = 0")
        val = classical_slope(k) * np.log(np.abs(x)) + constant
    return float(val) if val.ndim == 0 else val
