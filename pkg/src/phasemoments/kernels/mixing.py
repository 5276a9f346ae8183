"""Density of S = t_1^2 + ... + t_k^2 under the weight prod_j exp(-j t_j^2).

Under that weight t_j^2 is Gamma(shape 1/2, rate j), so S is a sum of
independent gamma variables with unequal rates.  Its density is the gamma
series of Moschopoulos (1985), expanded around the largest rate k:

    f(s) = C sum_r d_r Gamma(s; k/2 + r, rate k),

with C = prod_j (j/k)^(1/2) and d_r from a convolution recursion.  Every term
is a gamma density, so the CDF is the matching series of regularised
incomplete gamma functions and the small-s behaviour s^(k/2 - 1) is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaln

from ..errors import NumericalError

MAX_K = 12
TAIL_DENSITY = 1e-12
MASS_TOL = 1e-8


def _series_length(k, s_max):
    lam = (k - 1) * s_max
    return int(lam + 12.0 * math.sqrt(lam + 1.0) + 60)


def _series_weights(k, n_terms):
    ratio = np.arange(1, k + 1) / k
    log_c = 0.5 * np.sum(np.log(ratio))
    i = np.arange(1, n_terms + 1)
    gam = np.array([0.5 * np.sum((1.0 - ratio) ** j) for j in i]) / i
    igam = i * gam
    d = np.zeros(n_terms + 1)
    d[0] = 1.0
    for r in range(n_terms):
        d[r + 1] = np.dot(igam[: r + 1], d[r::-1]) / (r + 1)
    return log_c, d


def weight_mass(k):
    """Integral of prod_{j<=k} exp(-j t_j^2) over R^k, i.e. prod_j sqrt(pi/j)."""
    return math.exp(0.5 * k * math.log(math.pi) - 0.5 * math.lgamma(k + 1))


@dataclass(frozen=True, eq=False)
class MixingDensity:
    """Normalised density of S for moment order ``k`` sampled on ``s_grid``.

    ``f_values`` integrate to one; the weight normalisation prod_j sqrt(pi/j)
    is kept separately in ``weight_mass``.  ``pdf`` and ``cdf`` evaluate the
    underlying series anywhere in [0, s_max].
    """

    k: int
    s_grid: np.ndarray
    f_values: np.ndarray
    weight_mass: float
    s_max: float
    log_c: float
    d: np.ndarray

    @property
    def mass(self):
        """Total probability carried by the truncated series."""
        return float(math.exp(self.log_c) * np.sum(self.d))

    def _shapes(self):
        return self.k / 2.0 + np.arange(self.d.size)

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        flat = s.ravel()
        out = np.zeros_like(flat)
        pos = flat > 0
        if np.any(pos):
            a = self._shapes()
            with np.errstate(divide="ignore"):
                log_d = np.log(self.d)
            sp = flat[pos][:, None]
            logt = (log_d + a * math.log(self.k) - gammaln(a)
                    + (a - 1.0) * np.log(sp) - self.k * sp)
            out[pos] = np.exp(self.log_c + logt).sum(axis=1)
        zero = flat == 0
        if np.any(zero):
            out[zero] = {1: np.inf, 2: math.exp(self.log_c) * self.k}.get(self.k, 0.0)
        return out.reshape(s.shape)

    def cdf(self, s):
        s = np.asarray(s, dtype=float)
        a = self._shapes()
        vals = gammainc(a, self.k * np.clip(s.ravel(), 0.0, None)[:, None]) @ self.d
        return (math.exp(self.log_c) * vals).reshape(s.shape)


def default_s_max(k):
    # slowest component decays like exp(-s); a generous fixed bound
    return 48.0


def mixing_density(k, s_grid=None):
    """Mixing density of S for ``1 <= k <= 12`` on ``s_grid``.

    The grid must start at 0 and extend far enough that f(s_max) < 1e-12.
    """
    if int(k) != k or not 1 <= k <= MAX_K:
        raise ValueError(f"mixing density supports 1 <= k <= {MAX_K}, got {k}")
    k = int(k)
    if s_grid is None:
        s_grid = np.linspace(0.0, default_s_max(k), 4801)
    s_grid = np.asarray(s_grid, dtype=float)
    if s_grid.ndim != 1 or s_grid.size < 2 or np.any(np.diff(s_grid) <= 0):
        raise ValueError("s_grid must be a strictly increasing 1-D array")
    if s_grid[0] > 0 or s_grid[0] < 0:
        raise ValueError(f"s_grid must start at 0, starts at {s_grid[0]}")
    s_max = float(s_grid[-1])
    log_c, d = _series_weights(k, _series_length(k, s_max))
    dens = MixingDensity(k, s_grid, np.empty(0), weight_mass(k), s_max, log_c, d)
    if abs(dens.mass - 1.0) > MASS_TOL:
        raise NumericalError(f"mixing series for k={k} carries mass {dens.mass!r}")
    f = dens.pdf(s_grid)
    if not f[-1] < TAIL_DENSITY:
        raise ValueError(f"s_grid ends at {s_max} where f = {f[-1]:.3e} >= {TAIL_DENSITY}")
    f.flags.writeable = False
    s_grid = s_grid.copy()
    s_grid.flags.writeable = False
    object.__setattr__(dens, "f_values", f)
    object.__setattr__(dens, "s_grid", s_grid)
    return dens
