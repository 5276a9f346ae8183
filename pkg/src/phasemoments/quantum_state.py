"""Truncated Fock-basis states and their exact phase and quadrature statistics.

Conventions
-----------
Quadratures use the oscillator eigenfunctions

    psi_n(x) = (2^n n! sqrt(pi))^(-1/2) exp(-x^2/2) H_n(x),

so the vacuum has <x^2> = 1/2 and a coherent state |alpha> measured at local
oscillator phase theta peaks at x = sqrt(2) |alpha| cos(theta - arg alpha).
Canonical phase states are |phi> = sum_n exp(i n phi) |n>.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import TruncationError

NORM_TOL = 1e-10
PSD_TOL = -1e-8
TAIL_TOL = 1e-8
CLIP_TOL = 1e-12
MAX_HERMITE_ORDER = 1024

_RESCALE = 1e150
_LOG_RESCALE = np.log(_RESCALE)


def _frozen(a):
    a = np.array(a)
    a.flags.writeable = False
    return a


# ---------------------------------------------------------------------------
# Oscillator eigenfunctions
# ---------------------------------------------------------------------------

def _check_order(n):
    if not (0 <= n <= MAX_HERMITE_ORDER) or int(n) != n:
        raise ValueError(f"Hermite order must be an integer in [0, {MAX_HERMITE_ORDER}], got {n}")


def _psi_recurrence(n_max, x, store):
    # Normalised three-term recurrence with a running log-scale so that
    # exp(-x^2/2) never underflows before the polynomial part grows.
    x = np.asarray(x, dtype=float)
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    log_scale = -0.5 * x * x - 0.25 * np.log(np.pi)
    out = np.empty((n_max + 1,) + x.shape) if store else None

    def emit(p, log_scale):
        with np.errstate(divide="ignore"):
            return np.sign(p) * np.exp(log_scale + np.log(np.abs(p)))

    if store:
        out[0] = emit(p, log_scale)
    for j in range(n_max):
        p_next = x * np.sqrt(2.0 / (j + 1)) * p - np.sqrt(j / (j + 1)) * p_prev
        p_prev, p = p, p_next
        big = np.abs(p) > _RESCALE
        if np.any(big):
            p = np.where(big, p / _RESCALE, p)
            p_prev = np.where(big, p_prev / _RESCALE, p_prev)
            log_scale = np.where(big, log_scale + _LOG_RESCALE, log_scale)
        if store:
            out[j + 1] = emit(p, log_scale)
    return out if store else emit(p, log_scale)


def hermite_psi(n, x):
    """Normalised oscillator eigenfunction psi_n evaluated at ``x``.

    Uses the recurrence psi_{n+1} = x sqrt(2/(n+1)) psi_n - sqrt(n/(n+1)) psi_{n-1};
    no Hermite polynomial or factorial is formed.  ``x`` may be a scalar or an array.
    """
    _check_order(n)
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)):
        raise ValueError("x must be finite")
    val = _psi_recurrence(int(n), x_arr, store=False)
    return float(val) if np.ndim(x) == 0 else val


def hermite_functions(n_max, x):
    """Array of shape ``(n_max + 1, len(x))`` holding psi_0 .. psi_{n_max} on ``x``."""
    _check_order(n_max)
    return _psi_recurrence(int(n_max), np.atleast_1d(np.asarray(x, dtype=float)), store=True)


# ---------------------------------------------------------------------------
# State containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FockVector:
    """Normalised pure state c_0 .. c_{D-1} in a truncated Fock basis."""

    coefficients: np.ndarray
    label: str = ""

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex).ravel()
        if c.size < 1:
            raise ValueError("a Fock vector needs at least one coefficient")
        norm = np.sqrt(np.sum(np.abs(c) ** 2))
        if norm == 0 or not np.isfinite(norm):
            raise ValueError("Fock vector must have finite nonzero norm")
        object.__setattr__(self, "coefficients", _frozen(c / norm))

    @property
    def dim(self):
        return self.coefficients.size

    def density_matrix(self):
        return DensityMatrix.from_vector(self)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator on D Fock levels."""

    elements: np.ndarray
    label: str = ""
    _pure: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        rho = np.asarray(self.elements, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 1:
            raise ValueError(f"density matrix must be square and non-empty, got shape {rho.shape}")
        rho = 0.5 * (rho + rho.conj().T)
        tr = np.trace(rho).real
        if abs(tr - 1.0) > NORM_TOL:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        if self._pure is None:
            lam = np.linalg.eigvalsh(rho)
            if lam[0] < PSD_TOL:
                raise ValueError(f"density matrix has eigenvalue {lam[0]:.3e} < {PSD_TOL}")
        object.__setattr__(self, "elements", _frozen(rho))

    @classmethod
    def from_vector(cls, vec):
        c = vec.coefficients if isinstance(vec, FockVector) else FockVector(vec).coefficients
        label = vec.label if isinstance(vec, FockVector) else ""
        return cls(np.outer(c, c.conj()), label=label, _pure=c)

    @property
    def dim(self):
        return self.elements.shape[0]

    @cached_property
    def spectral(self):
        """Eigen-decomposition ``(weights, vectors)`` keeping weights above 1e-14.

        ``vectors[:, i]`` is the i-th eigenvector.  Pure states skip the
        decomposition and return their generating vector.
        """
        if self._pure is not None:
            return np.ones(1), self._pure[:, None]
        lam, vec = np.linalg.eigh(self.elements)
        keep = lam > 1e-14
        return lam[keep], vec[:, keep]

    def rotated(self, phi):
        """The phase-shifted state exp(i phi n) rho exp(-i phi n)."""
        n = np.arange(self.dim)
        phase = np.exp(1j * phi * (n[:, None] - n[None, :]))
        pure = None if self._pure is None else self._pure * np.exp(1j * phi * n)
        return DensityMatrix(self.elements * phase, label=self.label, _pure=pure)


# ---------------------------------------------------------------------------
# State constructors
# ---------------------------------------------------------------------------

def fock_state(n, dim):
    if not 0 <= n < dim:
        raise ValueError(f"Fock level {n} does not fit in dimension {dim}")
    c = np.zeros(dim, dtype=complex)
    c[n] = 1.0
    return FockVector(c, label=f"fock(n={n})")


def vacuum(dim=1):
    return fock_state(0, dim)


def _required_dim(tail_fn, start):
    d = max(start, 1)
    while tail_fn(d) >= TAIL_TOL:
        d = int(d * 1.25) + 1
    return d


def coherent_state(alpha, dim):
    """Coherent state |alpha> truncated to ``dim`` levels.

    Requires |alpha|^2 <= dim/4 and a dropped Poisson tail below 1e-8.
    """
    alpha = complex(alpha)
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    nbar = abs(alpha) ** 2
    tail = lambda d: poisson.sf(d - 1, nbar) if nbar > 0 else 0.0
    if nbar > dim / 4 or tail(dim) >= TAIL_TOL:
        need = _required_dim(lambda d: 1.0 if nbar > d / 4 else tail(d), dim)
        raise TruncationError(
            f"coherent state with |alpha|^2={nbar:.4g} needs dimension >= {need}, got {dim}",
            required_dim=need,
        )
    n = np.arange(dim)
    if nbar == 0:
        c = np.zeros(dim, dtype=complex)
        c[0] = 1.0
    else:
        logmag = n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1) - 0.5 * nbar
        c = np.exp(logmag) * np.exp(1j * n * np.angle(alpha))
    return FockVector(c, label=f"coherent(alpha={alpha})")


def _squeezed_coefficients(alpha, s, dim):
    r = 0.5 * np.log(s)
    phase = np.exp(1j * (2.0 * np.angle(alpha) + np.pi)) if alpha != 0 else -1.0
    ch, sh = np.cosh(r), np.sinh(r)
    gamma = alpha * ch + alpha.conjugate() * phase * sh
    c = np.zeros(dim, dtype=complex)
    c[0] = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * alpha.conjugate() ** 2 * phase * np.tanh(r)) / np.sqrt(ch)
    if dim > 1:
        c[1] = gamma * c[0] / ch
    for n in range(1, dim - 1):
        c[n + 1] = (gamma * c[n] - phase * sh * np.sqrt(n) * c[n - 1]) / (ch * np.sqrt(n + 1))
    return c


def squeezed_coherent_state(alpha, s, dim):
    """Displaced squeezed state with the quadrature orthogonal to ``alpha`` squeezed.

    ``s`` is the quadrature-variance ratio exp(2r).  The squeezing angle is
    2 arg(alpha) + pi, so the phase quadrature carries variance 1/(2s).
    Coefficients follow from projecting (a cosh r + a^dag e^{i t} sinh r)|psi> = gamma|psi>
    onto <n|, which gives a two-term recurrence seeded by the exact c_0.
    """
    alpha = complex(alpha)
    if not s > 0:
        raise ValueError(f"squeeze factor s must be positive, got {s}")
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    c = _squeezed_coefficients(alpha, s, dim)
    tail = 1.0 - np.sum(np.abs(c) ** 2)
    if not tail < TAIL_TOL:
        need = dim
        while need < 20000:
            need = int(need * 1.25) + 1
            if 1.0 - np.sum(np.abs(_squeezed_coefficients(alpha, s, need)) ** 2) < TAIL_TOL:
                break
        raise TruncationError(
            f"squeezed state tail mass {tail:.3e} >= {TAIL_TOL} in dimension {dim}; "
            f"use dimension >= {need}",
            required_dim=need,
        )
    return FockVector(c, label=f"squeezed(alpha={alpha}, s={s})")


# ---------------------------------------------------------------------------
# Exact statistics
# ---------------------------------------------------------------------------

def as_density(state):
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, FockVector):
        return state.density_matrix()
    return DensityMatrix(state)


def mean_photon(rho):
    rho = as_density(rho)
    return float(np.dot(np.arange(rho.dim), np.diag(rho.elements).real))


def exact_moments(rho, k):
    """Exponential phase moment Psi_k = sum_n rho_{n+k,n}; Psi_{-k} = conj(Psi_k)."""
    rho = as_density(rho)
    k = int(k)
    if abs(k) >= rho.dim:
        raise ValueError(f"|k|={abs(k)} must be below the Fock dimension {rho.dim}")
    if k == 0:
        return complex(np.trace(rho.elements).real)
    val = complex(np.trace(rho.elements, offset=-abs(k)))
    return val if k > 0 else val.conjugate()


def canonical_phase_pdf(rho, phi_grid):
    """Canonical phase density (2 pi)^-1 <phi|rho|phi> on ``phi_grid``."""
    rho = as_density(rho)
    phi = np.asarray(phi_grid, dtype=float)
    lam, vec = rho.spectral
    n = np.arange(rho.dim)
    amp = np.exp(-1j * np.outer(phi.ravel(), n)) @ vec
    p = (np.abs(amp) ** 2 @ lam) / (2.0 * np.pi)
    return p.reshape(phi.shape)


@dataclass(frozen=True, eq=False)
class QuadraturePDF:
    """Quadrature density p(x, theta) tabulated on a uniform grid, with its CDF."""

    theta: float
    x_grid: np.ndarray
    values: np.ndarray
    cdf: np.ndarray

    def __post_init__(self):
        for name in ("x_grid", "values", "cdf"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))


def default_x_half_width(dim):
    return np.sqrt(2.0 * dim) + 5.0


def default_x_grid(dim, n_points=4096):
    L = default_x_half_width(dim)
    return np.linspace(-L, L, n_points)


def _check_x_grid(x_grid, dim):
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size < 3:
        raise ValueError("x_grid must be a 1-D array with at least 3 points")
    dx = np.diff(x)
    if np.any(dx <= 0) or np.ptp(dx) > 1e-9 * max(abs(dx[0]), 1.0):
        raise ValueError("x_grid must be uniform and increasing")
    L = default_x_half_width(dim)
    if x[0] > -L + 1e-9 or x[-1] < L - 1e-9:
        raise ValueError(
            f"x_grid [{x[0]:.3f}, {x[-1]:.3f}] does not cover |x| <= {L:.3f} required for dimension {dim}"
        )
    return x


def quadrature_pdfs(rho, thetas, x_grid):
    """Quadrature densities for several LO phases sharing one eigenfunction table."""
    rho = as_density(rho)
    x = _check_x_grid(x_grid, rho.dim)
    basis = hermite_functions(rho.dim - 1, x)
    lam, vec = rho.spectral
    n = np.arange(rho.dim)
    out = []
    for theta in np.atleast_1d(thetas):
        amp = (vec * np.exp(-1j * n * theta)[:, None]).T @ basis
        p = lam @ (np.abs(amp) ** 2)
        p[p < CLIP_TOL] = np.maximum(p[p < CLIP_TOL], 0.0)
        cdf = np.concatenate(([0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(x))))
        out.append(QuadraturePDF(float(theta), x, p, cdf / cdf[-1]))
    return out


def quadrature_pdf(rho, theta, x_grid):
    """p(x, theta) = sum_{n,m} psi_n psi_m rho_{m,n} exp(i(n-m)theta) on ``x_grid``."""
    return quadrature_pdfs(rho, [theta], x_grid)[0]
