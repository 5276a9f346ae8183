"""Tabulated kernels with classical continuation, verification and on-disk cache."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import PchipInterpolator

from ..errors import CacheError, NumericalError
from ..quantum_state import hermite_functions, hermite_psi
from .evaluate import EPSABS, classical_slope, kernel_classical, kernel_values

log = logging.getLogger(__name__)

MAX_TABLE_K = 8
DEFAULT_CROSSOVER = 12.0
DEFAULT_STEP = 0.01
FIT_START = 4.0
FIT_RESIDUAL_TOL = 1e-3
COVERAGE_TOL = 1e-10
FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class KernelTable:
    """K_k on a symmetric uniform grid |x| <= crossover_x.

    Calling the table interpolates with a monotone cubic (PCHIP) inside the
    grid and switches to the classical asymptote beyond ``crossover_x``.
    ``asymptote_constant`` is the fitted C of the even-order asymptote and
    ``None`` for odd orders.  ``scale`` multiplies the continuation; it is 1
    except for copies made by :meth:`scaled`.
    """

    k: int
    x_grid: np.ndarray
    values: np.ndarray
    asymptote_constant: float | None
    crossover_x: float
    meta: dict = field(default_factory=dict, compare=False)
    scale: float = 1.0

    def __post_init__(self):
        for name in ("x_grid", "values"):
            a = np.array(getattr(self, name), dtype=float)
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @cached_property
    def _interp(self):
        return PchipInterpolator(self.x_grid, self.values, extrapolate=False)

    def classical(self, x):
        c = 0.0 if self.asymptote_constant is None else self.asymptote_constant
        return self.scale * kernel_classical(self.k, x, c)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) <= self.crossover_x
        out = np.empty_like(x)
        out[inside] = self._interp(x[inside])
        if np.any(~inside):
            out[~inside] = self.classical(x[~inside])
        return float(out) if out.ndim == 0 else out

    def scaled(self, factor):
        """Copy whose every value, inside and beyond the grid, is multiplied by ``factor``."""
        return KernelTable(self.k, self.x_grid, self.values * factor, self.asymptote_constant,
                           self.crossover_x, dict(self.meta), self.scale * factor)


def default_table_grid(crossover_x=DEFAULT_CROSSOVER, step=DEFAULT_STEP):
    n_half = int(round(crossover_x / step))
    return np.linspace(-crossover_x, crossover_x, 2 * n_half + 1)


def _check_table_grid(x_grid):
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size < 5 or x.size % 2 == 0:
        raise ValueError("kernel grid must be 1-D with an odd number (>= 5) of points")
    if not np.allclose(x, -x[::-1], atol=1e-12, rtol=0):
        raise ValueError("kernel grid must be symmetric about 0")
    dx = np.diff(x)
    if np.any(dx <= 0) or np.ptp(dx) > 1e-9 * dx[0]:
        raise ValueError("kernel grid must be uniform and increasing")
    return x


def build_kernel_table(k, x_grid=None, epsabs=EPSABS):
    """Tabulate K_|k| on ``x_grid`` and attach its classical continuation.

    The grid is symmetric and uniform; its outer edge becomes the crossover
    X_c.  For even orders the asymptote constant is a least-squares fit of
    K - slope*ln|x| on 4 <= |x| <= X_c; a fit residual above 1e-3 means X_c is
    too small and raises :class:`NumericalError`.
    """
    k = abs(int(k))
    if not 1 <= k <= MAX_TABLE_K:
        raise ValueError(f"kernel tables support 1 <= |k| <= {MAX_TABLE_K}, got {k}")
    x = _check_table_grid(default_table_grid() if x_grid is None else x_grid)
    mid = x.size // 2
    half = kernel_values(k, x[mid:], epsabs=epsabs)
    sign = -1.0 if k % 2 else 1.0
    values = np.concatenate((sign * half[:0:-1], half))
    if k % 2:
        values[mid] = 0.0
    x_c = float(x[-1])

    constant = None
    meta = {"epsabs": epsabs}
    if k % 2 == 0:
        window = (x[mid:] >= FIT_START)
        if window.sum() < 2:
            raise NumericalError(f"crossover X_c={x_c} leaves no fit window above |x|={FIT_START}")
        xs, ks = x[mid:][window], half[window]
        resid_base = ks - classical_slope(k) * np.log(xs)
        constant = float(np.mean(resid_base))
        fit_resid = float(np.max(np.abs(resid_base - constant)))
        meta["fit_residual"] = fit_resid
        if fit_resid > FIT_RESIDUAL_TOL:
            raise NumericalError(
                f"K_{k} log-asymptote fit residual {fit_resid:.2e} exceeds {FIT_RESIDUAL_TOL}; "
                f"increase X_c (currently {x_c})"
            )
    table = KernelTable(k, x, values, constant, x_c, meta)
    meta["continuation_mismatch"] = float(abs(values[-1] - table.classical(x_c)))
    return table


def _covers(x_edge, k, n_max):
    edge = abs(hermite_psi(n_max + k, x_edge) * hermite_psi(n_max, x_edge))
    return edge <= COVERAGE_TOL and x_edge > math.sqrt(2 * (n_max + k) + 1), edge


def covered_levels(table, n_max):
    """Largest n <= ``n_max`` whose psi_{n+k} psi_n fits inside the table grid (-1 if none)."""
    n = int(n_max)
    while n >= 0 and not _covers(table.x_grid[-1], table.k, n)[0]:
        n -= 1
    return n


def verify_integral_equation(table, n_max):
    """Residuals |2 pi int K_k psi_{n+k} psi_n dx - 1| for n = 0..n_max.

    Integrates with Simpson's rule on the table grid; the grid edge must lie
    where psi_{n_max+k} psi_{n_max} has decayed below 1e-10.
    """
    x = table.x_grid
    k = table.k
    ok, edge = _covers(x[-1], k, n_max)
    if not ok:
        raise ValueError(
            f"table grid |x| <= {x[-1]} does not cover psi_{n_max + k} psi_{n_max} "
            f"(edge value {edge:.2e})"
        )
    psi = hermite_functions(n_max + k, x)
    res = np.empty(n_max + 1)
    for n in range(n_max + 1):
        res[n] = abs(2.0 * math.pi * simpson(table.values * psi[n + k] * psi[n], x=x) - 1.0)
    return res


# ---------------------------------------------------------------------------
# Cache
# ---------------------------------------------------------------------------

def _checksum(header, values):
    h = hashlib.sha256()
    h.update(json.dumps(header, sort_keys=True).encode())
    h.update(np.ascontiguousarray(values, dtype="<f8").tobytes())
    return "sha256:" + h.hexdigest()


def _header(table):
    x = table.x_grid
    return {
        "format_version": FORMAT_VERSION,
        "k": table.k,
        "grid_min": float(x[0]),
        "grid_max": float(x[-1]),
        "n_points": int(x.size),
        "X_c": table.crossover_x,
        "C": table.asymptote_constant,
        "epsabs": table.meta.get("epsabs", EPSABS),
    }


def save_kernel_table(table, path):
    """Write ``table`` as JSON: header fields, checksum, then the values."""
    if table.scale != 1.0:
        raise ValueError("scaled kernel tables are not written to the cache")
    header = _header(table)
    doc = dict(header)
    doc["checksum"] = _checksum(header, table.values)
    doc["meta"] = {k: v for k, v in table.meta.items() if k != "epsabs"}
    doc["values"] = [float(v) for v in table.values]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(doc, indent=1))
    tmp.replace(path)


def load_kernel_table(path):
    """Read a cached table, raising :class:`CacheError` on any inconsistency."""
    try:
        doc = json.loads(Path(path).read_text())
        header = {key: doc[key] for key in
                  ("format_version", "k", "grid_min", "grid_max", "n_points", "X_c", "C", "epsabs")}
        values = np.asarray(doc["values"], dtype=float)
        checksum = doc["checksum"]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CacheError(f"unreadable kernel cache {path}: {exc}") from exc
    if header["format_version"] != FORMAT_VERSION:
        raise CacheError(f"kernel cache {path} has format {header['format_version']}, expected {FORMAT_VERSION}")
    if values.size != header["n_points"]:
        raise CacheError(f"kernel cache {path} holds {values.size} values, header says {header['n_points']}")
    if _checksum(header, values) != checksum:
        raise CacheError(f"kernel cache {path} checksum mismatch")
    x = np.linspace(header["grid_min"], header["grid_max"], header["n_points"])
    meta = dict(doc.get("meta", {}))
    meta["epsabs"] = header["epsabs"]
    return KernelTable(header["k"], x, values, header["C"], header["X_c"], meta)


def cache_path(cache_dir, k, x_grid, epsabs=EPSABS):
    key = json.dumps([FORMAT_VERSION, float(x_grid[0]), float(x_grid[-1]), int(len(x_grid)), epsabs])
    tag = hashlib.sha256(key.encode()).hexdigest()[:12]
    return Path(cache_dir) / f"kernel_k{abs(int(k))}_{tag}.json"


def get_kernel_table(k, cache_dir=None, x_grid=None, epsabs=EPSABS):
    """Load K_|k| from ``cache_dir`` if a valid table exists, else build and store it."""
    x = default_table_grid() if x_grid is None else np.asarray(x_grid, dtype=float)
    if cache_dir is None:
        return build_kernel_table(k, x, epsabs)
    path = cache_path(cache_dir, k, x, epsabs)
    if path.exists():
        try:
            table = load_kernel_table(path)
            if table.k == abs(int(k)) and np.allclose(table.x_grid, x, rtol=0, atol=1e-12):
                return table
            log.warning("kernel cache %s is stale; rebuilding", path)
        except CacheError as exc:
            log.warning("%s; rebuilding", exc)
    table = build_kernel_table(k, x, epsabs)
    try:
        save_kernel_table(table, path)
    except OSError as exc:
        raise OSError(f"cannot write kernel cache {path}: {exc}") from exc
    return table


def kernel_tables(k_max, cache_dir=None, x_grid=None, epsabs=EPSABS):
    """Tables for k = 1..k_max keyed by k."""
    return {k: get_kernel_table(k, cache_dir, x_grid, epsabs) for k in range(1, k_max + 1)}
