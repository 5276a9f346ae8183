"""Direct-sampling estimates of the exponential phase moments and phase statistics.

Homodyne moments discretise the double integral over LO phase and quadrature
with equal phase weights,

    Psi_k ~ (2 pi / N_theta) sum_j exp(i k theta_j) mean_i K_k(x_ji),

and double-homodyne moments average exp(i k arg beta) over the Q-function draws.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ConsistencyWarning, NumericalError

RECORD_FIELDS = ("k", "re", "im", "stderr_re", "stderr_im")


@dataclass(frozen=True)
class MomentEstimate:
    """Complex moment estimate with standard errors of its real and imaginary parts.

    ``cov_re_im`` is the covariance of the two parts; it enters the error of
    the mean phase.
    """

    k: int
    value: complex
    stderr_re: float
    stderr_im: float
    n_events_used: int
    cov_re_im: float = 0.0

    def __post_init__(self):
        for name in ("stderr_re", "stderr_im"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")

    def conjugate(self):
        """The estimate of Psi_{-k}."""
        return MomentEstimate(-self.k, self.value.conjugate(), self.stderr_re, self.stderr_im,
                              self.n_events_used, -self.cov_re_im)

    def record(self):
        return {"k": self.k, "re": self.value.real, "im": self.value.imag,
                "stderr_re": self.stderr_re, "stderr_im": self.stderr_im}


class MomentAccumulator:
    """Streaming per-phase sums of K_k(x) for k = 1..k_max.

    Each LO phase keeps a count, mean and sum of squared deviations per k
    (Chan et al. pairwise update), so batches can arrive in any order and
    partial accumulators can be merged before reading estimates.
    """

    def __init__(self, thetas, tables, k_max):
        self.thetas = np.asarray(thetas, dtype=float)
        self.k_max = int(k_max)
        missing = [k for k in range(1, self.k_max + 1) if k not in tables]
        if missing:
            raise ValueError(f"no kernel table for k = {missing}")
        self.tables = tables
        shape = (self.thetas.size, self.k_max)
        self.count = np.zeros(self.thetas.size, dtype=np.int64)
        self.mean = np.zeros(shape)
        self.m2 = np.zeros(shape)

    def update(self, j, x):
        x = np.asarray(x, dtype=float)
        if x.size == 0:
            return
        vals = np.stack([self.tables[k](x) for k in range(1, self.k_max + 1)], axis=1)
        self._combine(j, x.size, vals.mean(axis=0), ((vals - vals.mean(axis=0)) ** 2).sum(axis=0))

    def _combine(self, j, n_b, mean_b, m2_b):
        n_a = self.count[j]
        n = n_a + n_b
        delta = mean_b - self.mean[j]
        self.mean[j] = self.mean[j] + delta * (n_b / n)
        self.m2[j] = self.m2[j] + m2_b + delta ** 2 * (n_a * n_b / n)
        self.count[j] = n

    def merge(self, other):
        if other.thetas.shape != self.thetas.shape or not np.allclose(other.thetas, self.thetas):
            raise ValueError("accumulators cover different LO phases")
        if other.k_max != self.k_max:
            raise ValueError("accumulators cover different moment orders")
        for j in np.flatnonzero(other.count):
            self._combine(j, other.count[j], other.mean[j], other.m2[j])
        return self

    def _variances(self):
        # Unbiased per-phase variance; phases with a single event fall back to
        # the pooled variance of all K values.
        n = self.count
        var = np.empty_like(self.m2)
        multi = n > 1
        var[multi] = self.m2[multi] / (n[multi] - 1)[:, None]
        if np.any(~multi):
            total = n.sum()
            if total < 2:
                raise ValueError("need at least two events to estimate errors")
            grand = (n[:, None] * self.mean).sum(axis=0) / total
            pooled_m2 = self.m2.sum(axis=0) + (n[:, None] * (self.mean - grand) ** 2).sum(axis=0)
            var[~multi] = pooled_m2 / (total - 1)
        return var

    def estimates(self):
        if np.any(self.count == 0):
            empty = np.flatnonzero(self.count == 0).tolist()
            raise ValueError(f"LO phase groups {empty} have no events")
        w = 2.0 * np.pi / self.thetas.size
        var = self._variances()
        out = []
        for idx in range(self.k_max):
            k = idx + 1
            c, s = np.cos(k * self.thetas), np.sin(k * self.thetas)
            mean = self.mean[:, idx]
            value = complex(w * np.sum(c * mean), w * np.sum(s * mean))
            v = var[:, idx] / self.count
            out.append(MomentEstimate(
                k, value,
                float(w * math.sqrt(np.sum(c * c * v))),
                float(w * math.sqrt(np.sum(s * s * v))),
                int(self.count.sum()),
                float(w * w * np.sum(c * s * v)),
            ))
        return out


def sample_moments(data, tables, k_max):
    """Estimate Psi_1..Psi_k_max from a homodyne dataset.

    ``tables`` maps k to a :class:`~phasemoments.kernels.KernelTable`.
    Var(Re) = (2 pi/N_theta)^2 sum_j cos^2(k theta_j) v_j / N_j with v_j the
    unbiased sample variance of K_k in group j (sin^2 for Im).
    """
    acc = MomentAccumulator(data.thetas, tables, k_max)
    for j, g in enumerate(data.groups):
        if g.size == 0:
            raise ValueError(f"LO phase group {j} is empty")
        acc.update(j, g)
    return acc.estimates()


def q_moments(data, k_max):
    """Moments of the radially integrated Q function from double-homodyne draws.

    Draws with beta exactly 0 carry no phase; they are dropped and reported
    through ``n_events_used``.
    """
    betas = np.asarray(data.betas if hasattr(data, "betas") else data, dtype=complex)
    if betas.size == 0:
        raise ValueError("double-homodyne dataset is empty")
    used = betas[betas != 0]
    if used.size == 0:
        raise NumericalError("every double-homodyne event sits at beta = 0")
    phase = np.angle(used)
    n = used.size
    out = []
    for k in range(1, int(k_max) + 1):
        c, s = np.cos(k * phase), np.sin(k * phase)
        if n > 1:
            cov = np.cov(np.vstack((c, s)), ddof=1) / n
        else:
            cov = np.full((2, 2), np.inf)
        out.append(MomentEstimate(k, complex(c.mean(), s.mean()), float(math.sqrt(cov[0, 0])),
                                  float(math.sqrt(cov[1, 1])), n, float(cov[0, 1])))
    return out


def mirror(estimates):
    """Estimates for -k_max..k_max (excluding 0) from the k > 0 list."""
    neg = [e.conjugate() for e in reversed(estimates)]
    return neg + list(estimates)


@dataclass(frozen=True)
class PhaseStats:
    """Mean phase and width measures derived from Psi_1.

    ``sigma_bp`` and ``sigma_h`` are the Bandilla-Paul and Holevo dispersions
    sin(delta_phi) and tan(delta_phi).
    """

    mean_phase: float
    mean_phase_err: float
    delta_phi: float
    delta_phi_err: float
    sigma_bp: float
    sigma_h: float
    clamped: bool = False

    def record(self):
        return asdict(self)


def phase_stats(psi1):
    """Phase statistics from an estimate of Psi_1.

    mean_phase = arg Psi_1 and delta_phi = arccos|Psi_1|.  Errors propagate to
    first order from the estimate's covariance: the component orthogonal to
    Psi_1 divided by |Psi_1| for the mean phase, the radial component over
    sin(delta_phi) for delta_phi.  |Psi_1| above one is clamped, with a
    warning if it exceeds 1 + 3 sigma.
    """
    mag = abs(psi1.value)
    if mag == 0:
        raise ValueError("Psi_1 = 0: the mean phase is undefined")
    phi = math.atan2(psi1.value.imag, psi1.value.real)
    vr, vi, cv = psi1.stderr_re ** 2, psi1.stderr_im ** 2, psi1.cov_re_im
    c, s = math.cos(phi), math.sin(phi)
    var_perp = s * s * vr + c * c * vi - 2 * s * c * cv
    var_rad = c * c * vr + s * s * vi + 2 * s * c * cv
    sd_rad = math.sqrt(max(var_rad, 0.0))
    clamped = mag > 1.0
    if mag > 1.0 + 3.0 * sd_rad:
        warnings.warn(f"|Psi_1| = {mag:.6f} exceeds 1 by more than 3 standard errors",
                      ConsistencyWarning, stacklevel=2)
    r = min(mag, 1.0)
    delta = math.acos(r)
    sin_d = math.sin(delta)
    delta_err = sd_rad / sin_d if sin_d > 0 else float("inf") if sd_rad > 0 else 0.0
    return PhaseStats(phi, math.sqrt(max(var_perp, 0.0)) / mag, delta, delta_err,
                      sin_d, math.tan(delta), clamped)


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------

def write_moments_csv(estimates, path):
    """CSV with the fixed header k,re,im,stderr_re,stderr_im."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for e in estimates:
            rec = e.record()
            w.writerow([rec["k"]] + [repr(float(rec[f])) for f in RECORD_FIELDS[1:]])


def read_moments_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [MomentEstimate(int(r["k"]), complex(float(r["re"]), float(r["im"])),
                           float(r["stderr_re"]), float(r["stderr_im"]), 0) for r in rows]


def write_moments_json(estimates, path, stats=None):
    doc = {"fields": list(RECORD_FIELDS), "moments": [e.record() for e in estimates]}
    if stats is not None:
        doc["phase_stats"] = stats.record()
    Path(path).write_text(json.dumps(doc, indent=1))
