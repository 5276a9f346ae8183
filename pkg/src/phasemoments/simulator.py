"""Monte Carlo balanced-homodyne and double-homodyne measurement records."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NumericalError
from .quantum_state import as_density, default_x_grid, mean_photon, quadrature_pdfs

DATASET_FORMAT_VERSION = 1
MIN_ACCEPTANCE = 1e-4
ENVELOPE_FACTOR = 1.1
STRATEGIES = ("uniform", "psi1-optimal")


def equidistant_phases(n_theta):
    """``n_theta`` local-oscillator phases 2 pi j / n_theta, j = 0..n_theta-1."""
    if n_theta < 1:
        raise ValueError("need at least one LO phase")
    return 2.0 * np.pi * np.arange(n_theta) / n_theta


@dataclass(frozen=True, eq=False)
class PhaseSchedule:
    """LO phases and the number of events recorded at each."""

    thetas: np.ndarray
    counts: np.ndarray
    strategy: str = "uniform"
    weights: np.ndarray | None = None

    def __post_init__(self):
        thetas = np.asarray(self.thetas, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        if thetas.ndim != 1 or thetas.shape != counts.shape or thetas.size == 0:
            raise ValueError("thetas and counts must be matching non-empty 1-D arrays")
        if np.any(counts < 1):
            raise ValueError("every LO phase needs at least one event")
        if thetas.size > 1 and np.any(np.diff(thetas) <= 0):
            raise ValueError("thetas must be strictly increasing")
        thetas.flags.writeable = False
        counts.flags.writeable = False
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def n_theta(self):
        return self.thetas.size


def _round_to_total(target, total, lo, hi):
    # Largest-remainder rounding that keeps every count inside [lo, hi].
    base = np.clip(np.floor(target).astype(np.int64), lo, hi)
    short = total - int(base.sum())
    frac = target - np.floor(target)
    order = np.argsort(-frac, kind="stable") if short > 0 else np.argsort(frac, kind="stable")
    step = 1 if short > 0 else -1
    while short != 0:
        moved = False
        for j in order:
            if short == 0:
                break
            if lo <= base[j] + step <= hi:
                base[j] += step
                short -= step
                moved = True
        if not moved:
            raise ValueError("cannot distribute events within the requested bounds")
    return base


def allocate_events(total, rho, thetas, strategy="uniform", min_events=10, max_events=800,
                    x_grid=None):
    """Split ``total`` events over the LO phases ``thetas``.

    ``uniform`` gives equal counts up to one event.  ``psi1-optimal`` weights
    phase j by exp(-x_mode_j^2 / 2), where x_mode_j is the mode of p(x, theta_j),
    then scales the weights so that the counts clamped to
    [min_events, max_events] add up to ``total``.  When ``total`` cannot honour
    the clamps they widen to [total // n, ceil(total / n)].
    """
    thetas = np.asarray(thetas, dtype=float)
    n = thetas.size
    total = int(total)
    if total < n:
        raise ValueError(f"total events {total} is below the number of LO phases {n}")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown allocation strategy {strategy!r}; expected one of {STRATEGIES}")
    if strategy == "uniform":
        counts = np.full(n, total // n, dtype=np.int64)
        counts[: total - counts.sum()] += 1
        return PhaseSchedule(thetas, counts, strategy, np.ones(n))

    rho = as_density(rho)
    x = default_x_grid(rho.dim) if x_grid is None else np.asarray(x_grid, dtype=float)
    modes = np.array([p.x_grid[np.argmax(p.values)] for p in quadrature_pdfs(rho, thetas, x)])
    weights = np.exp(-0.5 * modes ** 2)
    lo = min(int(min_events), total // n)
    hi = max(int(max_events), -(-total // n))
    if lo > hi:
        raise ValueError(f"min_events {min_events} exceeds max_events {max_events}")

    def assigned(scale):
        return np.clip(scale * weights, lo, hi).sum()

    if not np.any(weights > 0):
        raise NumericalError("every LO phase has zero allocation weight")
    a, b = 0.0, 1.0
    while assigned(b) < total:
        b *= 2.0
    for _ in range(200):
        mid = 0.5 * (a + b)
        if assigned(mid) < total:
            a = mid
        else:
            b = mid
    target = np.clip(b * weights, lo, hi)
    target *= total / target.sum()
    counts = _round_to_total(target, total, lo, hi)
    return PhaseSchedule(thetas, counts, strategy, weights)


@dataclass(frozen=True, eq=False)
class HomodyneDataset:
    """Quadrature samples grouped by LO phase."""

    thetas: np.ndarray
    groups: tuple
    seed: int | None = None
    state_label: str = ""
    x_range: tuple = (-np.inf, np.inf)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        thetas = np.asarray(self.thetas, dtype=float)
        groups = tuple(np.asarray(g, dtype=float) for g in self.groups)
        if len(groups) != thetas.size:
            raise ValueError("one sample group per LO phase is required")
        for g in groups:
            g.flags.writeable = False
        thetas.flags.writeable = False
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "groups", groups)

    @property
    def counts(self):
        return np.array([g.size for g in self.groups], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class DoubleHomodyneDataset:
    """Complex amplitudes beta drawn from the Husimi Q function."""

    betas: np.ndarray
    seed: int | None = None
    state_label: str = ""
    n_proposed: int = 0
    envelope: float = 0.0
    envelope_violations: int = 0

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=complex).ravel()
        if not np.all(np.isfinite(b)):
            raise ValueError("amplitudes must be finite")
        b.flags.writeable = False
        object.__setattr__(self, "betas", b)

    @property
    def acceptance_rate(self):
        return self.betas.size / self.n_proposed if self.n_proposed else float("nan")


def _group_rng(seed, j):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(j,)))


def _inverse_cdf_table(pdf):
    # Drop the interior of flat CDF stretches so the lookup is strictly increasing.
    cdf, x = pdf.cdf, pdf.x_grid
    rising_next = np.r_[cdf[1:] > cdf[:-1], False]
    rising_prev = np.r_[False, cdf[1:] > cdf[:-1]]
    keep = rising_next | rising_prev
    return cdf[keep], x[keep]


def sample_homodyne(rho, schedule, seed, x_grid=None, state_label=None):
    """Draw ``schedule.counts[j]`` quadrature values at each LO phase.

    Sampling is inverse-CDF lookup with linear interpolation on ``x_grid``
    (default 4096 points over |x| <= sqrt(2D)+5).  Group j uses its own
    random stream derived from ``(seed, j)``.
    """
    rho = as_density(rho)
    x = default_x_grid(rho.dim) if x_grid is None else np.asarray(x_grid, dtype=float)
    pdfs = quadrature_pdfs(rho, schedule.thetas, x)
    groups = []
    for j, (pdf, n) in enumerate(zip(pdfs, schedule.counts)):
        u = _group_rng(seed, j).random(int(n))
        cdf, xs = _inverse_cdf_table(pdf)
        groups.append(np.interp(u, cdf, xs))
    label = rho.label if state_label is None else state_label
    meta = {"strategy": schedule.strategy, "counts": [int(c) for c in schedule.counts]}
    return HomodyneDataset(schedule.thetas, tuple(groups), seed, label, (float(x[0]), float(x[-1])), meta)


def _coherent_overlaps(vectors, betas):
    # <beta|v> = exp(-|beta|^2/2) sum_n v_n conj(beta)^n / sqrt(n!), nested Horner form.
    w = np.conj(betas)
    dim = vectors.shape[0]
    acc = np.broadcast_to(vectors[-1], (betas.size, vectors.shape[1])).astype(complex)
    for n in range(dim - 2, -1, -1):
        acc = vectors[n] + (w / math.sqrt(n + 1))[:, None] * acc
    return acc * np.exp(-0.5 * np.abs(betas) ** 2)[:, None]


def q_function(rho, beta):
    """Husimi function Q(beta) = <beta|rho|beta> / pi (scalar or array ``beta``)."""
    rho = as_density(rho)
    b = np.asarray(beta, dtype=complex)
    limit = math.sqrt(2.0 * rho.dim) + 5.0
    if np.any(np.abs(b) > limit):
        raise ValueError(f"|beta| must not exceed sqrt(2D)+5 = {limit:.3f} for dimension {rho.dim}")
    lam, vec = rho.spectral
    q = (np.abs(_coherent_overlaps(vec, b.ravel())) ** 2 @ lam) / math.pi
    q = q.reshape(b.shape)
    return float(q) if q.ndim == 0 else q


def _envelope(rho, radius, n_r=120, n_phi=240):
    r = np.linspace(0.0, radius, n_r)
    phi = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    grid = (r[:, None] * np.exp(1j * phi[None, :])).ravel()
    return ENVELOPE_FACTOR * float(np.max(q_function(rho, grid)))


def sample_double_homodyne(rho, n_events, seed, state_label=None, batch=65536):
    """Draw ``n_events`` amplitudes from Q(beta) by rejection sampling.

    Proposals are uniform on the disk |beta| <= sqrt(2<n>)+5 and are accepted
    against the envelope 1.1 * max Q on a polar grid.  Proposals whose Q
    exceeds the envelope are counted in ``envelope_violations``.
    """
    rho = as_density(rho)
    n_events = int(n_events)
    label = rho.label if state_label is None else state_label
    if n_events <= 0:
        return DoubleHomodyneDataset(np.empty(0, dtype=complex), seed, label)
    radius = math.sqrt(2.0 * mean_photon(rho)) + 5.0
    env = _envelope(rho, radius)
    rng = np.random.default_rng(seed)
    accepted = []
    n_acc = n_prop = violations = 0
    while n_acc < n_events:
        r = radius * np.sqrt(rng.random(batch))
        beta = r * np.exp(2j * np.pi * rng.random(batch))
        u = rng.random(batch) * env
        q = q_function(rho, beta)
        violations += int(np.count_nonzero(q > env))
        hit = beta[u < q]
        n_prop += batch
        take = hit[: n_events - n_acc]
        if take.size < hit.size:
            # count proposals only up to the last accepted one
            last = np.flatnonzero(u < q)[take.size - 1]
            n_prop -= batch - (last + 1)
        accepted.append(take)
        n_acc += take.size
        if n_prop >= 4 * batch and n_acc / n_prop < MIN_ACCEPTANCE:
            raise NumericalError(
                f"rejection sampler acceptance {n_acc / n_prop:.2e} below {MIN_ACCEPTANCE}; "
                "envelope misconfigured"
            )
    return DoubleHomodyneDataset(np.concatenate(accepted), seed, label, int(n_prop), env, violations)


# ---------------------------------------------------------------------------
# Dataset files
# ---------------------------------------------------------------------------

def save_homodyne(data, path, state_spec=None):
    """Write a homodyne dataset as JSON: header then one record per LO phase."""
    doc = {
        "format_version": DATASET_FORMAT_VERSION,
        "kind": "homodyne",
        "state_label": data.state_label,
        "state_spec": state_spec,
        "seed": data.seed,
        "x_range": list(data.x_range),
        "schedule": {"thetas": [float(t) for t in data.thetas],
                     "counts": [int(c) for c in data.counts]},
        "groups": [{"theta": float(t), "x": [float(v) for v in g]}
                   for t, g in zip(data.thetas, data.groups)],
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def load_homodyne(path):
    doc = json.loads(Path(path).read_text())
    if doc.get("kind") != "homodyne" or doc.get("format_version") != DATASET_FORMAT_VERSION:
        raise ValueError(f"{path} is not a version-{DATASET_FORMAT_VERSION} homodyne dataset")
    groups = tuple(np.asarray(g["x"], dtype=float) for g in doc["groups"])
    thetas = np.asarray([g["theta"] for g in doc["groups"]], dtype=float)
    return HomodyneDataset(thetas, groups, doc["seed"], doc["state_label"], tuple(doc["x_range"]))


def save_double_homodyne(data, path, state_spec=None):
    doc = {
        "format_version": DATASET_FORMAT_VERSION,
        "kind": "double_homodyne",
        "state_label": data.state_label,
        "state_spec": state_spec,
        "seed": data.seed,
        "n_proposed": data.n_proposed,
        "envelope": data.envelope,
        "envelope_violations": data.envelope_violations,
        "betas": [[float(b.real), float(b.imag)] for b in data.betas],
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def load_double_homodyne(path):
    doc = json.loads(Path(path).read_text())
    if doc.get("kind") != "double_homodyne" or doc.get("format_version") != DATASET_FORMAT_VERSION:
        raise ValueError(f"{path} is not a version-{DATASET_FORMAT_VERSION} double-homodyne dataset")
    b = np.asarray(doc["betas"], dtype=float).reshape(-1, 2)
    return DoubleHomodyneDataset(b[:, 0] + 1j * b[:, 1], doc["seed"], doc["state_label"],
                                 doc["n_proposed"], doc["envelope"], doc["envelope_violations"])
