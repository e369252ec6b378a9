"""Natural-frequency densities g(omega) and their quadrature rules.

A density is represented together with a fixed quadrature rule whose weights
carry the density folded in: an integral int h(omega) g(omega) domega is
evaluated as sum_k weights[k] * h(nodes[k]).  Three kinds are supported:

* ``dirac``   - unit point mass at omega = 0 (identical oscillators),
* ``uniform`` - constant density 1/(2*halfwidth) on [-halfwidth, halfwidth],
* ``table``   - piecewise-linear density given by (omega, density) samples,
  renormalized to unit mass at load time.

All densities are required to have (numerically) zero mean; a nonzero-mean
table is rejected, since the rotating-frame reduction is the caller's job.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

logger = logging.getLogger(__name__)

MEAN_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class FrequencyDensity:
    kind: str                 # "dirac" | "uniform" | "table"
    support: float            # M: all nodes lie in [-M, M]
    nodes: np.ndarray         # quadrature nodes omega_k
    weights: np.ndarray       # density-folded weights, sum ~ total mass
    halfwidth: float = 0.0    # uniform kind only
    table_omega: np.ndarray | None = field(default=None, repr=False)
    table_density: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("dirac", "uniform", "table"):
            raise ValueError(f"unknown frequency density kind {self.kind!r}")
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1 or nodes.size == 0:
            raise ValueError("quadrature nodes/weights must be matching nonempty 1-d arrays")
        if np.any(weights < 0):
            raise ValueError("quadrature weights must be nonnegative")
        if np.any(np.abs(nodes) > self.support + 1e-12):
            raise ValueError("quadrature nodes outside the support bound")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def n_nodes(self) -> int:
        return self.nodes.size


def dirac_at_zero() -> FrequencyDensity:
    """Identical-oscillator density: a unit point mass at omega = 0."""
    return FrequencyDensity("dirac", 0.0, np.zeros(1), np.ones(1))


def uniform(halfwidth: float, n_nodes: int = 64) -> FrequencyDensity:
    """Uniform density on [-halfwidth, halfwidth] with a Gauss-Legendre rule."""
    if halfwidth <= 0:
        raise ValueError("halfwidth must be positive")
    pairs = _uniform_rule(halfwidth, n_nodes)
    nodes, weights = pairs[:, 0], pairs[:, 1]
    return FrequencyDensity("uniform", halfwidth, nodes, weights, halfwidth=halfwidth)


def from_table(omegas, densities, n_nodes: int = 64) -> FrequencyDensity:
    """Piecewise-linear density from (omega, density) samples.

    The table is renormalized to unit mass; the renormalization factor is
    logged.  An all-zero table is accepted (zero quadrature weights) so the
    caller can detect it through ``moments``; negative densities are rejected.
    """
    om = np.asarray(omegas, dtype=float)
    de = np.asarray(densities, dtype=float)
    if om.ndim != 1 or om.size < 2 or om.shape != de.shape:
        raise ValueError("table needs matching 1-d omega/density arrays with >= 2 rows")
    if np.any(np.diff(om) <= 0):
        raise ValueError("table omegas must be strictly increasing")
    if np.any(de < 0):
        raise ValueError("table densities must be nonnegative")
    mass = np.trapezoid(de, om)
    if mass > 0:
        factor = 1.0 / mass
        if abs(factor - 1.0) > 1e-12:
            logger.info("table density renormalized by factor %.17g", factor)
        de = de * factor
        mean = np.trapezoid(om * de, om)
        if abs(mean) > MEAN_TOL:
            raise ValueError(f"table density has nonzero mean {mean:.3e}; "
                             "shift to the rotating frame first")
    support = float(max(abs(om[0]), abs(om[-1])))
    pairs = _table_rule(om, de, n_nodes)
    return FrequencyDensity("table", support, pairs[:, 0], pairs[:, 1],
                            table_omega=om, table_density=de)


def from_csv(path, n_nodes: int = 64) -> FrequencyDensity:
    """Load a table density from a CSV file with header columns omega,density."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["omega", "density"]:
            raise ValueError("expected CSV header 'omega,density'")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    if not rows:
        raise ValueError("empty density table")
    om, de = zip(*rows)
    return from_table(np.array(om), np.array(de), n_nodes=n_nodes)


def _uniform_rule(halfwidth: float, n: int) -> np.ndarray:
    x, w = np.polynomial.legendre.leggauss(n)
    nodes = halfwidth * x
    weights = 0.5 * w          # GL weight * halfwidth * density 1/(2*halfwidth)
    return np.column_stack([nodes, weights])


def _table_rule(om: np.ndarray, de: np.ndarray, n: int) -> np.ndarray:
    # Composite Gauss-Legendre: the density is linear on each segment, so a
    # per-segment rule integrates h*g exactly for polynomial h of low degree.
    n_seg = om.size - 1
    p = max(2, math.ceil(n / n_seg))
    x, w = np.polynomial.legendre.leggauss(p)
    nodes, weights = [], []
    for i in range(n_seg):
        a, b = om[i], om[i + 1]
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        seg_nodes = mid + half * x
        g = np.interp(seg_nodes, om, de)
        nodes.append(seg_nodes)
        weights.append(half * w * g)
    return np.column_stack([np.concatenate(nodes), np.concatenate(weights)])


def quadrature_nodes(g: FrequencyDensity, n: int) -> list[tuple[float, float]]:
    """Return an n-point density-folded rule for g as (node, weight) pairs.

    The dirac kind always collapses to the single pair (0, 1).
    """
    if n < 1:
        raise ValueError("node count must be >= 1")
    if g.kind == "dirac":
        return [(0.0, 1.0)]
    if g.kind == "uniform":
        pairs = _uniform_rule(g.halfwidth, n)
    else:
        pairs = _table_rule(g.table_omega, g.table_density, n)
    return [tuple(row) for row in pairs]


def with_nodes(g: FrequencyDensity, n: int) -> FrequencyDensity:
    """Same density, re-quadratured with (about) n nodes."""
    pairs = np.array(quadrature_nodes(g, n))
    return FrequencyDensity(g.kind, g.support, pairs[:, 0], pairs[:, 1],
                            halfwidth=g.halfwidth,
                            table_omega=g.table_omega, table_density=g.table_density)


def moments(g: FrequencyDensity) -> tuple[float, float]:
    """Quadrature-evaluated zeroth and first moments of g."""
    mass = float(np.sum(g.weights))
    mean = float(np.sum(g.nodes * g.weights))
    return mass, mean


def sample(g: FrequencyDensity, n: int, seed: int) -> np.ndarray:
    """Draw n frequencies from g, deterministically for a given seed."""
    if n < 1:
        raise ValueError("sample count must be >= 1")
    rng = np.random.default_rng(seed)
    if g.kind == "dirac":
        return np.zeros(n)
    if g.kind == "uniform":
        return rng.uniform(-g.halfwidth, g.halfwidth, n)
    om, de = g.table_omega, g.table_density
    dmax = float(de.max())
    if dmax <= 0:
        raise ValueError("cannot sample from an all-zero density table")
    out = np.empty(0)
    while out.size < n:
        batch = max(2 * (n - out.size), 128)
        x = rng.uniform(om[0], om[-1], batch)
        u = rng.uniform(0.0, dmax, batch)
        out = np.concatenate([out, x[u < np.interp(x, om, de)]])
    return out[:n]


def density_at(g: FrequencyDensity, omega) -> np.ndarray:
    """Pointwise density values; undefined for the dirac kind."""
    if g.kind == "dirac":
        raise ValueError("the dirac density has no pointwise values")
    om = np.asarray(omega, dtype=float)
    if g.kind == "uniform":
        return np.where(np.abs(om) <= g.halfwidth, 1.0 / (2.0 * g.halfwidth), 0.0)
    return np.interp(om, g.table_omega, g.table_density, left=0.0, right=0.0)


def inner_support_radius(g: FrequencyDensity) -> float:
    """Largest m with [-m, m] inside the support of g (0 for dirac).

    The support is the closure of {g > 0}, so a table whose density decays
    linearly to zero at its end nodes is supported up to those nodes.
    """
    if g.kind == "dirac":
        return 0.0
    if g.kind == "uniform":
        return g.halfwidth
    om, de = g.table_omega, g.table_density
    idx = np.flatnonzero(de > 0)
    if idx.size == 0:
        return 0.0
    lo = om[max(idx[0] - 1, 0)]
    hi = om[min(idx[-1] + 1, om.size - 1)]
    if lo < 0.0 < hi:
        return float(min(-lo, hi))
    return 0.0


def min_density_on_inner(g: FrequencyDensity) -> float:
    """min of g over [-m, m] with m the inner support radius."""
    m = inner_support_radius(g)
    if m <= 0:
        return 0.0
    if g.kind == "uniform":
        return 1.0 / (2.0 * g.halfwidth)
    grid = np.linspace(-m, m, 2049)
    return float(density_at(g, grid).min())


def locked_phasor_mean(g: FrequencyDensity, a: float) -> float:
    """Average of sqrt(1 - (omega/a)^2) over g, restricted to |omega| <= a.

    This is the self-consistency functional for locked equilibria, evaluated
    at a = K * R.  The part of g outside the lockable band |omega| <= a
    contributes zero.
    """
    if a <= 0:
        return 0.0
    if g.kind == "dirac":
        return 1.0
    if g.kind == "uniform":
        ell = g.halfwidth
        u = min(1.0, ell / a)
        return (a / (2.0 * ell)) * (u * math.sqrt(max(0.0, 1.0 - u * u)) + math.asin(u))
    om, de = g.table_omega, g.table_density
    lo, hi = max(om[0], -a), min(om[-1], a)
    if lo >= hi:
        return 0.0
    def f(w):
        return np.interp(w, om, de) * np.sqrt(np.maximum(0.0, 1.0 - (w / a) ** 2))
    knots = [w for w in om if lo < w < hi]
    val, _ = integrate.quad(f, lo, hi, points=knots or None, limit=200)
    return float(val)
