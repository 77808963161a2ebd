"""Independent numerical evaluation of the nonlocal functional.

Evaluates the double integral

    R(f) = integral over Omega x Omega of |f(x)-f(y)|^p / |x-y|^p phi(x-y)

directly from its definition, without reusing any of the closed-form schemes.
Two methods are available:

* ``gauss``: composite Gauss-Legendre quadrature. For piecewise-constant
  inputs the integral reduces exactly (Fubini) to per-cell-pair geometric
  factors which are integrated numerically; for splines and callbacks a band
  |x - y| < delta is excluded and the value extrapolated linearly in delta.
* ``mc``: stratified Monte Carlo with one counter-based stream per task
  derived from (seed, task id), so results are reproducible bit for bit
  regardless of evaluation order.

Geometric factors depend only on the relative cell offset and are cached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .kernels import Kernel, KernelKind, kernel_eval
from .schemes_1d import PiecewiseConstant1D, Spline1D
from .schemes_2d import Image2D, StencilWeights

GAUSS = "gauss"
MONTE_CARLO = "mc"

_MIN_MC_SAMPLES = 10_000
_STRATA_1D = 16


@dataclass(frozen=True)
class OracleConfig:
    """Evaluation policy for the oracle.

    ``samples`` is the total Monte Carlo budget for one evaluation, split
    evenly over the active integration tasks. ``points_per_cell_axis`` is the
    Gauss-Legendre order used on every quadrature panel.
    """

    method: str = MONTE_CARLO
    samples: int = 100_000
    points_per_cell_axis: int = 8
    seed: int = 0
    p: float = 1.0
    exclusion_band: float = 1e-6

    def __post_init__(self):
        if self.method not in (GAUSS, MONTE_CARLO):
            raise ValueError(f"method must be '{GAUSS}' or '{MONTE_CARLO}'")
        if self.method == MONTE_CARLO and self.samples < _MIN_MC_SAMPLES:
            raise ValueError(f"Monte Carlo needs at least {_MIN_MC_SAMPLES} samples")
        if not 2 <= self.points_per_cell_axis <= 64:
            raise ValueError("points_per_cell_axis must lie in [2, 64]")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not 0 < self.exclusion_band < 1e-2:
            raise ValueError("exclusion_band must lie in (0, 1e-2)")


@dataclass(frozen=True)
class EvalReport:
    """Oracle estimate with its error channel.

    ``stderr_estimate`` is the Monte Carlo standard error (zero for Gauss);
    ``richardson_delta`` is the Gauss refinement difference (zero for MC).
    """

    value: float
    stderr_estimate: float
    richardson_delta: float
    config: OracleConfig

    def __post_init__(self):
        if self.value < 0 or not math.isfinite(self.stderr_estimate):
            raise ValueError("malformed report")


def _stream(seed: int, task: int) -> np.random.Generator:
    # one independent counter-based stream per (seed, task)
    return np.random.Generator(np.random.Philox(key=[np.uint64(seed), np.uint64(task)]))


def _gauss_rule(g: int):
    nodes, weights = np.polynomial.legendre.leggauss(g)
    return nodes, weights


def _gauss_on_panels(fn, edges: np.ndarray, g: int) -> float:
    """Composite Gauss-Legendre of a vectorized integrand over panel edges."""
    nodes, weights = _gauss_rule(g)
    lo = edges[:-1][:, None]
    hi = edges[1:][:, None]
    pts = 0.5 * (hi + lo) + 0.5 * (hi - lo) * nodes[None, :]
    vals = fn(pts.ravel()).reshape(pts.shape)
    return float(np.sum(0.5 * (hi - lo) * weights[None, :] * vals))


def _refine(edges: np.ndarray) -> np.ndarray:
    mids = 0.5 * (edges[:-1] + edges[1:])
    out = np.empty(edges.size + mids.size)
    out[0::2] = edges
    out[1::2] = mids
    return out


def _stratified_mc(fn, a: float, b: float, nsamples: int, rng, nstrata: int):
    """Stratified uniform MC of a vectorized integrand over [a, b]."""
    edges = np.linspace(a, b, nstrata + 1)
    per = max(2, nsamples // nstrata)
    total = 0.0
    var = 0.0
    for s in range(nstrata):
        width = edges[s + 1] - edges[s]
        u = rng.uniform(edges[s], edges[s + 1], per)
        vals = fn(u)
        total += width * float(vals.mean())
        var += (width * float(vals.std(ddof=1)) / math.sqrt(per)) ** 2
    return total, math.sqrt(var)


# ---------------------------------------------------------------------------
# geometric factors: 1D


def _overlap_1d(u: np.ndarray, d: int, h: float) -> np.ndarray:
    # correlation length of two cells of width h at index distance d
    return np.maximum(h - np.abs(u - d * h), 0.0)


def _power_transformed(fn, b: float, p: float):
    # maps the u^{1-p}-singular integral over [0, b] to a bounded one on [0, 1]
    q = 2.0 - p

    def wrapped(v):
        v = np.maximum(v, 1e-300)
        u = b * v ** (1.0 / q)
        return fn(u) * (b / q) * v ** (1.0 / q - 1.0)

    return wrapped


@lru_cache(maxsize=4096)
def _factor_1d(d: int, grid_m: int, kind: KernelKind, kernel_n: int, method: str,
               g: int, nsamples: int, seed: int, p: float):
    """Unordered-pair weight for cells at index distance d: the kernel-weighted
    integral of 1/|x-y|^p over the cell pair, both orientations included."""
    kernel = Kernel(kind, kernel_n)
    h = 1.0 / grid_m
    height = kernel.height
    r = kernel.support_radius
    lo = max((d - 1) * h, 0.0)
    hi = min((d + 1) * h, r)
    if hi <= lo:
        return 0.0, 0.0

    def integrand(u):
        uu = np.maximum(u, 1e-300)
        return 2.0 * height * _overlap_1d(u, d, h) / uu ** p

    singular = d == 1 and p > 1.0 and lo == 0.0
    if singular and p >= 2.0:
        raise ValueError("the adjacent-pair factor diverges for p >= 2 in 1D")
    if method == GAUSS:
        inner = sorted({x for x in (lo, d * h, hi) if lo <= x <= hi})
        edges = np.asarray(inner)
        if singular:
            # first panel [0, e1] via the power substitution, rest plainly
            first = _power_transformed(integrand, edges[1], p)
            val = _gauss_on_panels(first, np.array([0.0, 1.0]), g)
            val_f = _gauss_on_panels(first, _refine(np.array([0.0, 1.0])), g)
            if edges.size > 2:
                val += _gauss_on_panels(integrand, edges[1:], g)
                val_f += _gauss_on_panels(integrand, _refine(edges[1:]), g)
        else:
            val = _gauss_on_panels(integrand, edges, g)
            val_f = _gauss_on_panels(integrand, _refine(edges), g)
        return val_f, abs(val_f - val)

    rng = _stream(seed, d)
    if singular:
        split = d * h if lo < d * h < hi else hi
        v1, e1 = _stratified_mc(_power_transformed(integrand, split, p),
                                0.0, 1.0, nsamples // 2, rng, _STRATA_1D)
        v2, e2 = (0.0, 0.0)
        if split < hi:
            v2, e2 = _stratified_mc(integrand, split, hi, nsamples // 2, rng,
                                    _STRATA_1D)
        return v1 + v2, math.hypot(e1, e2)
    return _stratified_mc(integrand, lo, hi, nsamples, rng, _STRATA_1D)


# ---------------------------------------------------------------------------
# geometric factors: 2D


def _tent(t: np.ndarray, d: int, h: float) -> np.ndarray:
    return np.maximum(h - np.abs(t - d * h), 0.0)


def _kink_angles(knots_x, knots_y, kernel: Kernel) -> np.ndarray:
    """Angles where the radial breakpoint structure of the polar integrand
    changes; used as theta panel boundaries."""
    r = kernel.support_radius
    cands = {0.0, 0.25 * math.pi, 0.5 * math.pi, 0.75 * math.pi, math.pi,
             1.25 * math.pi, 1.5 * math.pi, 1.75 * math.pi, 2.0 * math.pi}
    axis_vals = [abs(c) for c in knots_x + knots_y if c != 0.0]
    for c in axis_vals:
        if c < r:
            t = math.acos(c / r)
            for base in (t, math.pi - t, math.pi + t, 2 * math.pi - t):
                cands.add(base % (2 * math.pi))
            t = math.asin(min(c / r, 1.0))
            for base in (t, math.pi - t, math.pi + t, 2 * math.pi - t):
                cands.add(base % (2 * math.pi))
    for cx in [abs(c) for c in knots_x if c != 0.0]:
        for cy in [abs(c) for c in knots_y if c != 0.0]:
            t = math.atan2(cy, cx)
            for base in (t, math.pi - t, math.pi + t, 2 * math.pi - t):
                cands.add(base % (2 * math.pi))
    cands.add(2.0 * math.pi)
    return np.array(sorted(cands))


def _radial_cap(theta: float, kernel: Kernel) -> float:
    if kernel.kind is KernelKind.DISC2D:
        return kernel.support_radius
    denom = max(abs(math.cos(theta)), abs(math.sin(theta)))
    return kernel.support_radius / denom


def _polar_factor(dx: int, dy: int, h: float, kernel: Kernel, g: int,
                  theta_split: int, p: float) -> float:
    """Gauss evaluation of the 2D pair factor in polar coordinates.

    The radial integrand is piecewise polynomial for p = 1, so with panel
    boundaries at every tent knot crossing the inner integral is exact and
    the only error source is the angular quadrature (smooth per panel).
    """
    knots_x = [(dx - 1) * h, dx * h, (dx + 1) * h]
    knots_y = [(dy - 1) * h, dy * h, (dy + 1) * h]
    height = kernel.height
    base = _kink_angles(knots_x, knots_y, kernel)
    thetas = base
    for _ in range(theta_split):
        thetas = _refine(thetas)
    nodes, weights = _gauss_rule(g)
    total = 0.0
    for a, b in zip(thetas[:-1], thetas[1:]):
        if b - a <= 1e-14:
            continue
        th = 0.5 * (b + a) + 0.5 * (b - a) * nodes
        wt = 0.5 * (b - a) * weights
        for theta, w_theta in zip(th, wt):
            cap = _radial_cap(theta, kernel)
            c, s = math.cos(theta), math.sin(theta)
            breaks = {cap}
            for kx in knots_x:
                if c != 0.0:
                    rho = kx / c
                    if 0.0 < rho < cap:
                        breaks.add(rho)
            for ky in knots_y:
                if s != 0.0:
                    rho = ky / s
                    if 0.0 < rho < cap:
                        breaks.add(rho)
            edges = np.array(sorted({0.0} | breaks))

            def radial(rho):
                rr = np.maximum(rho, 1e-300)
                return (2.0 * height * _tent(rho * c, dx, h)
                        * _tent(rho * s, dy, h) * rr ** (1.0 - p))

            total += w_theta * _gauss_on_panels(radial, edges, g)
    return total


@lru_cache(maxsize=4096)
def _factor_2d(dx: int, dy: int, grid_n: int, kind: KernelKind, kernel_n: int,
               method: str, g: int, nsamples: int, seed: int, p: float):
    """Unordered-pair weight for cells at offset (dx, dy), both orientations."""
    dx, dy = sorted((abs(dx), abs(dy)), reverse=True)
    kernel = Kernel(kind, kernel_n)
    h = 1.0 / grid_n
    r = kernel.support_radius
    # cells are out of kernel reach when the gap between them already is
    gap = math.hypot(max(dx - 1, 0) * h, max(dy - 1, 0) * h)
    if gap >= r:
        return 0.0, 0.0
    if p >= 3.0 and dx <= 1 and dy <= 1:
        raise ValueError("the touching-pair factor diverges for p >= 3 in 2D")

    if method == GAUSS:
        val = _polar_factor(dx, dy, h, kernel, g, theta_split=2, p=p)
        val_f = _polar_factor(dx, dy, h, kernel, g, theta_split=3, p=p)
        return val_f, abs(val_f - val)

    # MC over the tent support box clipped to the kernel bounding box
    xlo, xhi = max((dx - 1) * h, -r), min((dx + 1) * h, r)
    ylo, yhi = max((dy - 1) * h, -r), min((dy + 1) * h, r)
    if xhi <= xlo or yhi <= ylo:
        return 0.0, 0.0
    rng = _stream(seed, 1024 * dx + dy)
    per_stratum = max(2, nsamples // 16)
    xs = np.linspace(xlo, xhi, 5)
    ys = np.linspace(ylo, yhi, 5)
    total = 0.0
    var = 0.0
    if kernel.kind is KernelKind.DISC2D:
        def phi(ux, uy):
            return np.where(ux * ux + uy * uy <= r * r, kernel.height, 0.0)
    else:
        def phi(ux, uy):
            return np.where(np.maximum(np.abs(ux), np.abs(uy)) <= r,
                            kernel.height, 0.0)
    for i in range(4):
        for j in range(4):
            ux = rng.uniform(xs[i], xs[i + 1], per_stratum)
            uy = rng.uniform(ys[j], ys[j + 1], per_stratum)
            norm = np.maximum(np.sqrt(ux * ux + uy * uy), 1e-300)
            vals = 2.0 * phi(ux, uy) * _tent(ux, dx, h) * _tent(uy, dy, h) / norm ** p
            cell_area = (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j])
            total += cell_area * float(vals.mean())
            var += (cell_area * float(vals.std(ddof=1)) / math.sqrt(per_stratum)) ** 2
    return total, math.sqrt(var)


# ---------------------------------------------------------------------------
# assembled evaluations


def _eval_pc_1d(f: PiecewiseConstant1D, kernel: Kernel, cfg: OracleConfig) -> EvalReport:
    m = f.n
    h = 1.0 / m
    a = f.coeffs
    d_max = int(math.floor(kernel.support_radius / h + 1.0 - 1e-12))
    tasks = []
    for d in range(1, min(d_max, m - 1) + 1):
        coeff_sum = float(np.sum(np.abs(a[d:] - a[:-d]) ** cfg.p))
        if coeff_sum > 0.0:
            tasks.append((d, coeff_sum))
    if not tasks:
        return EvalReport(0.0, 0.0, 0.0, cfg)
    if cfg.p >= 2.0 and any(d == 1 for d, _ in tasks):
        raise ValueError("the functional is infinite for a discontinuous "
                         "piecewise constant when p >= 2")
    per_task = max(1000, cfg.samples // len(tasks))
    value = 0.0
    var = 0.0
    delta = 0.0
    for d, coeff_sum in tasks:
        fac, err = _factor_1d(d, m, kernel.kind, kernel.n, cfg.method,
                              cfg.points_per_cell_axis, per_task, cfg.seed, cfg.p)
        value += coeff_sum * fac
        if cfg.method == MONTE_CARLO:
            var += (coeff_sum * err) ** 2
        else:
            delta += coeff_sum * err
    return EvalReport(value, math.sqrt(var), delta, cfg)


def _half_plane_offsets(reach: int):
    # one representative per unordered pair direction
    for dx in range(0, reach + 1):
        for dy in range(-reach, reach + 1):
            if dx == 0 and dy <= 0:
                continue
            yield dx, dy


def _eval_image_2d(f: Image2D, kernel: Kernel, cfg: OracleConfig) -> EvalReport:
    n = f.n
    h = 1.0 / n
    a = f.coeffs
    reach = int(math.floor(kernel.support_radius / h)) + 1
    tasks = []
    for dx, dy in _half_plane_offsets(reach):
        gap = math.hypot(max(abs(dx) - 1, 0) * h, max(abs(dy) - 1, 0) * h)
        if gap >= kernel.support_radius:
            continue
        lo_y, hi_y = max(0, -dy), min(n, n - dy)
        if dx >= n or hi_y <= lo_y:
            continue
        shifted = a[dx:, lo_y + dy:hi_y + dy]
        base = a[:n - dx, lo_y:hi_y]
        coeff_sum = float(np.sum(np.abs(base - shifted) ** cfg.p))
        if coeff_sum > 0.0:
            tasks.append((dx, dy, coeff_sum))
    if not tasks:
        return EvalReport(0.0, 0.0, 0.0, cfg)
    # edge-adjacent cell pairs make the integral divergent from p = 3 on
    # (the 2D correlation area vanishes linearly at the origin)
    if cfg.p >= 3.0 and any(max(abs(dx), abs(dy)) == 1 for dx, dy, _ in tasks):
        raise ValueError("the functional is infinite for a discontinuous "
                         "image when p >= 3")
    canonical = sorted({tuple(sorted((abs(dx), abs(dy)), reverse=True))
                        for dx, dy, _ in tasks})
    per_task = max(1000, cfg.samples // len(canonical))
    value = 0.0
    var_by_offset = {}
    val_by_offset = {}
    delta = 0.0
    for off in canonical:
        fac, err = _factor_2d(off[0], off[1], n, kernel.kind, kernel.n,
                              cfg.method, cfg.points_per_cell_axis, per_task,
                              cfg.seed, cfg.p)
        val_by_offset[off] = fac
        var_by_offset[off] = err
    err_coeffs = {off: 0.0 for off in canonical}
    for dx, dy, coeff_sum in tasks:
        off = tuple(sorted((abs(dx), abs(dy)), reverse=True))
        value += coeff_sum * val_by_offset[off]
        err_coeffs[off] += coeff_sum
    var = 0.0
    for off in canonical:
        if cfg.method == MONTE_CARLO:
            var += (err_coeffs[off] * var_by_offset[off]) ** 2
        else:
            delta += err_coeffs[off] * var_by_offset[off]
    return EvalReport(value, math.sqrt(var), delta, cfg)


def _curve_breaks(knots: np.ndarray, shift: float, lo: float, hi: float) -> np.ndarray:
    pts = np.concatenate([knots, knots + shift])
    pts = pts[(pts > lo + 1e-15) & (pts < hi - 1e-15)]
    return np.unique(np.concatenate([[lo], np.sort(pts), [hi]]))


def _x_integral(func, u: float, knots: np.ndarray, p: float, g: int,
                split_roots: bool) -> float:
    """Integral over x in (u, 1) of |f(x) - f(x-u)|^p, with x panels at every
    knot of f and of its shift; panels are split at sign changes of the
    difference (exact for piecewise-linear f)."""
    edges = _curve_breaks(knots, u, u, 1.0)
    if split_roots:
        refined = [edges[0]]
        for xa, xb in zip(edges[:-1], edges[1:]):
            da = float(func(np.array([xa]))[0] - func(np.array([xa - u]))[0])
            db = float(func(np.array([xb]))[0] - func(np.array([xb - u]))[0])
            if (da > 0) != (db > 0) and da != db:
                root = xa + (xb - xa) * da / (da - db)
                if xa < root < xb:
                    refined.append(root)
            refined.append(xb)
        edges = np.asarray(refined)

    def integrand(x):
        return np.abs(func(x) - func(x - u)) ** p

    return _gauss_on_panels(integrand, edges, g)


def _curve_gauss_1d(func, knots: np.ndarray, kernel: Kernel, cfg: OracleConfig,
                    split_roots: bool) -> EvalReport:
    r = kernel.support_radius
    height = kernel.height
    g = cfg.points_per_cell_axis

    def band_value(delta: float) -> float:
        u_edges = _curve_breaks(knots, 0.0, delta, r)
        u_edges = _refine(_refine(u_edges))
        nodes, weights = _gauss_rule(g)
        total = 0.0
        for ua, ub in zip(u_edges[:-1], u_edges[1:]):
            us = 0.5 * (ub + ua) + 0.5 * (ub - ua) * nodes
            ws = 0.5 * (ub - ua) * weights
            for u, w in zip(us, ws):
                total += w * _x_integral(func, float(u), knots, cfg.p, g,
                                         split_roots) / float(u) ** cfg.p
        return 2.0 * height * total

    delta = cfg.exclusion_band
    near = band_value(delta)
    far = band_value(2.0 * delta)
    value = 2.0 * near - far
    return EvalReport(max(value, 0.0), 0.0, abs(near - far), cfg)


def _curve_mc_1d(func, kernel: Kernel, cfg: OracleConfig) -> EvalReport:
    r = kernel.support_radius
    height = kernel.height
    per = max(1000, cfg.samples // _STRATA_1D)
    edges = np.linspace(-r, r, _STRATA_1D + 1)
    total = 0.0
    var = 0.0
    for s in range(_STRATA_1D):
        rng = _stream(cfg.seed, s)
        u = rng.uniform(edges[s], edges[s + 1], per)
        x = rng.uniform(0.0, 1.0, per)
        y = x - u
        ok = (y > 0.0) & (y < 1.0) & (u != 0.0)
        uu = np.where(ok, np.abs(u), 1.0)
        vals = np.where(ok, height * np.abs(func(x) - func(np.clip(y, 0.0, 1.0)))
                        ** cfg.p / uu ** cfg.p, 0.0)
        width = edges[s + 1] - edges[s]
        total += width * float(vals.mean())
        var += (width * float(vals.std(ddof=1)) / math.sqrt(per)) ** 2
    return EvalReport(total, math.sqrt(var), 0.0, cfg)


def _callable_mc_2d(func, kernel: Kernel, cfg: OracleConfig) -> EvalReport:
    r = kernel.support_radius
    nsamples = cfg.samples
    rng = _stream(cfg.seed, 0)
    x1 = rng.uniform(0.0, 1.0, nsamples)
    x2 = rng.uniform(0.0, 1.0, nsamples)
    u1 = rng.uniform(-r, r, nsamples)
    u2 = rng.uniform(-r, r, nsamples)
    y1, y2 = x1 - u1, x2 - u2
    ok = (y1 > 0) & (y1 < 1) & (y2 > 0) & (y2 < 1)
    norm = np.sqrt(u1 * u1 + u2 * u2)
    ok &= norm > 0
    phi = np.array([kernel_eval(kernel, (a, b)) for a, b in zip(u1, u2)])
    fx = func(x1, x2)
    fy = func(np.clip(y1, 0, 1), np.clip(y2, 0, 1))
    safe = np.where(ok, norm, 1.0)
    vals = np.where(ok, phi * np.abs(fx - fy) ** cfg.p / safe ** cfg.p, 0.0)
    measure = (2.0 * r) ** 2
    value = measure * float(vals.mean())
    stderr = measure * float(vals.std(ddof=1)) / math.sqrt(nsamples)
    return EvalReport(value, stderr, 0.0, cfg)


def geometric_factor_1d(d: int, grid_m: int, kernel: Kernel, cfg: OracleConfig,
                        samples: int | None = None):
    """Kernel-weighted integral of 1/|x-y|^p over a 1D cell pair at index
    distance ``d`` (both orientations). Returns (value, error estimate)."""
    if d < 1 or grid_m < 1:
        raise ValueError("need d >= 1 and grid_m >= 1")
    return _factor_1d(d, grid_m, kernel.kind, kernel.n, cfg.method,
                      cfg.points_per_cell_axis,
                      samples if samples is not None else cfg.samples,
                      cfg.seed, cfg.p)


def geometric_factor_2d(offset, grid_n: int, kernel: Kernel, cfg: OracleConfig,
                        samples: int | None = None):
    """Kernel-weighted integral of 1/|x-y|^p over a 2D cell pair at the given
    offset (both orientations). Returns (value, error estimate)."""
    dx, dy = offset
    if (dx, dy) == (0, 0) or grid_n < 1:
        raise ValueError("offset must be nonzero and grid_n >= 1")
    d1, d2 = sorted((abs(dx), abs(dy)), reverse=True)
    return _factor_2d(d1, d2, grid_n, kernel.kind, kernel.n, cfg.method,
                      cfg.points_per_cell_axis,
                      samples if samples is not None else cfg.samples,
                      cfg.seed, cfg.p)


def oracle_eval(f, kernel: Kernel, cfg: OracleConfig) -> EvalReport:
    """Estimate the nonlocal functional of ``f`` directly from its defining
    double integral.

    ``f`` may be a :class:`PiecewiseConstant1D`, :class:`Spline1D`,
    :class:`Image2D`, or a vectorized callable on Omega (one positional array
    argument in 1D, two in 2D). The kernel dimension must match the input.
    """
    if isinstance(f, PiecewiseConstant1D):
        if kernel.dim != 1:
            raise ValueError("1D input needs a 1D kernel")
        return _eval_pc_1d(f, kernel, cfg)
    if isinstance(f, Image2D):
        if kernel.dim != 2:
            raise ValueError("2D input needs a 2D kernel")
        return _eval_image_2d(f, kernel, cfg)
    if isinstance(f, Spline1D):
        if kernel.dim != 1:
            raise ValueError("1D input needs a 1D kernel")
        knots = np.linspace(0.0, 1.0, f.n + 1)
        if cfg.method == GAUSS:
            return _curve_gauss_1d(f, knots, kernel, cfg,
                                   split_roots=cfg.p in (1.0, 2.0))
        return _curve_mc_1d(f, kernel, cfg)
    if callable(f):
        if kernel.dim == 1:
            if cfg.method == GAUSS:
                knots = np.linspace(0.0, 1.0, 33)
                return _curve_gauss_1d(f, knots, kernel, cfg, split_roots=False)
            return _curve_mc_1d(f, kernel, cfg)
        if cfg.method == GAUSS:
            raise ValueError("Gauss quadrature for 2D inputs is only available "
                             "for piecewise-constant images; use Monte Carlo")
        return _callable_mc_2d(f, kernel, cfg)
    raise TypeError(f"unsupported input type {type(f).__name__}")


def fit_stencil(kind: KernelKind, n: int, cfg: OracleConfig) -> StencilWeights:
    """Recover the lateral/diagonal pair weights empirically from oracle
    evaluations of two basis images.

    The checkerboard image has equal diagonal neighbours everywhere, so its
    value isolates the lateral weight; a half-plane edge image then yields
    the diagonal weight from a single linear equation.
    """
    if not 2 <= n <= 8:
        raise ValueError("stencil fitting supports n in [2, 8]")
    if kind not in (KernelKind.DISC2D, KernelKind.SQUARE2D):
        raise ValueError("stencil fitting requires a 2D kernel")
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    checker = Image2D(((ii + jj) % 2).astype(float))
    edge = Image2D((ii >= n // 2).astype(float))
    kernel = Kernel(kind, n)
    r_checker = oracle_eval(checker, kernel, cfg).value
    r_edge = oracle_eval(edge, kernel, replace(cfg, seed=cfg.seed + 1)).value
    lateral = r_checker / (2.0 * n * (n - 1))
    diagonal = (r_edge - n * lateral) / (2.0 * (n - 1))
    return StencilWeights(lateral=lateral, diagonal=diagonal, kernel_kind=kind, n=n)
