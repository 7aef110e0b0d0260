"""Green function and log-Böttcher coordinates for quadratic Julia sets.

For f_c(z) = z^2 + c the complement of the Julia set K_c carries the
dynamical Green function

    G(z) = lim_n 2^{-n} log |f_c^n(z)|,

harmonic and positive off K_c with G(f_c(z)) = 2 G(z) and
G(z) = log|z| + o(1) at infinity (Robin constant 0, capacity 1 for a monic
quadratic).  The Green chart pairs G with an external angle theta so that
phi(z) = exp(g + 2*pi*i*theta) is the Böttcher coordinate; here angles are
measured in [0, 1) increasing counterclockwise, the positive real direction
at infinity being angle 0.

In the Cantor case (escaping critical orbit) the chart is defined off the
skeleton: the external angle is two-valued on the subcritical parts of the
critical rays, and rays at the (dyadic) critical access angles crash at
precritical points.  All angle combinatorics is exact; see `angles.py`.

Supported parameter range for the full chart:
  * real c < -2      -- Cantor, critical value angle exactly 1/2;
  * real -2 <= c <= 1/4 -- connected, empty skeleton;
  * other c          -- escape_green everywhere; angles only while the
    argument lift stays certified (high potential), else AngleUnresolved.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from . import angles as ang
from .errors import (AngleUnresolved, Connected, CriticalLevel, InsideK,
                     NonFinite, OnSkeleton, RayCrash)

# Potential above which the Böttcher correction series is certified
# principal-branch safe (|c/w^2| stays tiny along the tail).
G_FAR = 6.0
# Substeps per potential octave in ray descent.
_SUBSTEPS = 12
# Magnitude beyond which iterates are treated as infinite-precision escapes.
_HUGE = 1e150


@dataclass(frozen=True)
class QuadraticParams:
    """Parameters of one quadratic system f_c(z) = z^2 + c."""

    c: complex
    escape_radius: float
    max_iter: int = 256
    tol: float = 1e-9

    def __post_init__(self):
        if not (cmath.isfinite(self.c)):
            raise NonFinite("parameter c must be finite")
        if self.escape_radius < 2.0 + abs(self.c):
            raise ValueError("escape_radius must be >= 2 + |c|")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not (self.tol > 0):
            raise ValueError("tol must be positive")


class GreenCoordinate(NamedTuple):
    """Log-Böttcher coordinate: external angle in [0,1) and Green potential."""

    angle: float
    potential: float


@dataclass(frozen=True)
class GreenSystem:
    """A computable Green chart for one quadratic parameter.

    `connectivity` is decided by the critical orbit within max_iter
    (bounded orbit => connected).  The critical value angle is stored as an
    exact rational; for real c < -2 it is 1/2.
    """

    params: QuadraticParams
    connectivity: str                      # 'cantor' | 'connected'
    critical_value_angle: Fraction | None
    robin_constant: float = 0.0
    _g0: float = field(default=0.0, repr=False)

    @staticmethod
    def from_c(c: complex, escape_radius: float | None = None,
               max_iter: int = 256, tol: float = 1e-9,
               critical_value_angle: Fraction | None = None) -> "GreenSystem":
        c = complex(c)
        if escape_radius is None:
            escape_radius = max(2.0 + abs(c), 3.0)
        params = QuadraticParams(c, escape_radius, max_iter, tol)
        g0, _ = _escape_green(params, 0.0 + 0.0j)
        if g0 <= 0.0:
            return GreenSystem(params, "connected", None, 0.0, 0.0)
        cva = critical_value_angle
        if cva is None:
            if c.imag == 0.0 and c.real < -2.0:
                cva = Fraction(1, 2)
            else:
                raise ValueError(
                    "critical_value_angle must be supplied for a Cantor "
                    "parameter off the real ray c < -2")
        cva = ang.frac1(Fraction(cva))
        if cva.denominator % 2 == 1:
            raise ValueError(
                "critical value angle periodic under doubling is non-generic "
                "and unsupported")
        return GreenSystem(params, "cantor", cva, 0.0, g0)

    @property
    def c(self) -> complex:
        return self.params.c

    @property
    def tol(self) -> float:
        return self.params.tol

    @property
    def is_cantor(self) -> bool:
        return self.connectivity == "cantor"

    @property
    def is_real(self) -> bool:
        return self.params.c.imag == 0.0


# ---------------------------------------------------------------------------
# Green potential
# ---------------------------------------------------------------------------

def _escape_green(params: QuadraticParams, z: complex) -> tuple[float, float]:
    c = params.c
    w = complex(z)
    if not cmath.isfinite(w):
        raise NonFinite("input point is not finite")
    ac = abs(c)
    n = 0
    while n < params.max_iter:
        a = abs(w)
        if a >= params.escape_radius:
            # certified escaping: keep doubling until the harmonic tail
            # |G - 2^-n log|w|| <= 2^-n |c| / (|w|^2 - |c|) drops below tol
            err = math.ldexp(ac / (a * a - ac), -n) if a < _HUGE else 0.0
            if err <= 0.5 * params.tol or a >= _HUGE:
                return math.ldexp(math.log(a), -n), err
        elif a >= _HUGE:
            raise NonFinite(
                "iterate overflow before escape certification; "
                "escape_radius too large for the float range")
        w = w * w + c
        n += 1
        if not cmath.isfinite(w):
            raise NonFinite("iterate overflow")
    a = abs(w)
    if a >= params.escape_radius:
        # escaped but the budget ran out before the tail bound met tol:
        # return the estimate with its honest (larger) bound
        return math.ldexp(math.log(a), -n), math.ldexp(ac / (a * a - ac), -n)
    return 0.0, params.tol


def escape_green(sys: GreenSystem, z: complex) -> tuple[float, float]:
    """Green potential of z with a certified absolute error bound.

    Returns (0, tol) when the orbit stays bounded for max_iter steps, i.e.
    the point is treated as in or at the Julia set.
    """
    return _escape_green(sys.params, z)


def critical_potential(sys: GreenSystem) -> float:
    """Potential G(0) of the critical point (the top critical level)."""
    if not sys.is_cantor:
        raise Connected("critical potential vanishes for a connected Julia set")
    return sys._g0


# ---------------------------------------------------------------------------
# Far-field Böttcher chart
# ---------------------------------------------------------------------------

def _phi_ratio(c: complex, w: complex) -> complex:
    """phi(w)/w = prod (1 + c/w_n^2)^(2^-(n+1)), certified at |w| >= e^G_FAR."""
    log_ratio = 0.0 + 0.0j
    wn = w
    p = 0.5
    for _ in range(64):
        if abs(wn) >= _HUGE:
            break
        u = c / (wn * wn)
        if abs(u) > 0.5:
            raise AngleUnresolved("Böttcher series used below its domain")
        term = cmath.log(1.0 + u)
        log_ratio += p * term
        if p * abs(term) < 1e-18:
            break
        wn = wn * wn + c
        p *= 0.5
    return cmath.exp(log_ratio)


def _theta_far(c: complex, w: complex) -> float:
    """External angle of a far-field point (potential >= G_FAR), in turns."""
    a = cmath.phase(w)
    wn = w
    p = 0.5
    for _ in range(64):
        if abs(wn) >= _HUGE:
            break
        u = c / (wn * wn)
        if abs(u) > 0.5:
            raise AngleUnresolved("Böttcher series used below its domain")
        corr = cmath.phase(1.0 + u)
        a += p * corr
        if p * abs(corr) < 1e-18:
            break
        wn = wn * wn + c
        p *= 0.5
    return (a / (2.0 * math.pi)) % 1.0


def _far_point(c: complex, theta: float, g: float) -> complex:
    """Invert the Böttcher chart at high potential (g >= G_FAR - 0.5)."""
    u = cmath.exp(complex(g, 2.0 * math.pi * theta))
    w = u
    for _ in range(6):
        w = u / _phi_ratio(c, w)
    return w


# ---------------------------------------------------------------------------
# External angle of a point
# ---------------------------------------------------------------------------

def _real_fold_bit(zj: complex) -> bool:
    """Itinerary bit for real parameters: True on the left cell.

    The dividing curve between the angle cells (-1/4, 1/4) and (1/4, 3/4)
    is the imaginary axis (rays 1/4 and 3/4) plus a real gap segment, so the
    sign of Re decides; exactly imaginary points sit on the rays and are
    assigned by the sign of Im (upper axis = ray 1/4).
    """
    if zj.real != 0.0:
        return zj.real < 0.0
    return zj.imag > 0.0


def _near_skeleton(sys: GreenSystem, theta: float, g: float, guard: float) -> bool:
    if not sys.is_cantor:
        return False
    g0 = sys._g0
    tc = float(sys.critical_value_angle)
    pot = g0
    n = 0
    while pot > g - guard and n < 64:
        t = math.ldexp(theta, n + 1) % 1.0
        d = abs(t - tc)
        d = min(d, 1.0 - d) / math.ldexp(1.0, n + 1)
        if d <= guard and g <= pot + guard:
            return True
        pot *= 0.5
        n += 1
    return False


def log_bottcher(sys: GreenSystem, z: complex) -> GreenCoordinate:
    """Green coordinate (external angle, potential) of an exterior point.

    Raises InsideK at vanishing potential and OnSkeleton within guard
    distance (10*tol, measured in angle) of a skeleton arc, where the angle
    is two-valued.
    """
    g, _ = escape_green(sys, z)
    if g <= 0.0:
        raise InsideK("point has zero Green potential")
    c = sys.c

    orbit = [complex(z)]
    gj = g
    while gj < G_FAR:
        w = orbit[-1]
        orbit.append(w * w + c)
        gj *= 2.0
    m = len(orbit) - 1

    if sys.is_real:
        t = _theta_far(c, orbit[m])
        for j in range(m - 1, -1, -1):
            half = t / 2.0
            if half < 0.25:
                cand_r, cand_l = half, half + 0.5
            else:
                cand_r, cand_l = half + 0.5, half
            t = cand_l if _real_fold_bit(orbit[j]) else cand_r
        theta = t % 1.0
    else:
        # Halve the far angle back along the orbit, resolving each branch by
        # the principal argument; certified while every correction term
        # |c/w^2| stays below 1/2 (cumulative angle error < 1/4 turn, smaller
        # than the candidate separation 1/2).
        theta = _theta_far(c, orbit[m])
        for j in range(m - 1, -1, -1):
            w = orbit[j]
            if abs(c / (w * w)) >= 0.5:
                raise AngleUnresolved(
                    "argument lift uncertified for non-real c at this "
                    "potential; evaluate at higher potential")
            base = (cmath.phase(w) / (2.0 * math.pi)) % 1.0
            cands = ((theta / 2.0) % 1.0, (theta / 2.0 + 0.5) % 1.0)
            theta = min(cands, key=lambda t_: _circ_dist(t_, base))
        theta %= 1.0

    if _near_skeleton(sys, theta, g, 10.0 * sys.tol):
        raise OnSkeleton("external angle is two-valued within guard distance "
                         "of a skeleton arc")
    return GreenCoordinate(theta, g)


def _circ_dist(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


# ---------------------------------------------------------------------------
# Ray descent (inverse iteration)
# ---------------------------------------------------------------------------

def _crash_level(sys: GreenSystem, theta: Fraction) -> int | None:
    """Level n if theta is a critical access angle (2^(n+1) theta == theta_c).

    Doubling strips one factor of 2 from the denominator per step, so tc
    (even denominator) is only reachable within the 2-adic valuation of
    theta's denominator.
    """
    if not sys.is_cantor:
        return None
    tc = sys.critical_value_angle
    t = ang.frac1(theta)
    q = t.denominator
    val2 = (q & -q).bit_length() - 1
    for n in range(val2):
        t = ang.frac1(2 * t)
        if t == tc:
            return n
    return None


def _descend_ray(sys: GreenSystem, theta: Fraction, targets: Sequence[float],
                 crash_side: int | None = None) -> list[complex]:
    """Points on the external ray `theta` at the given descending potentials.

    Standard inverse-iteration ray tracing: a ladder of potentials with
    _SUBSTEPS rungs per octave; at each rung the point is pulled back through
    the tower of doubled angles, choosing square-root branches by proximity
    to the previous rung's tower.  `crash_side` selects the one-sided limit
    (+1 counterclockwise) when theta is exactly a critical access angle;
    None raises RayCrash instead.
    """
    c = sys.c
    tol = sys.tol
    targets = list(targets)
    if any(g <= 0.0 for g in targets):
        raise ValueError("ray potentials must be positive")
    if any(targets[i] < targets[i + 1] for i in range(len(targets) - 1)):
        raise ValueError("target potentials must be non-increasing")
    g_min = targets[-1]

    theta = ang.frac1(Fraction(theta))
    level = _crash_level(sys, theta)
    if level is not None:
        gp = sys._g0 / (2 ** level)
        if any(abs(g - gp) <= tol for g in targets) or g_min < gp:
            if crash_side is None or any(abs(g - gp) <= tol for g in targets):
                raise RayCrash(
                    f"ray {theta} crashes at a level-{level} precritical point",
                    crash_potential=gp, level=level)
            # one-sided limit: offset by a 2^-30 fraction of the access
            # spacing at the crash level, on the requested side
            theta = theta + crash_side * Fraction(1, 2 ** (level + 2)) / (1 << 30)
            theta = ang.frac1(theta)

    # ladder of rung potentials: geometric with exact targets inserted
    ratio = 2.0 ** (1.0 / _SUBSTEPS)
    rungs: list[float] = []
    t_idx = 0
    tau = max(targets[0], G_FAR)
    while True:
        while t_idx < len(targets) and targets[t_idx] >= tau:
            if not rungs or targets[t_idx] < rungs[-1]:
                rungs.append(targets[t_idx])
            t_idx += 1
        if t_idx >= len(targets):
            break
        if not rungs or tau < rungs[-1]:
            rungs.append(tau)
        tau /= ratio

    def theta_at(j: int) -> float:
        return float(ang.frac1(theta * (1 << j)))

    prev_chain: dict[int, complex] = {}
    out: dict[float, complex] = {}
    crash_guard = 1e-12 * max(1.0, abs(c))

    for tau in rungs:
        ell = 0
        while math.ldexp(tau, ell) < G_FAR:
            ell += 1
        chain: dict[int, complex] = {}
        chain[ell] = _far_point(c, theta_at(ell), math.ldexp(tau, ell))
        for j in range(ell - 1, -1, -1):
            wj1 = chain[j + 1]
            dz = wj1 - c
            if abs(dz) <= crash_guard:
                raise RayCrash(
                    "ray passes through a precritical point",
                    crash_potential=math.ldexp(tau, j + 1) / 2.0)
            r = cmath.sqrt(dz)
            anchor = prev_chain.get(j)
            if anchor is None:
                anchor = _far_point(c, theta_at(j), max(math.ldexp(tau, j), G_FAR))
            if abs(r - anchor) > abs(-r - anchor):
                r = -r
            chain[j] = r
        prev_chain = chain
        if tau in targets:
            out[tau] = chain[0]

    return [out[g] for g in targets]


def invert_green_coords(sys: GreenSystem, gc: GreenCoordinate | tuple) -> complex:
    """Point with the given Green coordinate.

    For an exact critical access angle below its crash potential the
    counterclockwise one-sided limit is returned (documented convention);
    exactly at the crash potential RayCrash is raised.
    """
    theta, g = gc
    if not g > 0.0:
        raise ValueError("potential must be positive")
    if g > 300.0:
        raise ValueError("potential too large for the float chart range")
    if isinstance(theta, Fraction):
        th = theta
    else:
        th = Fraction(float(theta) % 1.0)
    return _descend_ray(sys, th, [float(g)], crash_side=+1)[0]


class RayPoint(NamedTuple):
    point: complex
    potential: float
    angle: float


def trace_ray(sys: GreenSystem, angle, g_lo: float, g_hi: float,
              n_samples: int) -> list[RayPoint]:
    """Sample the external ray between two potentials (geometric steps,
    monotonically decreasing from g_hi to g_lo)."""
    if not (0.0 < g_lo < g_hi):
        raise ValueError("require 0 < g_lo < g_hi")
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    ratio = (g_lo / g_hi) ** (1.0 / (n_samples - 1))
    pots = [g_hi * ratio ** i for i in range(n_samples)]
    pots[-1] = g_lo
    th = angle if isinstance(angle, Fraction) else Fraction(float(angle) % 1.0)
    pts = _descend_ray(sys, th, pots, crash_side=None)
    a = float(ang.frac1(th))
    return [RayPoint(p, g, a) for p, g in zip(pts, pots)]


# ---------------------------------------------------------------------------
# Equipotentials, precritical points, skeleton
# ---------------------------------------------------------------------------

def _critical_levels_above(sys: GreenSystem, g: float) -> int:
    """Number of critical potentials strictly above g (0 when connected)."""
    if not sys.is_cantor:
        return 0
    k = 0
    pot = sys._g0
    while pot > g:
        k += 1
        pot *= 0.5
        if k > 200:
            break
    return k


def trace_equipotential(sys: GreenSystem, g: float,
                        n_samples: int) -> list[list[complex]]:
    """The level set {G = g} as closed curves, harmonically parametrized.

    There are 2^k Jordan curves when k critical potentials lie above g; each
    is sampled at n_samples equal steps of harmonic measure (its angle
    window).  The first point is not repeated at the end.
    """
    if not g > 0.0:
        raise ValueError("potential must be positive")
    if n_samples < 3:
        raise ValueError("n_samples must be >= 3")
    if sys.is_cantor:
        pot = sys._g0
        for _ in range(200):
            if abs(g - pot) < sys.tol:
                raise CriticalLevel(
                    f"level {g} is critical (within tol of {pot})")
            if pot < g:
                break
            pot *= 0.5
    k = _critical_levels_above(sys, g)
    if k == 0:
        curves = []
        pts = [invert_green_coords(sys, (Fraction(2 * i + 1, 2 * n_samples), g))
               for i in range(n_samples)]
        return [pts]
    levels = ang.level_windows(sys.critical_value_angle, k)
    curves = []
    for node in levels[k]:
        origin = ang.entering_access(node.window, node.outer_pair)
        total = ang.window_measure(node.window)
        pts = []
        for i in range(n_samples):
            s = total * Fraction(2 * i + 1, 2 * n_samples)
            th = ang.frac1(Fraction(ang.invert_position(node.window, origin, s)))
            pts.append(invert_green_coords(sys, (th, g)))
        curves.append(pts)
    return curves


class PrecriticalPoint(NamedTuple):
    point: complex
    potential: float
    level: int


def precritical_points(sys: GreenSystem, depth: int) -> list[PrecriticalPoint]:
    """Iterated preimages f^-n(0) for n <= depth, with measured potentials."""
    if not sys.is_cantor:
        raise Connected("precritical points of G exist only in the Cantor case")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    c = sys.c
    out = [PrecriticalPoint(0.0 + 0.0j, sys._g0, 0)]
    layer = [0.0 + 0.0j]
    for n in range(1, depth + 1):
        nxt = []
        for p in layer:
            r = cmath.sqrt(p - c)
            nxt.extend((r, -r))
        layer = nxt
        for p in layer:
            out.append(PrecriticalPoint(p, escape_green(sys, p)[0], n))
    return out


@dataclass(frozen=True)
class SkeletonArc:
    """A subcritical critical-ray arc through one precritical point."""

    precritical_point: complex
    point_potential: float
    level: int
    access_angles: tuple[Fraction, Fraction]
    polyline: tuple[complex, ...]


def _itinerary_address(sys: GreenSystem, p: complex, length: int) -> tuple[int, ...]:
    """Cell address of an exterior point from the sign itinerary (real c)."""
    bits = []
    w = complex(p)
    for _ in range(length):
        bits.append(1 if _real_fold_bit(w) else 0)
        w = w * w + sys.c
    return tuple(bits)


def skeleton(sys: GreenSystem, depth: int, arc_samples: int = 24) -> list[SkeletonArc]:
    """Skeleton arcs down to the given precritical depth.

    Each level-n precritical point carries the two access angles solving
    2^(n+1) theta = theta_c that bound its cell; the polyline samples the
    two one-sided descending branches through the point.
    """
    if not sys.is_cantor:
        return []
    if not sys.is_real:
        raise AngleUnresolved(
            "skeleton cell pairing uses the real-axis itinerary; "
            "non-real parameters are unsupported")
    levels = ang.level_windows(sys.critical_value_angle, depth)
    by_address = {node.address: node for layer in levels for node in layer}
    arcs: list[SkeletonArc] = []
    for pc in precritical_points(sys, depth):
        addr = _itinerary_address(sys, pc.point, pc.level)
        node = by_address[addr]
        a1, a2 = node.inner_pair
        g_top = pc.potential
        pots = [g_top * (0.5 ** (3.0 * i / max(arc_samples - 1, 1)))
                for i in range(1, arc_samples + 1)]
        plus = _descend_ray(sys, a1, pots, crash_side=+1)
        minus = _descend_ray(sys, a1, pots, crash_side=-1)
        poly = tuple(reversed(minus)) + (pc.point,) + tuple(plus)
        arcs.append(SkeletonArc(pc.point, pc.potential, pc.level,
                                (a1, a2), poly))
    return arcs


def _far_points_np(c: complex, thetas: np.ndarray, g: float) -> np.ndarray:
    u = np.exp(g + 2j * np.pi * thetas)
    w = u.copy()
    for _ in range(6):
        log_ratio = np.zeros_like(w)
        wn = w
        p = 0.5
        for _ in range(8):
            un = c / (wn * wn)
            log_ratio = log_ratio + p * np.log1p(un)
            if p * np.abs(un).max() < 1e-18:
                break
            wn = wn * wn + c
            p *= 0.5
        w = u / np.exp(log_ratio)
    return w


def descend_rays_bulk(sys: GreenSystem, thetas: Sequence[float] | np.ndarray,
                      g_target: float) -> np.ndarray:
    """Vectorized ray descent: points at one common potential on many rays.

    The rays must avoid critical access angles (no crash detection here);
    intended for dense boundary sampling and residual grids.
    """
    if not g_target > 0.0:
        raise ValueError("potential must be positive")
    c = sys.c
    th = np.mod(np.asarray(thetas, dtype=float), 1.0)
    ratio = 2.0 ** (1.0 / _SUBSTEPS)
    rungs = []
    tau = max(g_target, G_FAR)
    while tau > g_target:
        rungs.append(tau)
        tau /= ratio
    rungs.append(g_target)

    prev: dict[int, np.ndarray] = {}
    for tau in rungs:
        ell = 0
        while math.ldexp(tau, ell) < G_FAR:
            ell += 1
        chain: dict[int, np.ndarray] = {}
        chain[ell] = _far_points_np(c, np.mod(th * math.ldexp(1.0, ell), 1.0),
                                    math.ldexp(tau, ell))
        for j in range(ell - 1, -1, -1):
            r = np.sqrt(chain[j + 1] - c)
            a = prev.get(j)
            if a is None:
                a = _far_points_np(c, np.mod(th * math.ldexp(1.0, j), 1.0),
                                   max(math.ldexp(tau, j), G_FAR))
            chain[j] = np.where(np.abs(r - a) <= np.abs(r + a), r, -r)
        prev = chain
    return prev[0]


# ---------------------------------------------------------------------------
# Julia boundary sampling (inverse iteration)
# ---------------------------------------------------------------------------

def julia_samples(sys: GreenSystem, depth: int = 14) -> np.ndarray:
    """Boundary samples: the full depth-`depth` inverse-orbit tree of beta.

    Deterministic; returns 2^depth complex points within O(contraction^depth)
    of the Julia set.
    """
    c = sys.c
    beta = (1.0 + cmath.sqrt(1.0 - 4.0 * c)) / 2.0
    pts = np.array([beta], dtype=complex)
    for _ in range(depth):
        r = np.sqrt(pts - c)
        pts = np.concatenate([r, -r])
    return pts
