"""Static eigenmodes of the double cavity: ideal wall, delta mirror, ideal wall.

The axial problem on ``[a0, c]`` is ``-f'' + 2 gamma delta(x - b) f = Omega^2 f``
with Dirichlet walls.  Between the cotangent poles the characteristic
function is strictly decreasing, so every inter-pole interval holds exactly
one eigenfrequency; the solver exploits that instead of scanning.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateGeometryError, GeometryError, SpectralError

#: relative separation below which two cotangent poles count as coincident
POLE_MERGE_RTOL = 1e-9
#: normalized residual accepted by :func:`build_mode`
ROOT_RESIDUAL_TOL = 1e-8
#: relative root tolerance; downstream derivative identities need near machine precision
ROOT_RTOL = 1e-16


@dataclass(frozen=True)
class CavityGeometry:
    """Wall positions and mirror strength.

    ``gamma = math.inf`` is the ideal (perfectly reflecting) mirror; use
    :meth:`ideal` to build it.  That case never evaluates a cotangent.
    """

    a0: float
    b: float
    c: float
    gamma: float
    k_perp: float = 0.0

    def __post_init__(self):
        if not (self.a0 < self.b < self.c):
            raise GeometryError(f"need a0 < b < c, got {self.a0}, {self.b}, {self.c}")
        if not (self.gamma > 0):
            raise GeometryError(f"mirror strength must be positive, got {self.gamma}")
        if not (self.k_perp >= 0) or math.isinf(self.k_perp):
            raise GeometryError(f"k_perp must be finite and >= 0, got {self.k_perp}")

    @classmethod
    def ideal(cls, a0: float, b: float, c: float, k_perp: float = 0.0) -> "CavityGeometry":
        return cls(a0, b, c, math.inf, k_perp)

    @property
    def is_ideal(self) -> bool:
        return math.isinf(self.gamma)

    @property
    def left_length(self) -> float:
        return self.b - self.a0

    @property
    def right_length(self) -> float:
        return self.c - self.b

    def replace(self, **changes) -> "CavityGeometry":
        return dataclasses.replace(self, **changes)


class Dominance(enum.Enum):
    LEFT = "LeftDominated"
    RIGHT = "RightDominated"


@dataclass(frozen=True)
class Mode:
    """One normalized eigenmode.

    ``f(x) = amp_left sin(omega_x (x - a0))`` in the cavity and
    ``amp_right sin(omega_x (c - x))`` in the reservoir.
    """

    omega_x: float
    omega0: float
    amp_left: float
    amp_right: float
    dominance: Dominance
    eta_mu: float
    index: int
    geometry: CavityGeometry

    def __call__(self, x):
        g = self.geometry
        x = np.asarray(x, dtype=float)
        left = self.amp_left * np.sin(self.omega_x * (x - g.a0))
        right = self.amp_right * np.sin(self.omega_x * (g.c - x))
        out = np.where(x <= g.b, left, right)
        return np.where((x < g.a0) | (x > g.c), 0.0, out)

    def slope_at_wall(self) -> float:
        """f'(a0), the quantity that sets the moving-wall couplings."""
        return self.amp_left * self.omega_x

    def weights(self) -> tuple[float, float]:
        """Integrals of f^2 over the cavity and over the reservoir."""
        g = self.geometry
        return (self.amp_left ** 2 * _sin2_integral(self.omega_x, g.left_length),
                self.amp_right ** 2 * _sin2_integral(self.omega_x, g.right_length))


@dataclass(frozen=True)
class MirrorProperties:
    transmission: complex
    reflection: complex
    quality: float


def _sin2_integral(omega: float, length: float) -> float:
    # int_0^length sin^2(omega y) dy
    return 0.5 * length - math.sin(2.0 * omega * length) / (4.0 * omega)


def transcendental(geom: CavityGeometry, omega):
    """Characteristic function ``cot(W d1) + cot(W d2) + 2 gamma / W``.

    Its zeros are the axial eigenfrequencies.  Vectorized over ``omega``.
    """
    w = np.asarray(omega, dtype=float)
    d1, d2 = geom.left_length, geom.right_length
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1.0 / np.tan(w * d1) + 1.0 / np.tan(w * d2) + 2.0 * geom.gamma / w


def _smooth_characteristic(geom: CavityGeometry, omega: float) -> float:
    # transcendental() times sin(W d1) sin(W d2): pole free
    d1, d2 = geom.left_length, geom.right_length
    s1, s2 = math.sin(omega * d1), math.sin(omega * d2)
    return math.sin(omega * (d1 + d2)) + 2.0 * geom.gamma / omega * s1 * s2


def cotangent_poles(geom: CavityGeometry, omega_max: float,
                    allow_degenerate: bool = False) -> list[float]:
    """Sorted poles in ``(0, omega_max]`` plus the first pole beyond it."""
    d1, d2 = geom.left_length, geom.right_length
    tagged = []
    for length, tag in ((d1, 0), (d2, 1)):
        n_top = int(math.floor(omega_max * length / math.pi)) + 1
        tagged.extend((n * math.pi / length, tag) for n in range(1, n_top + 1))
    tagged.sort()
    poles: list[float] = []
    last_tag = None
    for p, tag in tagged:
        if poles and poles[-1] > omega_max:
            break  # the closing pole is found; coincidences beyond it are irrelevant
        if poles and p - poles[-1] <= POLE_MERGE_RTOL * p:
            if tag == last_tag:
                raise SpectralError("pole list corrupted")  # cannot happen for one family
            if not allow_degenerate:
                raise DegenerateGeometryError(
                    f"cotangent poles coincide near Omega={p:.12g}: cavity lengths "
                    f"{d1:.12g} and {d2:.12g} are commensurate there, the spectrum is "
                    "not well separated")
            continue
        poles.append(p)
        last_tag = tag
    # keep up to the first pole strictly above omega_max
    for i, p in enumerate(poles):
        if p > omega_max:
            return poles[: i + 1]
    return poles


def _solve_bracket(func, a, b, fa, fb, rtol, maxiter=200):
    """Illinois-safeguarded secant on a sign-changing bracket (fa > 0 > fb)."""
    side = 0
    x_prev = math.nan
    for _ in range(maxiter):
        x = (a * fb - b * fa) / (fb - fa)
        if not (a < x < b):
            x = 0.5 * (a + b)
        fx = func(x)
        if fx == 0.0 or (b - a) <= rtol * abs(x) or abs(x - x_prev) <= 0.25 * rtol * abs(x):
            return x
        x_prev = x
        if fx > 0.0:
            a, fa = x, fx
            if side == 1:
                fb *= 0.5
            side = 1
        else:
            b, fb = x, fx
            if side == -1:
                fa *= 0.5
            side = -1
    raise SpectralError(f"root refinement did not converge in ({a!r}, {b!r})")


def _bisect_sign(geom, a, b, rtol, maxiter=400):
    # pure bisection on the sign of the raw characteristic (merged-pole brackets)
    for _ in range(maxiter):
        x = 0.5 * (a + b)
        if (b - a) <= rtol * x or not (a < x < b):
            return x
        if transcendental(geom, x) > 0:
            a = x
        else:
            b = x
    raise SpectralError("bisection did not converge")


def eigenfrequency_roots(geom: CavityGeometry, omega_max: float, rtol: float = ROOT_RTOL,
                         allow_degenerate: bool = False) -> list[float]:
    """All axial eigenfrequencies in ``(0, omega_max]``, ascending.

    One root is located per interval between consecutive cotangent poles
    (the origin counts as a pole).  With ``allow_degenerate`` coincident
    poles are merged instead of rejected; the result then lists only the
    zeros of :func:`transcendental` and misses modes with a node at ``b``.
    In the ideal limit the roots are the union of both ladders, with
    frequencies shared by the two cavities listed once.
    """
    if not omega_max > 0:
        raise GeometryError("omega_max must be positive")
    if geom.is_ideal:
        n1 = int(math.floor(omega_max * geom.left_length / math.pi * (1 + 1e-15)))
        n2 = int(math.floor(omega_max * geom.right_length / math.pi * (1 + 1e-15)))
        vals = sorted([n * math.pi / geom.left_length for n in range(1, n1 + 1)]
                      + [n * math.pi / geom.right_length for n in range(1, n2 + 1)])
        out: list[float] = []
        for v in vals:
            if not out or v - out[-1] > 1e-12 * v:
                out.append(v)
        return out

    poles = cotangent_poles(geom, omega_max, allow_degenerate=allow_degenerate)
    edges = [0.0] + poles
    roots = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if lo > omega_max:
            break
        width = hi - lo
        if allow_degenerate:
            root = _bisect_sign(geom, lo + 1e-15 * hi, hi * (1 - 1e-16), rtol)
        else:
            mid = 0.5 * (lo + hi)
            sigma = math.copysign(1.0, math.sin(mid * geom.left_length)
                                  * math.sin(mid * geom.right_length))

            def g(w, _s=sigma):
                return _s * _smooth_characteristic(geom, w)

            a = lo if lo > 0 else 1e-8 * width
            fa, fb = g(a), g(hi)
            if not (fa > 0 > fb):
                raise SpectralError(
                    f"no sign change between poles {lo:.15g} and {hi:.15g}")
            root = _solve_bracket(g, a, hi, fa, fb, rtol)
        if root <= omega_max:
            roots.append(root)
    n_poles_below = sum(1 for p in poles if p <= omega_max)
    if not (n_poles_below <= len(roots) <= n_poles_below + 1):
        raise SpectralError(
            f"found {len(roots)} roots for {n_poles_below} poles below {omega_max}")
    return roots


def _amplitudes(geom: CavityGeometry, omega_x: float):
    d1, d2 = geom.left_length, geom.right_length
    s1, s2 = math.sin(omega_x * d1), math.sin(omega_x * d2)
    if abs(s1) < 1e-9 and abs(s2) < 1e-9:
        raise DegenerateGeometryError(
            f"mode at Omega={omega_x:.12g} has a node on the mirror in both cavities")
    i1, i2 = _sin2_integral(omega_x, d1), _sin2_integral(omega_x, d2)
    kappa = 1.0 / math.sqrt(s2 * s2 * i1 + s1 * s1 * i2)
    amp_l, amp_r = kappa * s2, kappa * s1
    # dominant amplitude positive
    if amp_l * amp_l * i1 >= amp_r * amp_r * i2:
        sign = math.copysign(1.0, amp_l)
    else:
        sign = math.copysign(1.0, amp_r)
    return sign * amp_l, sign * amp_r


def residual(geom: CavityGeometry, omega_x: float) -> float:
    """Scale-free residual of the eigenvalue condition at ``omega_x``."""
    d1, d2 = geom.left_length, geom.right_length
    s1, s2 = math.sin(omega_x * d1), math.sin(omega_x * d2)
    big = 2.0 * geom.gamma / omega_x * abs(s1 * s2)
    return abs(_smooth_characteristic(geom, omega_x)) / (1.0 + big)


def build_mode(geom: CavityGeometry, omega_x: float, index: int = 0,
               side: Optional[Dominance] = None) -> Mode:
    """Normalized mode for an eigenfrequency of ``geom``.

    ``side`` only matters in the ideal limit, where a frequency shared by the
    two cavities belongs to two distinct modes (default: the cavity one).
    """
    if not omega_x > 0:
        raise GeometryError("omega_x must be positive")
    omega0 = math.hypot(omega_x, geom.k_perp)
    if geom.is_ideal:
        on_left = abs(omega_x * geom.left_length / math.pi
                      - round(omega_x * geom.left_length / math.pi)) < 1e-9
        on_right = abs(omega_x * geom.right_length / math.pi
                       - round(omega_x * geom.right_length / math.pi)) < 1e-9
        if side is None:
            side = Dominance.LEFT if on_left else Dominance.RIGHT
        if (side is Dominance.LEFT and not on_left) or (side is Dominance.RIGHT and not on_right):
            raise GeometryError(f"{omega_x!r} is not an ideal-cavity frequency on the {side.value} side")
        if side is Dominance.LEFT:
            return Mode(omega_x, omega0, math.sqrt(2.0 / geom.left_length), 0.0,
                        Dominance.LEFT, 0.0, index, geom)
        return Mode(omega_x, omega0, 0.0, math.sqrt(2.0 / geom.right_length),
                    Dominance.RIGHT, 0.0, index, geom)

    res = residual(geom, omega_x)
    if res > ROOT_RESIDUAL_TOL:
        raise GeometryError(f"{omega_x!r} is not an eigenfrequency (residual {res:.3g})")
    amp_l, amp_r = _amplitudes(geom, omega_x)
    w_l = amp_l ** 2 * _sin2_integral(omega_x, geom.left_length)
    w_r = amp_r ** 2 * _sin2_integral(omega_x, geom.right_length)
    dom = Dominance.LEFT if w_l >= w_r else Dominance.RIGHT
    return Mode(omega_x, omega0, amp_l, amp_r, dom, omega_x / geom.gamma, index, geom)


def spectrum(geom: CavityGeometry, omega_max: float) -> list[Mode]:
    """Modes with axial frequency up to ``omega_max``, ordered by frequency."""
    modes = []
    if geom.is_ideal:
        for w in eigenfrequency_roots(geom, omega_max):
            for side in (Dominance.LEFT, Dominance.RIGHT):
                try:
                    modes.append(build_mode(geom, w, len(modes), side))
                except GeometryError:
                    pass
        return modes
    for w in eigenfrequency_roots(geom, omega_max):
        modes.append(build_mode(geom, w, len(modes)))
    return modes


def lowest_mode(modes: list[Mode], dominance: Dominance = Dominance.LEFT) -> Mode:
    for m in modes:
        if m.dominance is dominance:
            return m
    raise SpectralError(f"no {dominance.value} mode in the supplied spectrum")


def frequency_derivative(geom: CavityGeometry, omega_x: float) -> float:
    """d(omega_x)/d(a0) at fixed b, c, gamma, by implicit differentiation."""
    d1, d2 = geom.left_length, geom.right_length
    if geom.is_ideal:
        on_left = abs(omega_x * d1 / math.pi - round(omega_x * d1 / math.pi)) < 1e-9
        return omega_x / d1 if on_left else 0.0
    s1, s2 = math.sin(omega_x * d1), math.sin(omega_x * d2)
    # -G_a / G_W multiplied through by sin^2(W d1)
    return omega_x / (d1 + d2 * (s1 / s2) ** 2 + 2.0 * geom.gamma * s1 * s1 / omega_x ** 2)


def mirror_properties(gamma: float, omega: float) -> MirrorProperties:
    """Transmission, reflection and classical quality factor of the mirror."""
    if not gamma >= 0:
        raise GeometryError("gamma must be >= 0")
    if not omega > 0:
        raise GeometryError("omega must be positive")
    den = complex(omega, gamma)
    t = omega / den
    r = -1j * gamma / den
    return MirrorProperties(t, r, 2.0 * math.pi * (1.0 + (gamma / omega) ** 2))
