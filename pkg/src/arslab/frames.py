"""Normal-form frames for two-dimensional almost-Riemannian structures.

A structure is described by a global orthonormal frame

    X1 = (1, 0),    X2 = (0, f(x, y)),

where the frame function f depends on the variant:

    "f1"             f = exp(s)         never vanishes (Riemannian)
    "f2"             f = x * exp(s)     vanishes on the line x = 0
    "alpha-grushin"  f = |x|**alpha     vanishes on the line x = 0

with s = s(x, y) a smooth scalar field supplied together with analytic
first and second derivatives.  The plain Grushin plane is "f2" with
s identically zero.  The three-dimensional "martinet" variant is a tag
only; its operations live in a separate module and every two-dimensional
operation here rejects it.

All pointwise quantities (frame vectors, metric, area density, Gaussian
curvature, gradient, divergence, Laplace-Beltrami coefficients) are
evaluated from f and its derivatives, and curve_length integrates the
induced length of sampled paths including the improper case where a path
meets the singular line.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import NotAdmissible, SingularPoint, UnsupportedFrame

__all__ = [
    "ScalarField",
    "scalar_zero",
    "gaussian_bump",
    "polynomial_field",
    "Domain",
    "Point",
    "FrameSpec",
    "MetricData",
    "frame_vectors",
    "metric_at",
    "gradient",
    "divergence",
    "laplace_beltrami_coeffs",
    "curve_length",
    "frame_from_config",
]

VARIANT_F1 = "f1"
VARIANT_F2 = "f2"
VARIANT_ALPHA = "alpha-grushin"
VARIANT_MARTINET = "martinet"

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ScalarField:
    """A smooth scalar field bundled with analytic derivative evaluators.

    All evaluators accept floats or numpy arrays and broadcast.  is_zero
    marks the identically-zero field so callers can take exact shortcuts.
    """

    value: Callable
    dx: Callable
    dy: Callable
    dxx: Callable
    dyy: Callable
    is_zero: bool = False
    label: str = "custom"

    def check_derivatives(self, points, h=1e-5):
        """Max mismatch between analytic derivatives and central differences.

        Returns the worst absolute error over the given (x, y) points; the
        expected magnitude is O(h**2) times the local third derivative.
        """
        worst = 0.0
        for x, y in points:
            fd_x = (self.value(x + h, y) - self.value(x - h, y)) / (2 * h)
            fd_y = (self.value(x, y + h) - self.value(x, y - h)) / (2 * h)
            fd_xx = (
                self.value(x + h, y) - 2 * self.value(x, y) + self.value(x - h, y)
            ) / h**2
            fd_yy = (
                self.value(x, y + h) - 2 * self.value(x, y) + self.value(x, y - h)
            ) / h**2
            worst = max(
                worst,
                abs(fd_x - self.dx(x, y)),
                abs(fd_y - self.dy(x, y)),
                abs(fd_xx - self.dxx(x, y)),
                abs(fd_yy - self.dyy(x, y)),
            )
        return worst


def scalar_zero():
    """The identically-zero scalar field."""
    z = lambda x, y: np.zeros_like(np.asarray(x, dtype=float) + np.asarray(y, dtype=float))
    return ScalarField(value=z, dx=z, dy=z, dxx=z, dyy=z, is_zero=True, label="zero")


def gaussian_bump(amplitude, sigma):
    """A smooth localized bump, periodic in y with period 2*pi.

    s(x, y) = amplitude * exp(-x**2 / (2 sigma**2))
                        * exp((cos(y - pi) - 1) / sigma**2)

    The y factor is a von Mises profile so the same field works on the
    plane and on the cylinder.  The field decays like a Gaussian in x and
    is numerically constant for |x| beyond about 12*sigma.
    """
    if sigma <= 0:
        raise ValueError("gaussian-bump sigma must be positive")
    a = float(amplitude)
    s2 = float(sigma) ** 2

    def _g(x):
        return np.exp(-np.asarray(x, dtype=float) ** 2 / (2 * s2))

    def _p(y):
        return np.exp((np.cos(np.asarray(y, dtype=float) - math.pi) - 1.0) / s2)

    def value(x, y):
        return a * _g(x) * _p(y)

    def dx(x, y):
        x = np.asarray(x, dtype=float)
        return -(x / s2) * value(x, y)

    def dxx(x, y):
        x = np.asarray(x, dtype=float)
        return (x**2 / s2**2 - 1.0 / s2) * value(x, y)

    def dy(x, y):
        y = np.asarray(y, dtype=float)
        return -(np.sin(y - math.pi) / s2) * value(x, y)

    def dyy(x, y):
        y = np.asarray(y, dtype=float)
        fac = np.sin(y - math.pi) ** 2 / s2**2 - np.cos(y - math.pi) / s2
        return fac * value(x, y)

    return ScalarField(
        value=value, dx=dx, dy=dy, dxx=dxx, dyy=dyy, is_zero=(a == 0.0),
        label=f"gaussian-bump({amplitude},{sigma})",
    )


def _polyder2d(c, axis):
    c = np.asarray(c, dtype=float)
    if c.shape[axis] <= 1:
        return np.zeros((1, 1))
    k = np.arange(1, c.shape[axis])
    if axis == 0:
        return c[1:, :] * k[:, None]
    return c[:, 1:] * k[None, :]


def polynomial_field(coeffs):
    """Polynomial scalar field sum_ij c[i][j] x**i y**j."""
    c = np.atleast_2d(np.asarray(coeffs, dtype=float))
    cx = _polyder2d(c, 0)
    cy = _polyder2d(c, 1)
    cxx = _polyder2d(cx, 0)
    cyy = _polyder2d(cy, 1)
    is_zero = not np.any(c)

    def make(cc):
        def ev(x, y):
            return npoly.polyval2d(np.asarray(x, dtype=float), np.asarray(y, dtype=float), cc)
        return ev

    return ScalarField(
        value=make(c), dx=make(cx), dy=make(cy), dxx=make(cxx), dyy=make(cyy),
        is_zero=is_zero, label="polynomial",
    )


@dataclass(frozen=True)
class Domain:
    """Plane or flat cylinder; on the cylinder y lives modulo the period."""

    kind: str = "plane"
    period: float = _TWO_PI

    def __post_init__(self):
        if self.kind not in ("plane", "cylinder"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.period <= 0:
            raise ValueError("domain period must be positive")

    def wrap_y(self, y):
        if self.kind == "cylinder":
            return np.mod(y, self.period)
        return y


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class FrameSpec:
    """Everything needed to evaluate a frame and its derivatives.

    For the polynomial and bump fields the derivative evaluators are
    analytic; flat_beyond records an |x| threshold past which the scale
    field is (numerically) constant, which front construction uses to
    decide if a frame is an exact Grushin plane far from the origin.
    """

    variant: str
    log_scale: Optional[ScalarField] = None
    alpha: Optional[float] = None
    domain: Domain = field(default_factory=Domain)
    flat_beyond: Optional[float] = None

    def __post_init__(self):
        if self.variant not in (VARIANT_F1, VARIANT_F2, VARIANT_ALPHA, VARIANT_MARTINET):
            raise ValueError(f"unknown frame variant {self.variant!r}")
        if self.variant in (VARIANT_F1, VARIANT_F2) and self.log_scale is None:
            raise ValueError(f"variant {self.variant!r} needs a log_scale field")
        if self.variant == VARIANT_ALPHA:
            if self.alpha is None or self.alpha <= 0:
                raise ValueError("alpha-grushin needs alpha > 0")

    # -- constructors ---------------------------------------------------

    @staticmethod
    def grushin(domain=None):
        """The Grushin plane: f = x."""
        return FrameSpec(VARIANT_F2, log_scale=scalar_zero(), domain=domain or Domain())

    @staticmethod
    def f1(log_scale, domain=None, flat_beyond=None):
        return FrameSpec(VARIANT_F1, log_scale=log_scale, domain=domain or Domain(),
                         flat_beyond=flat_beyond)

    @staticmethod
    def f2(log_scale, domain=None, flat_beyond=None):
        return FrameSpec(VARIANT_F2, log_scale=log_scale, domain=domain or Domain(),
                         flat_beyond=flat_beyond)

    @staticmethod
    def alpha_grushin(alpha, domain=None):
        return FrameSpec(VARIANT_ALPHA, alpha=float(alpha), domain=domain or Domain())

    @staticmethod
    def martinet():
        return FrameSpec(VARIANT_MARTINET)

    # -- frame function and derivatives ---------------------------------

    def _reject_martinet(self, op):
        if self.variant == VARIANT_MARTINET:
            raise UnsupportedFrame(f"{op}: martinet frame is not two-dimensional")

    @property
    def is_exact_grushin(self):
        return self.variant == VARIANT_F2 and self.log_scale.is_zero

    @property
    def is_singular_variant(self):
        """True when the frame degenerates on the line x = 0."""
        self._reject_martinet("is_singular_variant")
        return self.variant in (VARIANT_F2, VARIANT_ALPHA)

    def f(self, x, y):
        self._reject_martinet("f")
        x = np.asarray(x, dtype=float)
        if self.variant == VARIANT_F1:
            return np.exp(self.log_scale.value(x, y))
        if self.variant == VARIANT_F2:
            return x * np.exp(self.log_scale.value(x, y))
        return np.abs(x) ** self.alpha

    def f_dx(self, x, y):
        self._reject_martinet("f_dx")
        x = np.asarray(x, dtype=float)
        if self.variant == VARIANT_F1:
            return self.log_scale.dx(x, y) * np.exp(self.log_scale.value(x, y))
        if self.variant == VARIANT_F2:
            return (1.0 + x * self.log_scale.dx(x, y)) * np.exp(self.log_scale.value(x, y))
        a = self.alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            out = a * np.sign(x) * np.abs(x) ** (a - 1.0)
        return out

    def f_dy(self, x, y):
        self._reject_martinet("f_dy")
        x = np.asarray(x, dtype=float)
        if self.variant == VARIANT_ALPHA:
            return np.zeros_like(x)
        return self.f(x, y) * self.log_scale.dy(x, y)

    def f_dxx(self, x, y):
        self._reject_martinet("f_dxx")
        x = np.asarray(x, dtype=float)
        if self.variant == VARIANT_F1:
            s = self.log_scale
            return (s.dxx(x, y) + s.dx(x, y) ** 2) * np.exp(s.value(x, y))
        if self.variant == VARIANT_F2:
            s = self.log_scale
            sx = s.dx(x, y)
            return (2.0 * sx + x * s.dxx(x, y) + x * sx**2) * np.exp(s.value(x, y))
        a = self.alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            out = a * (a - 1.0) * np.abs(x) ** (a - 2.0)
        return out

    def f_squared(self, x, y):
        self._reject_martinet("f_squared")
        x = np.asarray(x, dtype=float)
        if self.variant == VARIANT_ALPHA:
            return np.abs(x) ** (2.0 * self.alpha)
        return self.f(x, y) ** 2

    def f_times_fx(self, x, y):
        """f * df/dx, which stays finite down to x = 0 for alpha >= 1/2."""
        self._reject_martinet("f_times_fx")
        x = np.asarray(x, dtype=float)
        if self.variant == VARIANT_ALPHA:
            a = self.alpha
            with np.errstate(divide="ignore", invalid="ignore"):
                out = a * np.sign(x) * np.abs(x) ** (2.0 * a - 1.0)
            return np.where(x == 0.0, 0.0 if 2.0 * a - 1.0 >= 0 else np.inf, out)
        return self.f(x, y) * self.f_dx(x, y)

    def f_times_fy(self, x, y):
        self._reject_martinet("f_times_fy")
        x = np.asarray(x, dtype=float)
        if self.variant == VARIANT_ALPHA:
            return np.zeros_like(x)
        return self.f_squared(x, y) * self.log_scale.dy(x, y)

    def is_singular(self, p):
        self._reject_martinet("is_singular")
        if self.variant == VARIANT_F1:
            return False
        return p[0] == 0.0

    def normalize(self, p):
        return Point(p[0], float(self.domain.wrap_y(p[1])))


@dataclass(frozen=True)
class MetricData:
    """Metric and curvature data at one non-singular point."""

    g11: float
    g22: float
    area_density: float
    curvature: float
    f: float
    f_dx: float


def frame_vectors(frame, p):
    """The orthonormal frame at p; defined everywhere, including x = 0."""
    frame._reject_martinet("frame_vectors")
    fv = float(frame.f(p[0], p[1]))
    return ((1.0, 0.0), (0.0, fv))


def metric_at(frame, p):
    """Metric, area density and Gaussian curvature at a non-singular point.

    g = diag(1, 1/f**2), area density 1/|f|, and the curvature follows
    from the frame function alone:

        K = (f * f_xx - 2 * f_x**2) / f**2.
    """
    frame._reject_martinet("metric_at")
    x, y = p[0], p[1]
    fv = float(frame.f(x, y))
    if fv == 0.0:
        raise SingularPoint(f"metric_at: frame degenerates at {tuple(p)}")
    fx = float(frame.f_dx(x, y))
    fxx = float(frame.f_dxx(x, y))
    curv = (fv * fxx - 2.0 * fx * fx) / fv**2
    return MetricData(
        g11=1.0,
        g22=1.0 / fv**2,
        area_density=1.0 / abs(fv),
        curvature=curv,
        f=fv,
        f_dx=fx,
    )


def gradient(frame, p, dvalue):
    """Metric gradient of a function with differential dvalue = (d/dx, d/dy).

    Equals (d/dx, f**2 * d/dy); well defined on the singular line, where
    it degenerates to a multiple of (1, 0).
    """
    frame._reject_martinet("gradient")
    fsq = float(frame.f_squared(p[0], p[1]))
    return (float(dvalue[0]), fsq * float(dvalue[1]))


def divergence(frame, p, vec, dvec):
    """Divergence of a vector field w.r.t. the intrinsic area measure.

    vec = (Y1, Y2) at p, dvec = (dY1/dx, dY2/dy).  The weight 1/|f|
    contributes -(f_x/f) Y1 - (f_y/f) Y2; blows up on the singular line.
    """
    frame._reject_martinet("divergence")
    x, y = p[0], p[1]
    fv = float(frame.f(x, y))
    if fv == 0.0:
        raise SingularPoint(f"divergence: frame degenerates at {tuple(p)}")
    fx = float(frame.f_dx(x, y))
    fy = float(frame.f_dy(x, y))
    return float(dvec[0]) + float(dvec[1]) - (fx / fv) * float(vec[0]) - (fy / fv) * float(vec[1])


def laplace_beltrami_coeffs(frame, p):
    """Coefficients (a_xx, a_yy, b_x, b_y) of the Laplace-Beltrami operator.

    The operator acts as a_xx d2/dx2 + a_yy d2/dy2 + b_x d/dx + b_y d/dy
    with a_xx = 1, a_yy = f**2, b_x = -f_x/f, b_y = f*f_y.  The first
    order x coefficient blows up on the singular line.
    """
    frame._reject_martinet("laplace_beltrami_coeffs")
    x, y = p[0], p[1]
    fv = float(frame.f(x, y))
    if fv == 0.0:
        raise SingularPoint(f"laplace_beltrami_coeffs: frame degenerates at {tuple(p)}")
    fx = float(frame.f_dx(x, y))
    return (1.0, fv * fv, -fx / fv, float(frame.f_times_fy(x, y)))


# -- curve length -------------------------------------------------------


def _adaptive_simpson(g, a, b, tol, depth=28):
    fa, fm, fb = g(a), g(0.5 * (a + b)), g(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    return _simpson_rec(g, a, b, fa, fm, fb, whole, tol, depth)


def _simpson_rec(g, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = g(lm), g(rm)
    left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
    right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
    err = left + right - whole
    # non-finite samples cannot refine away; stop rather than recurse
    if depth <= 0 or abs(err) <= 15.0 * tol or not math.isfinite(err):
        return left + right + err / 15.0
    half = 0.5 * tol
    return (
        _simpson_rec(g, a, m, fa, flm, fm, left, half, depth - 1)
        + _simpson_rec(g, m, b, fm, frm, fb, right, half, depth - 1)
    )


def curve_length(frame, t, x, y, *, tol=1e-10, divergence_increment=1.0,
                 divergence_window=10, max_levels=60, strict=False):
    """Length of a sampled path under the almost-Riemannian metric.

    The path is the piecewise-linear interpolant of the samples
    (t[i], x[i], y[i]); between samples the velocity is the finite
    difference of consecutive samples.  Segments crossing or touching
    the singular line are integrated as improper integrals by dyadic
    refinement toward the singular time.  If the partial sums still grow
    by more than divergence_increment over divergence_window consecutive
    refinement levels, the length is declared infinite: math.inf is
    returned, or NotAdmissible is raised when strict=True.

    The dyadic window rule separates the logarithmic blow-up of
    non-admissible crossings from convergent improper integrals; for
    exponents very close to the borderline it deliberately errs on the
    infinite side.
    """
    frame._reject_martinet("curve_length")
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (t.ndim == 1 and t.shape == x.shape == y.shape and t.size >= 2):
        raise ValueError("curve_length: need 1-d samples t, x, y of equal length >= 2")
    if np.any(np.diff(t) < 0):
        raise ValueError("curve_length: t must be non-decreasing")

    def declare_infinite():
        if strict:
            raise NotAdmissible("curve_length: path crosses the singular line non-tangentially")
        return math.inf

    singular = frame.is_singular_variant
    total = 0.0
    for i in range(t.size - 1):
        dt = t[i + 1] - t[i]
        if dt == 0.0:
            continue
        x0, y0 = x[i], y[i]
        vx = (x[i + 1] - x[i]) / dt
        vy = (y[i + 1] - y[i]) / dt

        def speed(tau):
            # tau measured from t[i]
            fv = frame.f(x0 + vx * tau, y0 + vy * tau)
            return math.sqrt(vx * vx + (vy / fv) ** 2)

        if vy == 0.0:
            total += abs(vx) * dt
            continue
        if not singular:
            total += _adaptive_simpson(speed, 0.0, dt, tol * max(1.0, dt))
            continue

        # Singular variants: f vanishes exactly where x(tau) = 0.
        if x0 == 0.0 and vx == 0.0:
            return declare_infinite()  # runs along the singular line with vy != 0
        if vx != 0.0:
            tau_zero = -x0 / vx
        else:
            tau_zero = math.nan
        if not (0.0 <= tau_zero <= dt) or math.isnan(tau_zero):
            total += _adaptive_simpson(speed, 0.0, dt, tol * max(1.0, dt))
            continue

        # Improper segment: integrate each side by dyadic refinement
        # toward tau_zero.
        for lo, hi in ((0.0, tau_zero), (tau_zero, dt)):
            span = hi - lo
            if span == 0.0:
                continue
            toward_lo = lo == tau_zero  # singularity at the lo end
            side_sum = 0.0
            window = []
            contrib_prev = None
            ratio = None
            contrib = 0.0
            for lev in range(1, max_levels + 1):
                outer = span * 2.0 ** (1 - lev)
                inner = span * 2.0 ** (-lev)
                if toward_lo:
                    a, b = lo + inner, lo + outer
                    if a <= lo or not a < b:  # shell below float resolution
                        break
                else:
                    a, b = hi - outer, hi - inner
                    if b >= hi or not a < b:
                        break
                contrib = _adaptive_simpson(speed, a, b, tol * max(1.0, span))
                side_sum += contrib
                window.append(contrib)
                if len(window) > divergence_window:
                    window.pop(0)
                # log-divergence signature: the window still carries more
                # than the increment AND per-level contributions have
                # stopped decaying (convergent improper integrals decay
                # geometrically, so deep windows always drain)
                if (len(window) == divergence_window
                        and sum(window) > divergence_increment
                        and window[-1] > 0.5 * window[0]):
                    return declare_infinite()
                if contrib_prev is not None and contrib_prev > 0.0:
                    ratio = contrib / contrib_prev
                contrib_prev = contrib
                if contrib < 1e-13 * (1.0 + total + side_sum):
                    break
            # Geometric tail estimate for convergent improper integrals.
            if ratio is not None and 0.0 < ratio < 0.97:
                side_sum += contrib * ratio / (1.0 - ratio)
            total += side_sum
    return total


# -- configuration ------------------------------------------------------

_BUMP_RE = re.compile(r"^gaussian-bump\(\s*([^,()\s]+)\s*,\s*([^,()\s]+)\s*\)$")


def _scale_from_config(spec):
    if spec is None or spec == "zero" or spec == {"preset": "zero"}:
        return scalar_zero()
    if isinstance(spec, str):
        m = _BUMP_RE.match(spec)
        if m:
            return gaussian_bump(float(m.group(1)), float(m.group(2)))
        raise ValueError(f"unknown log_scale preset {spec!r}")
    if isinstance(spec, list):
        return polynomial_field(spec)
    if isinstance(spec, dict):
        known = {"preset", "amplitude", "sigma", "coeffs"}
        extra = set(spec) - known
        if extra:
            raise ValueError(f"unknown log_scale keys {sorted(extra)}")
        preset = spec.get("preset")
        if preset == "zero":
            return scalar_zero()
        if preset == "gaussian-bump":
            return gaussian_bump(float(spec["amplitude"]), float(spec["sigma"]))
        if preset == "polynomial":
            return polynomial_field(spec["coeffs"])
        raise ValueError(f"unknown log_scale preset {preset!r}")
    raise ValueError(f"cannot parse log_scale from {spec!r}")


def _domain_from_config(spec):
    if spec is None:
        return Domain()
    if isinstance(spec, str):
        return Domain(kind=spec)
    if isinstance(spec, dict):
        extra = set(spec) - {"kind", "period"}
        if extra:
            raise ValueError(f"unknown domain keys {sorted(extra)}")
        return Domain(kind=spec.get("kind", "plane"),
                      period=float(spec.get("period", _TWO_PI)))
    raise ValueError(f"cannot parse domain from {spec!r}")


def frame_from_config(cfg):
    """Build a FrameSpec from a plain dict (e.g. parsed JSON).

    Keys: variant (required; "grushin" is shorthand for f2 with zero
    scale), alpha, log_scale, domain, flat_beyond.  Unknown keys are
    rejected.
    """
    if not isinstance(cfg, dict):
        raise ValueError("frame config must be a dict")
    extra = set(cfg) - {"variant", "alpha", "log_scale", "domain", "flat_beyond"}
    if extra:
        raise ValueError(f"unknown frame config keys {sorted(extra)}")
    variant = cfg.get("variant", "grushin")
    domain = _domain_from_config(cfg.get("domain"))
    flat = cfg.get("flat_beyond")
    flat = None if flat is None else float(flat)
    if variant == "grushin":
        if "alpha" in cfg or "log_scale" in cfg:
            raise ValueError("variant 'grushin' takes no alpha or log_scale")
        return FrameSpec.grushin(domain=domain)
    if variant == VARIANT_ALPHA:
        if "alpha" not in cfg:
            raise ValueError("alpha-grushin needs key 'alpha'")
        return FrameSpec.alpha_grushin(float(cfg["alpha"]), domain=domain)
    if variant in (VARIANT_F1, VARIANT_F2):
        scale = _scale_from_config(cfg.get("log_scale"))
        return FrameSpec(variant, log_scale=scale, domain=domain, flat_beyond=flat)
    if variant == VARIANT_MARTINET:
        return FrameSpec.martinet()
    raise ValueError(f"unknown frame variant {variant!r}")
