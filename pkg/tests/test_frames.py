import math

import numpy as np
import pytest

from arslab import (
    Domain,
    FrameSpec,
    NotAdmissible,
    Point,
    SingularPoint,
    UnsupportedFrame,
    curve_length,
    divergence,
    frame_from_config,
    frame_vectors,
    gaussian_bump,
    gradient,
    laplace_beltrami_coeffs,
    metric_at,
    polynomial_field,
    scalar_zero,
)

GRUSHIN = FrameSpec.grushin()

# closed form of the integral of sqrt(1 + 1/|t|) over [-1, 1]
DIAGONAL_LENGTH = 2.0 * (math.sqrt(2.0) + math.asinh(1.0))


def _bump_frame(variant="f2"):
    scale = gaussian_bump(0.3, 0.9)
    if variant == "f1":
        return FrameSpec.f1(scale)
    return FrameSpec.f2(scale)


# -- metric, curvature, frame vectors ------------------------------------


def test_grushin_metric_values():
    md = metric_at(GRUSHIN, Point(2.0, 0.3))
    assert md.g11 == 1.0
    assert md.g22 == pytest.approx(0.25, rel=1e-15)
    assert md.area_density == pytest.approx(0.5, rel=1e-15)
    assert md.curvature == pytest.approx(-0.5, rel=1e-15)

    md = metric_at(GRUSHIN, Point(-0.5, 7.0))
    assert md.g22 == pytest.approx(4.0, rel=1e-15)
    assert md.area_density == pytest.approx(2.0, rel=1e-15)
    assert md.curvature == pytest.approx(-8.0, rel=1e-15)


def test_grushin_curvature_scaling():
    # K * x**2 must be the constant -2 at every non-singular point
    for x in (0.1, -0.1, 1.0, -1.0, 10.0, -10.0):
        md = metric_at(GRUSHIN, Point(x, 1.3))
        assert abs(md.curvature * x * x + 2.0) <= 1e-13


def test_alpha_curvature_formula():
    for alpha in (0.25, 0.5, 1.0, 1.5, 2.0):
        fr = FrameSpec.alpha_grushin(alpha)
        for x in (0.3, 1.7, -2.2):
            md = metric_at(fr, Point(x, 0.0))
            expected = -alpha * (1.0 + alpha) / x**2
            assert md.curvature == pytest.approx(expected, rel=1e-12)


def test_metric_identities_random():
    """g22 * f**2 == 1 and (area density * f)**2 == 1 off the singular set."""
    rng = np.random.default_rng(7)
    frames = [GRUSHIN, _bump_frame("f1"), _bump_frame("f2"),
              FrameSpec.alpha_grushin(1.5)]
    for _ in range(200):
        fr = frames[rng.integers(len(frames))]
        x = float(rng.uniform(0.05, 3.0) * rng.choice([-1.0, 1.0]))
        y = float(rng.uniform(-4.0, 4.0))
        fv = float(fr.f(x, y))
        md = metric_at(fr, Point(x, y))
        assert md.g11 == 1.0
        assert md.g22 * fv * fv == pytest.approx(1.0, rel=1e-12)
        assert (md.area_density * abs(fv)) == pytest.approx(1.0, rel=1e-12)
        v1, v2 = frame_vectors(fr, Point(x, y))
        assert v1 == (1.0, 0.0)
        assert v2 == (0.0, fv)


def test_singular_point_rejected():
    p = Point(0.0, 1.0)
    with pytest.raises(SingularPoint):
        metric_at(GRUSHIN, p)
    with pytest.raises(SingularPoint):
        divergence(GRUSHIN, p, (1.0, 0.0), (0.0, 0.0))
    with pytest.raises(SingularPoint):
        laplace_beltrami_coeffs(GRUSHIN, p)
    # the frame itself stays defined there
    v1, v2 = frame_vectors(GRUSHIN, p)
    assert v2 == (0.0, 0.0)


def test_martinet_rejected_by_planar_operations():
    fr = FrameSpec.martinet()
    p = Point(1.0, 1.0)
    for call in (
        lambda: metric_at(fr, p),
        lambda: frame_vectors(fr, p),
        lambda: gradient(fr, p, (1.0, 0.0)),
        lambda: divergence(fr, p, (1.0, 0.0), (0.0, 0.0)),
        lambda: laplace_beltrami_coeffs(fr, p),
        lambda: curve_length(fr, [0.0, 1.0], [1.0, 2.0], [0.0, 0.0]),
    ):
        with pytest.raises(UnsupportedFrame):
            call()


def test_gradient_degenerates_along_x():
    g = gradient(GRUSHIN, Point(2.0, 1.0), (3.0, 5.0))
    assert g == (3.0, 20.0)
    # on the singular line only the transversal component survives
    g = gradient(GRUSHIN, Point(0.0, 1.0), (3.0, 5.0))
    assert g == (3.0, 0.0)


# -- divergence and Laplace-Beltrami against the weighted-measure form ---


def _fd_divergence(frame, p, vec_fn, h=1e-5):
    # (1/w) [d/dx (w Y1) + d/dy (w Y2)] with w = 1/|f|
    def wy(comp, x, y):
        return vec_fn(x, y)[comp] / abs(float(frame.f(x, y)))

    ddx = (wy(0, p.x + h, p.y) - wy(0, p.x - h, p.y)) / (2.0 * h)
    ddy = (wy(1, p.x, p.y + h) - wy(1, p.x, p.y - h)) / (2.0 * h)
    return abs(float(frame.f(p.x, p.y))) * (ddx + ddy)


def test_divergence_matches_weighted_measure_form():
    def vec(x, y):
        return (x * x + y, x * y)

    def dvec(x, y):
        return (2.0 * x, x)

    points = [Point(0.7, 0.2), Point(-1.3, 1.1), Point(2.0, -0.4)]
    for fr in (GRUSHIN, _bump_frame("f1"), _bump_frame("f2"),
               FrameSpec.alpha_grushin(1.5)):
        for p in points:
            got = divergence(fr, p, vec(p.x, p.y), dvec(p.x, p.y))
            want = _fd_divergence(fr, p, vec)
            assert got == pytest.approx(want, rel=1e-6, abs=1e-6)


def _fd_laplacian(frame, field, p, h=1e-5):
    # divergence form (1/w) [d/dx (w u_x) + d/dy (w f**2 u_y)], w = 1/|f|
    def g1(x, y):
        return float(field.dx(x, y)) / abs(float(frame.f(x, y)))

    def g2(x, y):
        return float(frame.f_squared(x, y)) * float(field.dy(x, y)) / abs(float(frame.f(x, y)))

    ddx = (g1(p.x + h, p.y) - g1(p.x - h, p.y)) / (2.0 * h)
    ddy = (g2(p.x, p.y + h) - g2(p.x, p.y - h)) / (2.0 * h)
    return abs(float(frame.f(p.x, p.y))) * (ddx + ddy)


def test_laplace_beltrami_matches_divergence_form():
    u = gaussian_bump(1.0, 1.2)
    points = [Point(0.6, 0.5), Point(-1.1, 2.0), Point(1.8, -0.7)]
    for fr in (GRUSHIN, _bump_frame("f1"), _bump_frame("f2"),
               FrameSpec.alpha_grushin(0.75)):
        for p in points:
            a_xx, a_yy, b_x, b_y = laplace_beltrami_coeffs(fr, p)
            got = (a_xx * float(u.dxx(p.x, p.y)) + a_yy * float(u.dyy(p.x, p.y))
                   + b_x * float(u.dx(p.x, p.y)) + b_y * float(u.dy(p.x, p.y)))
            want = _fd_laplacian(fr, u, p)
            assert got == pytest.approx(want, rel=1e-5, abs=1e-5)


def test_laplace_beltrami_grushin_coeffs():
    a_xx, a_yy, b_x, b_y = laplace_beltrami_coeffs(GRUSHIN, Point(2.0, 0.0))
    assert (a_xx, a_yy) == (1.0, 4.0)
    assert b_x == pytest.approx(-0.5, rel=1e-15)
    assert b_y == 0.0


# -- scalar fields --------------------------------------------------------


def test_scalar_field_derivative_checks():
    pts = [(x, y) for x in (-1.5, -0.2, 0.4, 2.0) for y in (0.0, 1.0, 3.0)]
    # second differences at h = 1e-5 carry ~1e-6 roundoff, so gate at 1e-5
    assert gaussian_bump(0.7, 0.9).check_derivatives(pts) < 1e-5
    assert polynomial_field([[0.3, -0.2], [0.1, 0.05]]).check_derivatives(pts) < 1e-5
    assert scalar_zero().check_derivatives(pts) == 0.0


def test_polynomial_field_exact():
    # 1 + 3y + 2x + xy, so dxx = dyy = 0 identically
    f = polynomial_field([[1.0, 3.0], [2.0, 1.0]])
    rng = np.random.default_rng(11)
    for _ in range(20):
        x, y = rng.uniform(-2.0, 2.0, size=2)
        assert f.value(x, y) == pytest.approx(1 + 3 * y + 2 * x + x * y, rel=1e-14)
        assert f.dx(x, y) == pytest.approx(2 + y, rel=1e-14)
        assert f.dy(x, y) == pytest.approx(3 + x, rel=1e-14)
        assert f.dxx(x, y) == 0.0
        assert f.dyy(x, y) == 0.0


# -- curve length ----------------------------------------------------------


def test_length_horizontal_segment_is_euclidean():
    t = np.linspace(0.0, 1.0, 33)
    out = curve_length(GRUSHIN, t, t, np.zeros_like(t))
    assert out == pytest.approx(1.0, abs=1e-12)
    # crossing the singular line horizontally is still fine
    t = np.linspace(-1.0, 1.0, 65)
    out = curve_length(GRUSHIN, t, t, np.full_like(t, 2.0))
    assert out == pytest.approx(2.0, abs=1e-12)


def test_length_riemannian_circle():
    # unit circle around (3, 0) in an f = 1 frame is Euclidean
    fr = FrameSpec.f1(scalar_zero())
    th = np.linspace(0.0, 2.0 * math.pi, 4001)
    out = curve_length(fr, th, 3.0 + np.cos(th), np.sin(th))
    assert out == pytest.approx(2.0 * math.pi, rel=1e-6)


def test_length_diagonal_alpha_half():
    """The diagonal through the singular line has a finite closed-form length."""
    fr = FrameSpec.alpha_grushin(0.5)
    t = np.array([-1.0, 0.0, 1.0])
    out = curve_length(fr, t, t, t)
    assert out == pytest.approx(DIAGONAL_LENGTH, rel=1e-6)
    # sampling more nodes on the same line must not change the answer
    t = np.linspace(-1.0, 1.0, 101)
    out = curve_length(fr, t, t, t)
    assert out == pytest.approx(DIAGONAL_LENGTH, rel=1e-6)


def test_length_diagonal_grushin_is_infinite():
    t = np.array([-1.0, 1.0])
    out = curve_length(GRUSHIN, t, t, t)
    assert math.isinf(out)
    with pytest.raises(NotAdmissible):
        curve_length(GRUSHIN, t, t, t, strict=True)


def test_length_along_singular_line_is_infinite():
    out = curve_length(GRUSHIN, [0.0, 1.0], [0.0, 0.0], [0.0, 1.0])
    assert math.isinf(out)


def test_length_is_parametrization_invariant():
    # identical polyline nodes, two different monotone time parametrizations
    fr = _bump_frame("f2")
    th = np.linspace(0.0, math.pi, 257)
    x = 2.0 + np.cos(th)
    y = np.sin(th)
    t_lin = np.linspace(0.0, 1.0, th.size)
    t_cub = t_lin**3
    a = curve_length(fr, t_lin, x, y)
    b = curve_length(fr, t_cub, x, y)
    assert a == pytest.approx(b, rel=1e-9)


def test_length_input_validation():
    with pytest.raises(ValueError):
        curve_length(GRUSHIN, [0.0, 1.0], [0.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        curve_length(GRUSHIN, [1.0, 0.0], [0.0, 1.0], [0.0, 0.0])


# -- configuration ---------------------------------------------------------


def test_frame_from_config_variants():
    fr = frame_from_config({"variant": "grushin"})
    assert fr.is_exact_grushin

    fr = frame_from_config({"variant": "alpha-grushin", "alpha": 1.5})
    assert fr.alpha == 1.5

    fr = frame_from_config({"variant": "f2", "log_scale": "gaussian-bump(0.3,0.7)"})
    assert not fr.is_exact_grushin
    assert fr.log_scale.label == "gaussian-bump(0.3,0.7)"

    fr = frame_from_config({"variant": "f1", "log_scale": [[0.1], [0.2]]})
    assert fr.log_scale.label == "polynomial"

    fr = frame_from_config({"variant": "f2", "log_scale": {"preset": "zero"}})
    assert fr.is_exact_grushin


def test_frame_from_config_rejects_bad_input():
    with pytest.raises(ValueError):
        frame_from_config({"variant": "grushin", "bogus": 1})
    with pytest.raises(ValueError):
        frame_from_config({"variant": "grushin", "alpha": 2.0})
    with pytest.raises(ValueError):
        frame_from_config({"variant": "alpha-grushin"})
    with pytest.raises(ValueError):
        frame_from_config({"variant": "f2", "log_scale": "mystery"})
    with pytest.raises(ValueError):
        frame_from_config({"variant": "no-such-frame"})


def test_domain_wrap():
    dom = Domain(kind="cylinder", period=2.0 * math.pi)
    assert dom.wrap_y(7.0) == pytest.approx(7.0 - 2.0 * math.pi, rel=1e-15)
    assert Domain().wrap_y(7.0) == 7.0
    with pytest.raises(ValueError):
        Domain(kind="torus")
    with pytest.raises(ValueError):
        Domain(kind="cylinder", period=0.0)

    fr = frame_from_config({"variant": "grushin",
                            "domain": {"kind": "cylinder", "period": 4.0}})
    assert fr.normalize(Point(1.0, 5.0)).y == pytest.approx(1.0)
