"""Degenerate heat and Schrodinger flow across the singular line.

The intrinsic area density |x|**(-alpha) is not locally integrable
across x = 0 for alpha >= 1, so the evolution is built on the
regularized weight

    w_eps(x) = max(|x|, eps)**(-alpha)

and the limit eps -> 0 is probed by re-running the same experiment on a
shrinking sweep.  The spatial operator is a finite-volume graph
Laplacian on a tensor grid (x on a symmetric interval including the
node x = 0, y periodic): cell masses integrate w_eps exactly, x-edge
conductances are exact resistor integrals of 1/w_eps, and y-edge
conductances integrate f**2 w_eps exactly, all with closed-form
antiderivatives.  The generator A = M^{-1} C is symmetric in the mass
inner product, annihilates constants, and is nonpositive.

Time stepping is Crank-Nicolson: conjugate gradients in the mass inner
product for the heat flow, a cached sparse Cayley factorization for the
Schrodinger flow.  transmission_study runs the eps sweep and reports
whether the mass fraction crossing the singular line dies out
(barrier-consistent) or stabilizes (crossing-consistent).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import BadGrid, Inconclusive, SolverDiverged

__all__ = [
    "WeightedGrid",
    "Generator",
    "EvolutionState",
    "TransmissionReport",
    "assemble_generator",
    "gaussian_bump_state",
    "step_heat",
    "step_schrodinger",
    "run_heat",
    "transmission_study",
]

_TWO_PI = 2.0 * math.pi


def _int_weight(t, eps, alpha):
    """integral of max(s, eps)**(-alpha) ds on [0, t], t >= 0."""
    t = np.asarray(t, dtype=float)
    inside = np.minimum(t, eps) * eps ** (-alpha)
    if alpha == 1.0:
        outside = np.log(np.maximum(t, eps) / eps)
    else:
        outside = (np.maximum(t, eps) ** (1.0 - alpha) - eps ** (1.0 - alpha)) / (1.0 - alpha)
    return inside + outside


def _int_inverse_weight(t, eps, alpha):
    """integral of max(s, eps)**(+alpha) ds on [0, t], t >= 0."""
    t = np.asarray(t, dtype=float)
    inside = np.minimum(t, eps) * eps**alpha
    outside = (np.maximum(t, eps) ** (1.0 + alpha) - eps ** (1.0 + alpha)) / (1.0 + alpha)
    return inside + outside


def _int_ycoupling(t, eps, alpha):
    """integral of s**(2 alpha) * max(s, eps)**(-alpha) ds on [0, t], t >= 0."""
    t = np.asarray(t, dtype=float)
    tin = np.minimum(t, eps)
    inside = eps ** (-alpha) * tin ** (2.0 * alpha + 1.0) / (2.0 * alpha + 1.0)
    outside = (np.maximum(t, eps) ** (1.0 + alpha) - eps ** (1.0 + alpha)) / (1.0 + alpha)
    return inside + outside


def _odd(f, x, eps, alpha):
    x = np.asarray(x, dtype=float)
    return np.sign(x) * f(np.abs(x), eps, alpha)


@dataclass
class WeightedGrid:
    """Tensor grid with exactly integrated degenerate weights."""

    alpha: float
    eps: float
    x: np.ndarray        # n_x + 1 nodes, symmetric, includes 0
    h: float
    n_y: int
    h_y: float
    period: float
    mass_x: np.ndarray   # per x-node: cell integral of w_eps
    cond_x: np.ndarray   # per x-edge, per unit y-length
    ycoef_x: np.ndarray  # per x-node: cell integral of f**2 w_eps

    @property
    def n_cells(self):
        return self.x.size * self.n_y

    def masses(self):
        return np.repeat(self.mass_x * self.h_y, self.n_y)

    def x_of_cells(self):
        return np.repeat(self.x, self.n_y)

    def y_of_cells(self):
        return np.tile((np.arange(self.n_y)) * self.h_y, self.x.size)


def _build_grid(alpha, eps, n_x, x_half, n_y, period):
    if n_x < 4 or n_x % 2 != 0:
        raise BadGrid(f"need even n_x >= 4, got {n_x}")
    if n_y < 4:
        raise BadGrid(f"need n_y >= 4, got {n_y}")
    if not (eps > 0 and x_half > eps):
        raise BadGrid(f"need 0 < eps < x_half, got eps={eps}, x_half={x_half}")
    if alpha <= 0:
        raise BadGrid(f"need alpha > 0, got {alpha}")
    if period <= 0:
        raise BadGrid(f"need period > 0, got {period}")
    h = 2.0 * x_half / n_x
    x = np.linspace(-x_half, x_half, n_x + 1)
    x[n_x // 2] = 0.0
    cell_lo = np.maximum(x - 0.5 * h, -x_half)
    cell_hi = np.minimum(x + 0.5 * h, x_half)
    mass_x = _odd(_int_weight, cell_hi, eps, alpha) - _odd(_int_weight, cell_lo, eps, alpha)
    flux = _odd(_int_inverse_weight, x[1:], eps, alpha) - _odd(_int_inverse_weight, x[:-1], eps, alpha)
    cond_x = 1.0 / flux
    ycoef_x = _odd(_int_ycoupling, cell_hi, eps, alpha) - _odd(_int_ycoupling, cell_lo, eps, alpha)
    return WeightedGrid(alpha=float(alpha), eps=float(eps), x=x, h=h, n_y=int(n_y),
                        h_y=period / n_y, period=float(period), mass_x=mass_x,
                        cond_x=cond_x, ycoef_x=ycoef_x)


@dataclass
class Generator:
    """A = M^{-1} C, symmetric in the mass inner product, A 1 = 0."""

    grid: WeightedGrid
    C: sparse.csr_matrix
    m: np.ndarray
    degree: np.ndarray
    _cayley: dict = field(default_factory=dict, repr=False)

    def apply(self, u):
        return self.C.dot(u) / self.m

    def inner(self, u, v):
        return float(np.real(np.dot(self.m * np.conj(u), v)))

    def m_norm(self, u):
        return math.sqrt(float(np.dot(self.m, np.abs(u) ** 2)))

    def total_mass(self, u):
        return complex(np.dot(self.m, u)) if np.iscomplexobj(u) else float(np.dot(self.m, u))


def assemble_generator(alpha, eps, *, n_x=400, x_half=3.0, n_y=64, period=_TWO_PI):
    """Finite-volume generator of the regularized flow on the cylinder."""
    grid = _build_grid(alpha, eps, n_x, x_half, n_y, period)
    nx1 = grid.x.size
    n_y = grid.n_y
    n = nx1 * n_y

    def idx(i, j):
        return i * n_y + j

    rows, cols, vals = [], [], []
    j_all = np.arange(n_y)
    # x edges: conductance per unit y times the cell height
    for i in range(nx1 - 1):
        c = grid.cond_x[i] * grid.h_y
        a = idx(i, j_all)
        b = idx(i + 1, j_all)
        rows.extend([a, b])
        cols.extend([b, a])
        vals.extend([np.full(n_y, c), np.full(n_y, c)])
    # y edges: periodic ring in each x cell
    jp = (j_all + 1) % n_y
    for i in range(nx1):
        c = grid.ycoef_x[i] / grid.h_y
        a = idx(i, j_all)
        b = idx(i, jp)
        rows.extend([a, b])
        cols.extend([b, a])
        vals.extend([np.full(n_y, c), np.full(n_y, c)])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    C = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    degree = np.asarray(C.sum(axis=1)).ravel()
    C = C - sparse.diags(degree)
    m = grid.masses()
    return Generator(grid=grid, C=C.tocsr(), m=m, degree=degree)


@dataclass
class EvolutionState:
    u: np.ndarray
    t: float


def gaussian_bump_state(gen, center, sigma, *, floor=1e-12, strict_left=True):
    """Gaussian bump on the cylinder, truncated below the floor.

    With strict_left the profile is zeroed at all nodes with
    x >= -h, keeping its support strictly left of the singular line.
    """
    grid = gen.grid
    xc, yc = float(center[0]), float(center[1])
    x = grid.x_of_cells()
    y = grid.y_of_cells()
    dy = np.abs(y - yc)
    dy = np.minimum(dy, grid.period - dy)
    u = np.exp(-((x - xc) ** 2 + dy**2) / (2.0 * sigma**2))
    u[u < floor] = 0.0
    if strict_left:
        if xc >= 0:
            raise ValueError("gaussian_bump_state: strict_left needs center x < 0")
        u[x >= -grid.h] = 0.0
    return EvolutionState(u=u, t=0.0)


def step_heat(gen, state, dt, *, tol=1e-10, max_iter=5000):
    """One Crank-Nicolson heat step by CG in the mass inner product.

    Solves (I - dt/2 A) u+ = (I + dt/2 A) u with Jacobi preconditioning;
    the operator is self-adjoint and positive definite in that inner
    product.  Raises SolverDiverged if the relative residual fails to
    reach tol within max_iter iterations.
    """
    u = np.asarray(state.u, dtype=float)
    half = 0.5 * dt
    m = gen.m

    def lhs(v):
        return v - half * gen.apply(v)

    b = u + half * gen.apply(u)
    precond = 1.0 + half * gen.degree / m
    x = u.copy()
    r = b - lhs(x)
    z = r / precond
    rz = float(np.dot(m * r, z))
    p = z.copy()
    b_norm = math.sqrt(float(np.dot(m * b, b)))
    target = tol * max(b_norm, 1e-300)
    for _ in range(max_iter):
        if math.sqrt(float(np.dot(m * r, r))) <= target:
            return EvolutionState(u=x, t=state.t + dt)
        q = lhs(p)
        pq = float(np.dot(m * p, q))
        if pq <= 0.0:
            raise SolverDiverged("step_heat: CG lost positive definiteness")
        a = rz / pq
        x += a * p
        r -= a * q
        z = r / precond
        rz_new = float(np.dot(m * r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverDiverged(f"step_heat: CG did not reach tol={tol} in {max_iter} iterations")


def step_schrodinger(gen, state, dt):
    """One Cayley (Crank-Nicolson) unitary step of i du/dt = -A u.

    Solves (M - i dt/2 C) u+ = (M + i dt/2 C) u with a cached sparse LU
    factorization; the step is exactly unitary in the mass inner product
    up to the linear-solve roundoff.
    """
    key = float(dt)
    if key not in gen._cayley:
        M = sparse.diags(gen.m)
        lhs = (M - 0.5j * dt * gen.C).tocsc()
        rhs = (M + 0.5j * dt * gen.C).tocsr()
        try:
            gen._cayley[key] = (splu(lhs), rhs)
        except RuntimeError as exc:  # singular factorization
            raise SolverDiverged(f"step_schrodinger: factorization failed: {exc}")
        if len(gen._cayley) > 8:
            gen._cayley.pop(next(iter(gen._cayley)))
    lu, rhs = gen._cayley[key]
    u = lu.solve(rhs.dot(np.asarray(state.u, dtype=complex)))
    return EvolutionState(u=u, t=state.t + dt)


def run_heat(gen, state, T, dt, *, tol=1e-10, record_every=0):
    """Evolve the heat flow to time T; optionally record a time series.

    The series rows are (t, mass_left, mass_right, norm) with mass_left
    and mass_right the weighted content strictly left/right of the
    singular line and norm the mass-inner-product norm.
    """
    n = max(1, int(round(T / dt)))
    dt_eff = T / n
    x_cells = gen.grid.x_of_cells()
    left = x_cells < 0.0
    right = x_cells > 0.0
    series = []

    def record(st):
        series.append((st.t,
                       float(np.dot(gen.m[left], st.u[left])),
                       float(np.dot(gen.m[right], st.u[right])),
                       gen.m_norm(st.u)))

    if record_every:
        record(state)
    for step in range(n):
        state = step_heat(gen, state, dt_eff, tol=tol)
        if record_every and ((step + 1) % record_every == 0 or step == n - 1):
            record(state)
    return state, series


@dataclass
class TransmissionReport:
    alpha: float
    eps_list: list
    time_horizon: float
    fractions: list
    verdict: str

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "eps_list": list(self.eps_list),
            "time_horizon": self.time_horizon,
            "fractions": list(self.fractions),
            "verdict": self.verdict,
        }


def transmission_study(alpha, eps_list, T=0.5, *, dt=1e-3, n_x=400, x_half=3.0,
                       n_y=64, period=_TWO_PI, bump_center=(-1.0, math.pi),
                       bump_sigma=0.3, tol=1e-10):
    """Mass transmission across the singular line on a shrinking eps sweep.

    For each eps the same left-started bump is evolved by the heat flow
    to time T and the transmitted fraction

        sum_{x > 0} m u  /  sum m u

    is recorded.  Verdicts over the sweep:

    * "barrier-consistent": fractions strictly decreasing and the final
      one below 1e-3;
    * "crossing-consistent": successive fractions within 10% of each
      other and the final one above 1e-2;
    * otherwise Inconclusive is raised, carrying the raw fractions.

    The two thresholds are reporting conventions for this experiment,
    not intrinsic constants.
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 2 or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("transmission_study: eps_list must be strictly decreasing")
    fractions = []
    for eps in eps_list:
        gen = assemble_generator(alpha, eps, n_x=n_x, x_half=x_half, n_y=n_y,
                                 period=period)
        state = gaussian_bump_state(gen, bump_center, bump_sigma)
        state, _ = run_heat(gen, state, T, dt, tol=tol)
        x_cells = gen.grid.x_of_cells()
        right = float(np.dot(gen.m[x_cells > 0.0], state.u[x_cells > 0.0]))
        total = float(np.dot(gen.m, state.u))
        fractions.append(right / total)

    decreasing = all(b < a for a, b in zip(fractions, fractions[1:]))
    ratios_close = all(
        a != 0.0 and abs(b / a - 1.0) <= 0.1 for a, b in zip(fractions, fractions[1:]))
    if decreasing and fractions[-1] < 1e-3:
        verdict = "barrier-consistent"
    elif ratios_close and fractions[-1] > 1e-2:
        verdict = "crossing-consistent"
    else:
        report = TransmissionReport(alpha=float(alpha), eps_list=eps_list,
                                    time_horizon=float(T), fractions=fractions,
                                    verdict="inconclusive")
        raise Inconclusive(
            f"transmission_study: fractions {fractions} match no verdict", report)
    return TransmissionReport(alpha=float(alpha), eps_list=eps_list,
                              time_horizon=float(T), fractions=fractions,
                              verdict=verdict)
