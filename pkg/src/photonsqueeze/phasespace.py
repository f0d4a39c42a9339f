"""Wigner functions, homodyne marginals and negativity.

The Wigner function is normalized to unit integral over ``dx dp``, so the
vacuum peaks at 1/pi and ``W(x, p) = <Pi(x, p)> / pi`` where ``Pi(x, p)`` is
the parity operator displaced to the phase-space point (x, p).

Grid evaluation factorizes the displacement into an x-translation and a
p-translation, ``D = exp(i p0 x) exp(-i x0 p)`` up to a phase, so that

    W[i, j] = Re Tr[(Dx_i^dag rho Dx_i) (Dp_j Pi Dp_j^dag)] / pi

is a single matrix product of two stacks of flattened operators.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .fock import (
    DensityMatrix,
    as_dm,
    embed,
    hermite_functions,
    quadrature_eigenvectors,
    quadrature_moments,
)
from .gates import quadrature_shift


class GridSupportError(ValueError):
    """A phase-space or quadrature grid misses a significant part of the state."""


SUPPORT_TOL = 1e-2


@dataclass(frozen=True, eq=False)
class WignerGrid:
    x: np.ndarray
    p: np.ndarray
    values: np.ndarray   # values[i, j] = W(x[i], p[j])

    def __post_init__(self):
        x, p = np.asarray(self.x, float), np.asarray(self.p, float)
        v = np.asarray(self.values)
        if v.shape != (x.size, p.size):
            raise ValueError(f"values shape {v.shape} does not match grid ({x.size}, {p.size})")
        if np.iscomplexobj(v):
            if np.max(np.abs(v.imag), initial=0.0) > 1e-10:
                raise ValueError("Wigner values have a non-negligible imaginary part")
            v = v.real
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "values", v.astype(float))

    @property
    def x_range(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    @property
    def p_range(self) -> tuple[float, float]:
        return float(self.p[0]), float(self.p[-1])

    @property
    def cell(self) -> float:
        return float((self.x[1] - self.x[0]) * (self.p[1] - self.p[0]))

    def integral(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.values, self.p, axis=1), self.x))

    def minimum(self) -> tuple[float, tuple[float, float]]:
        i, j = np.unravel_index(np.argmin(self.values), self.values.shape)
        return float(self.values[i, j]), (float(self.x[i]), float(self.p[j]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(
            f"# x_min={self.x[0]!r},x_max={self.x[-1]!r},nx={self.x.size},"
            f"p_min={self.p[0]!r},p_max={self.p[-1]!r},np={self.p.size}\n"
        )
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "p", "W"])
        for i, xv in enumerate(self.x):
            for j, pv in enumerate(self.p):
                w.writerow([f"{xv:.6f}", f"{pv:.6f}", f"{self.values[i, j]:.12e}"])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class MarginalDistribution:
    theta: float
    xs: np.ndarray
    pdf: np.ndarray

    def __post_init__(self):
        xs, pdf = np.asarray(self.xs, float), np.asarray(self.pdf, float)
        if xs.shape != pdf.shape:
            raise ValueError("xs and pdf must have the same shape")
        if pdf.min(initial=0.0) < -1e-12:
            raise ValueError("marginal has negative density")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "pdf", pdf)

    def normalization(self) -> float:
        return float(np.trapezoid(self.pdf, self.xs))

    def mean(self) -> float:
        return float(np.trapezoid(self.xs * self.pdf, self.xs))

    def variance(self) -> float:
        mu = self.mean()
        return float(np.trapezoid((self.xs - mu) ** 2 * self.pdf, self.xs))


def marginals_to_csv(marginals) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "x", "pdf"])
    for m in marginals:
        for xv, pv in zip(m.xs, m.pdf):
            w.writerow([f"{m.theta:.12f}", f"{xv:.6f}", f"{pv:.12e}"])
    return buf.getvalue()


# ---------------------------------------------------------------- helpers


def _effective_dim(rho: np.ndarray, tol: float = 1e-14) -> int:
    pops = np.abs(np.diag(rho))
    nz = np.nonzero(pops > tol)[0]
    return int(nz[-1]) + 1 if nz.size else 1


def _working_dim(rho: np.ndarray, reach: float) -> int:
    """Cutoff that holds the state after a displacement of quadrature length ``reach``."""
    n_eff = _effective_dim(rho)
    amp = np.sqrt(n_eff) + reach / np.sqrt(2)
    return max(rho.shape[0], int(np.ceil(amp**2 + 6 * amp + 12)))


def _parity(M: int) -> np.ndarray:
    return (-1.0) ** np.arange(M)


def _check_support(rho: DensityMatrix, x, p, tol: float = SUPPORT_TOL):
    """Mass of the x and p marginals outside the grid must stay below ``tol``."""
    for theta, axis in ((0.0, x), (np.pi / 2, p)):
        m = marginal(rho, theta)
        inside = (m.xs >= axis[0]) & (m.xs <= axis[-1])
        missing = 1.0 - float(np.trapezoid(np.where(inside, m.pdf, 0.0), m.xs))
        if missing > tol:
            name = "x" if theta == 0 else "p"
            raise GridSupportError(
                f"{name} grid [{axis[0]:.3g}, {axis[-1]:.3g}] misses marginal weight {missing:.3g}"
            )


def suggested_extent(rho, sigmas: float = 5.0, minimum: float = 5.0) -> float:
    """Half-width of a square grid that holds the state's quadrature spread."""
    mean, cov = quadrature_moments(as_dm(rho))
    reach = np.abs(mean) + sigmas * np.sqrt(np.diag(cov))
    return float(max(minimum, np.ceil(reach.max())))


# ---------------------------------------------------------------- Wigner


def wigner(
    rho,
    x_range: tuple[float, float] = (-5.0, 5.0),
    p_range: tuple[float, float] | None = None,
    nx: int = 201,
    np_: int | None = None,
    check_support: bool = True,
) -> WignerGrid:
    """Wigner function on a rectangular grid (default +-5, 201 x 201).

    Evaluated as the Weyl transform of the position kernel,
    ``W(x, p) = (1/pi) int dy <x+y|rho|x-y> exp(-2ipy)``, which is the
    displaced-parity expectation written in the position basis.  The single
    point routine :func:`wigner_at` computes the parity trace directly and
    serves as an independent check.
    """
    r = as_dm(rho)
    p_range = x_range if p_range is None else p_range
    np_ = nx if np_ is None else np_
    xs = np.linspace(*x_range, nx)
    ps = np.linspace(*p_range, np_)
    if check_support:
        _check_support(r, xs, ps)
    return WignerGrid(xs, ps, _weyl_grid(r.elems, xs, ps))


def _weyl_grid(rho: np.ndarray, xs: np.ndarray, ps: np.ndarray) -> np.ndarray:
    N = rho.shape[0]
    n_eff = _effective_dim(rho)
    support = np.sqrt(2 * n_eff + 1) + 6.0
    # The y-integrand oscillates at most at 2 * (max |p| + wavefunction wavenumber).
    kmax = np.abs(ps).max() + np.sqrt(2 * n_eff + 1)
    h = min(0.05, np.pi / (4 * kmax))
    ys = np.arange(0.0, support + h, h)
    ys = np.concatenate([-ys[:0:-1], ys])
    out = np.empty((xs.size, ps.size))
    phase = np.exp(-2j * np.outer(ys, ps)) * h / np.pi
    for i, x0 in enumerate(xs):
        plus = hermite_functions(N, x0 + ys)
        minus = hermite_functions(N, x0 - ys)
        # <x+y|n> = psi_n(x+y) (real), so the kernel is psi(x+y)^T rho psi(x-y).
        kern = np.sum(plus * (rho @ minus), axis=0)
        out[i] = (kern @ phase).real
    return out


def wigner_at(rho, x: float, p: float) -> float:
    r = as_dm(rho)
    M = _working_dim(r.elems, float(np.hypot(x, p)))
    big = embed(r, M).elems
    Dx = quadrature_shift(x, 0.0, M)
    Dp = quadrature_shift(p, np.pi / 2, M)
    A = Dx.conj().T @ big @ Dx
    B = (Dp * _parity(M)) @ Dp.conj().T
    return float(np.sum(A * B.T).real / np.pi)


def wigner_min(rho, region: tuple[float, float] = (-3.0, 3.0), n: int = 61):
    """Minimum of W over a square region: grid scan, then local refinement.

    Returns (value, (x, p)); the value never exceeds the smallest grid sample.
    """
    g = wigner(rho, region, nx=n, check_support=False)
    best, (x0, p0) = g.minimum()
    i, j = np.unravel_index(np.argmin(g.values), g.values.shape)
    # Quadratic fit on the 3x3 neighbourhood as a starting point.
    if 0 < i < n - 1 and 0 < j < n - 1:
        hx, hp = g.x[1] - g.x[0], g.p[1] - g.p[0]
        v = g.values
        dx = (v[i + 1, j] - v[i - 1, j]) / (2 * hx)
        dp = (v[i, j + 1] - v[i, j - 1]) / (2 * hp)
        dxx = (v[i + 1, j] - 2 * v[i, j] + v[i - 1, j]) / hx**2
        dpp = (v[i, j + 1] - 2 * v[i, j] + v[i, j - 1]) / hp**2
        dxp = (v[i + 1, j + 1] - v[i + 1, j - 1] - v[i - 1, j + 1] + v[i - 1, j - 1]) / (4 * hx * hp)
        H = np.array([[dxx, dxp], [dxp, dpp]])
        if np.all(np.linalg.eigvalsh(H) > 0):
            step = -np.linalg.solve(H, [dx, dp])
            if np.all(np.abs(step) <= [hx, hp]):
                x0, p0 = x0 + step[0], p0 + step[1]
    res = minimize(lambda z: wigner_at(rho, z[0], z[1]), [x0, p0], method="Nelder-Mead",
                   bounds=[region, region], options={"xatol": 1e-6, "fatol": 1e-12})
    if res.fun < best:
        return float(res.fun), (float(res.x[0]), float(res.x[1]))
    return best, (float(g.minimum()[1][0]), float(g.minimum()[1][1]))


# ---------------------------------------------------------------- marginals


def marginal(rho, theta: float, xs=None, check_support: bool = False) -> MarginalDistribution:
    """pr(x; theta) = <x, theta| rho |x, theta> from Hermite functions."""
    r = as_dm(rho)
    if xs is None:
        mean, cov = quadrature_moments(r)
        u = np.array([np.cos(theta), np.sin(theta)])
        mu, sd = float(u @ mean), float(np.sqrt(max(u @ cov @ u, 0.0)))
        half = max(8.0, abs(mu) + 10.0 * sd)
        xs = np.linspace(-half, half, 2001)
    xs = np.asarray(xs, dtype=float)
    V = quadrature_eigenvectors(theta, xs, r.dim)
    pdf = np.sum(V.conj() * (r.elems @ V), axis=0).real
    pdf = np.where(np.abs(pdf) < 1e-15, 0.0, pdf)
    out = MarginalDistribution(theta, xs, pdf)
    if check_support and abs(out.normalization() - 1.0) > 1e-6:
        raise GridSupportError(f"marginal grid holds weight {out.normalization():.8f}")
    return out


def marginal_variances(rho, phases) -> np.ndarray:
    """Variance of x(theta) at each phase, from the first and second moments."""
    mean, cov = quadrature_moments(as_dm(rho))
    th = np.asarray(phases, dtype=float)
    c, s = np.cos(th), np.sin(th)
    return c * c * cov[0, 0] + 2 * c * s * cov[0, 1] + s * s * cov[1, 1]


def uniform_phases_period(n: int) -> np.ndarray:
    """``n`` phases spread evenly over a full period [0, 2 pi)."""
    return np.arange(n) * 2 * np.pi / n


def phase_spread(variances) -> float:
    """(max - min) / mean of a set of marginal variances."""
    v = np.asarray(variances)
    return float((v.max() - v.min()) / v.mean())


def negativity_volume(rho, extent: float | None = None, n: int = 201) -> float:
    """Integral of |W| minus one (zero for non-negative Wigner functions)."""
    half = suggested_extent(rho) if extent is None else extent
    g = wigner(rho, (-half, half), nx=n)
    vals = np.trapezoid(np.trapezoid(np.abs(g.values), g.p, axis=1), g.x)
    total = g.integral()
    return float(vals / total - 1.0)
