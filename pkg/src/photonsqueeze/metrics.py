"""Coherent-state probes of superposition states, classical benchmarks and A.

For a probe amplitude beta,

    D(beta) = (<beta|rho|beta> + <-beta|rho|-beta>) / 2
    V(beta) = (<beta|rho|-beta> + <-beta|rho|beta>) / 2

D measures how much the state looks like either of two opposite coherent
states; V measures the coherence between them.  A balanced mixture of two
coherent states has V >= 0, and the ``*_mixture_bound`` functions give the
smallest V any mixture of coherent or Gaussian states can reach.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .fock import (
    CutoffError,
    StateError,
    as_dm,
    coherent_amplitudes,
    make_coherent,
    make_css,
)
from .gates import beam_splitter_block


# ---------------------------------------------------------------- D and V


def _probe(beta: complex, N: int) -> np.ndarray:
    return make_coherent(beta, N).amps


def _overlaps(rho, beta: complex):
    r = as_dm(rho).elems
    plus, minus = _probe(beta, r.shape[0]), _probe(-beta, r.shape[0])
    return r, plus, minus


def distinguishability(rho, beta: complex) -> float:
    r, plus, minus = _overlaps(rho, beta)
    d = 0.5 * (np.vdot(plus, r @ plus) + np.vdot(minus, r @ minus)).real
    return float(np.clip(d, 0.0, 1.0))


def interference(rho, beta: complex) -> float:
    r, plus, minus = _overlaps(rho, beta)
    a = np.vdot(plus, r @ minus)
    b = np.vdot(minus, r @ plus)
    if abs(a - np.conj(b)) > 1e-10:
        raise StateError("cross overlaps are not conjugate; operator is not Hermitian")
    return float(a.real)


@dataclass(frozen=True, eq=False)
class MetricCurve:
    """D and V sampled along a magnitude or phase axis.

    ``d_max``/``v_min`` hold (axis value, metric value) at the extrema, which
    is also how a probe magnitude for the phase scan is chosen.
    """

    axis: np.ndarray
    d_values: np.ndarray
    v_values: np.ndarray
    state_label: str
    axis_kind: str = "beta"

    def __post_init__(self):
        d = np.asarray(self.d_values, float)
        v = np.asarray(self.v_values, float)
        if np.any(d < -1e-12) or np.any(d > 1 + 1e-12) or np.any(np.abs(v) > 1 + 1e-12):
            raise ValueError("metric values out of range")
        object.__setattr__(self, "axis", np.asarray(self.axis, float))
        object.__setattr__(self, "d_values", d)
        object.__setattr__(self, "v_values", v)

    @property
    def d_max(self) -> tuple[float, float]:
        i = int(np.argmax(self.d_values))
        return float(self.axis[i]), float(self.d_values[i])

    @property
    def v_min(self) -> tuple[float, float]:
        i = int(np.argmin(self.v_values))
        return float(self.axis[i]), float(self.v_values[i])

    def to_csv(self, extra: dict[str, np.ndarray] | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        extra = extra or {}
        w.writerow(["axis", "D", "V", *extra])
        for i, a in enumerate(self.axis):
            w.writerow([f"{a:.6f}", f"{self.d_values[i]:.12e}", f"{self.v_values[i]:.12e}",
                        *(f"{col[i]:.12e}" for col in extra.values())])
        return buf.getvalue()


def metric_curve_beta(rho, betas, phase: float = 0.0, label: str = "") -> MetricCurve:
    betas = np.asarray(betas, dtype=float)
    if betas.size == 0:
        raise ValueError("empty beta grid")
    probes = betas * np.exp(1j * phase)
    return MetricCurve(
        betas,
        [distinguishability(rho, b) for b in probes],
        [interference(rho, b) for b in probes],
        label,
        "beta",
    )


def metric_curve_phase(rho, beta0: float, phases, label: str = "") -> MetricCurve:
    phases = np.asarray(phases, dtype=float)
    if phases.size == 0:
        raise ValueError("empty phase grid")
    probes = beta0 * np.exp(1j * phases)
    return MetricCurve(
        phases,
        [distinguishability(rho, b) for b in probes],
        [interference(rho, b) for b in probes],
        label,
        "phase",
    )


# ---------------------------------------------------------------- bounds


def _coherent_v(y, beta):
    return np.exp(-beta**2 - y**2) * np.cos(2 * beta * y)


def coherent_mixture_bound(beta: float) -> float:
    """Smallest V(beta) reachable by any mixture of coherent states.

    V is linear in the state, so the minimum over mixtures is attained by a
    single coherent state |c>, for which V = exp(-beta^2 - |c|^2) cos(2 beta Im c).
    The real part of c only lowers the magnitude, leaving a 1-D problem in Im c.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    ys = np.linspace(0.0, 5.0, 2001)
    vals = _coherent_v(ys, beta)
    k = int(np.argmin(vals))
    lo, hi = ys[max(k - 1, 0)], ys[min(k + 1, ys.size - 1)]
    res = minimize_scalar(_coherent_v, bounds=(lo, hi), args=(beta,), method="bounded",
                          options={"xatol": 1e-12})
    return float(min(res.fun, vals[k]))


def _gauss_params(x0, p0, r, phi):
    """Wavefunction exp(-A x^2 + B x + C) of D(x0, p0) S(r e^{i phi}) |0>.

    With the package's squeeze convention, real r > 0 stretches x.
    """
    sxx = 0.5 * (np.cosh(2 * r) + np.sinh(2 * r) * np.cos(phi))
    sxp = 0.5 * np.sinh(2 * r) * np.sin(phi)
    A = (1 - 2j * sxp) / (4 * sxx)
    B = 2 * A * x0 + 1j * p0
    C = -A * x0**2 + 0.25 * np.log(2 * A.real / np.pi)
    return A, B, C


def _coherent_params(beta: complex):
    xb, pb = np.sqrt(2) * beta.real, np.sqrt(2) * beta.imag
    return 0.5, xb + 1j * pb, -0.5 * xb**2 - 0.5j * xb * pb - 0.25 * np.log(np.pi)


def _overlap(bra, ket):
    """<bra|ket> for Gaussian wavefunctions given as (A, B, C)."""
    A1, B1, C1 = bra
    A2, B2, C2 = ket
    a = np.conj(A1) + A2
    b = np.conj(B1) + B2
    return np.sqrt(np.pi / a) * np.exp(b**2 / (4 * a) + np.conj(C1) + C2)


def gaussian_v(beta: complex, x0, p0, r, phi):
    """V(beta) of the pure Gaussian state with mean (x0, p0) and squeezing r e^{i phi}."""
    g = _gauss_params(x0, p0, r, phi)
    plus = _overlap(_coherent_params(beta), g)
    minus = _overlap(_coherent_params(-beta), g)
    return (plus * np.conj(minus)).real


@dataclass(frozen=True)
class GaussianBound:
    value: float
    params: tuple[float, float, float, float]   # x0, p0, r, phi
    converged: bool


def gaussian_bound_search(beta: float, n_starts: int = 5) -> GaussianBound:
    """Multi-start search for the smallest V(beta) over pure Gaussian states.

    A coarse grid (|d| <= 3, r <= 1.2, 16 phases each) seeds ``n_starts``
    Nelder-Mead refinements; the best result wins, ties going to the earliest
    start.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    mags = np.linspace(0.0, 3.0, 13)
    angs = np.arange(16) * 2 * np.pi / 16
    rs = np.linspace(0.0, 1.2, 9)
    M, Ad, R, P = np.meshgrid(mags, angs, rs, angs, indexing="ij")
    x0, p0 = np.sqrt(2) * M * np.cos(Ad), np.sqrt(2) * M * np.sin(Ad)
    vals = gaussian_v(beta, x0, p0, R, P).ravel()
    order = np.argsort(vals, kind="stable")[:n_starts]
    starts = np.stack([x0.ravel(), p0.ravel(), R.ravel(), P.ravel()], axis=1)[order]

    def f(z):
        return gaussian_v(beta, *z)

    best = None
    for z0 in starts:
        res = minimize(f, z0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000})
        if best is None or res.fun < best.fun - 1e-15:
            best = res
    return GaussianBound(float(best.fun), tuple(float(v) for v in best.x), bool(best.success))


def gaussian_mixture_bound(beta: float) -> float:
    """Smallest V(beta) reachable by any mixture of Gaussian states."""
    return gaussian_bound_search(beta).value


# ---------------------------------------------------------------- anticorrelation


@dataclass(frozen=True)
class AnticorrelationResult:
    """Coincidence statistics behind A = p_c / p_s^2.

    ``singles`` records which single-click probability was used: the
    marginal click probability of one detector (``"marginal"``), or the
    probability that exactly one of the two detectors clicks
    (``"exactly-one"``).
    """

    p_c: float
    p_s: float
    a_value: float
    detector_efficiency: float
    singles: str = "marginal"

    def __post_init__(self):
        if self.p_c > self.p_s + 1e-12 and self.singles == "marginal":
            raise ValueError("coincidence probability exceeds single-detector probability")
        if self.p_s > 1 + 1e-12 or self.a_value < 0:
            raise ValueError("invalid anticorrelation statistics")

    def to_dict(self) -> dict:
        return {"p_c": self.p_c, "p_s": self.p_s, "A": self.a_value,
                "detector_efficiency": self.detector_efficiency, "singles": self.singles,
                "detector_model": "symmetric on/off, balanced splitter"}


def _click(eta: float, N: int) -> np.ndarray:
    """1 - (1 - eta)^k without cancellation for small k * eta."""
    k = np.arange(N, dtype=float)
    if eta == 1.0:
        return (k > 0).astype(float)
    return -np.expm1(k * np.log1p(-eta))


def anticorrelation(rho, detector_efficiency: float = 1.0, singles: str = "marginal") -> AnticorrelationResult:
    """Split ``rho`` with vacuum on a balanced beam splitter and count clicks."""
    eta = detector_efficiency
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"detector efficiency {eta} outside (0, 1]")
    if singles not in ("marginal", "exactly-one"):
        raise ValueError("singles must be 'marginal' or 'exactly-one'")
    r = as_dm(rho)
    N = r.dim
    # Both detectors are diagonal in photon number and the splitter conserves
    # it, so only the input populations enter: P(k, n-k) = sum_n rho_nn
    # |<k, n-k|U|n, 0>|^2, read from the number-n block of the splitter.
    pops = np.zeros((N, N))
    for n, w in enumerate(r.populations()):
        col = beam_splitter_block(0.5, n)[:, n]
        pops[np.arange(n + 1), n - np.arange(n + 1)] += w * col**2
    # every probability is a sum of non-negative terms, which keeps A accurate
    # for weak inputs where 1 - P(no click) would cancel
    click = _click(eta, N)
    dark = 1.0 - click
    p_c = float(click @ pops @ click)
    if singles == "marginal":
        p_s = float(click @ pops.sum(axis=1))
    else:
        p_s = float(click @ pops @ dark + dark @ pops @ click)
    if p_s <= 1e-300:
        raise StateError("no single clicks: A is undefined (vacuum input)")
    a = p_c / p_s**2
    return AnticorrelationResult(p_c, p_s, a, eta, singles)


def css_anticorrelation_closed_form(alpha: float) -> float:
    """A of the odd superposition with unit-efficiency detectors."""
    return 1.0 - (1.0 - 2.0 * np.cosh(alpha**2 / 2.0)) ** -2


# ---------------------------------------------------------------- CSS fit


def _css_fidelity(r: np.ndarray, alpha: float) -> float:
    k = make_css(alpha, "odd", r.shape[0], tail_tol=1e-8).amps
    return float(np.vdot(k, r @ k).real)


def _alpha_limit(N: int, cap: float = 3.0) -> float:
    # Largest amplitude whose coherent tail fits the cutoff.
    for a in np.linspace(cap, 0.1, 300):
        tail = 1.0 - float(np.sum(np.abs(coherent_amplitudes(a, N)) ** 2))
        if tail <= 1e-8:
            return float(a)
    raise CutoffError(f"cutoff {N} too small for any superposition amplitude")


def fit_css_amplitude(rho, alpha_min: float = 1e-3, alpha_max: float | None = None, n_scan: int = 300):
    """alpha* maximizing fidelity with the odd superposition, and that fidelity.

    Coarse scan over [alpha_min, alpha_max], then golden-section refinement
    inside the bracket of the best scan point.  A maximum at the lower edge
    means the state is closest to the alpha -> 0 limit, a single photon.
    """
    r = as_dm(rho).elems
    hi = _alpha_limit(r.shape[0]) if alpha_max is None else alpha_max
    grid = np.linspace(alpha_min, hi, n_scan)
    f = np.array([_css_fidelity(r, a) for a in grid])
    if f.max() - f.min() < 1e-12:
        raise StateError("fidelity is flat in alpha; no preferred amplitude")
    k = int(np.argmax(f))
    if k == 0:
        return float(grid[0]), float(f[0])
    if k == n_scan - 1:
        return float(grid[-1]), float(f[-1])
    res = minimize_scalar(lambda a: -_css_fidelity(r, a), bracket=(grid[k - 1], grid[k], grid[k + 1]),
                          method="golden", tol=1e-10)
    if -res.fun >= f[k]:
        return float(res.x), float(-res.fun)
    return float(grid[k]), float(f[k])
