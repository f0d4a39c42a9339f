"""Simulated phase-scanned homodyne data and maximum-likelihood reconstruction."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .fock import DensityMatrix, ModeOperator, as_dm, hermite_functions
from .gates import loss_adjoint
from .phasespace import marginal

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class QuadratureRecord:
    theta: float
    x: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)
        object.__setattr__(self, "x", float(self.x))


def uniform_phases(n: int = 12) -> np.ndarray:
    """``n`` phases spaced evenly over [0, pi); x(theta + pi) = -x(theta) adds nothing new."""
    return np.arange(n) * np.pi / n


def sample_quadratures(rho, phases, n_per_phase: int, seed: int) -> list[QuadratureRecord]:
    """Draw homodyne outcomes by inverse CDF of each phase's marginal.

    Phase ``k`` uses the ``k``-th child of ``SeedSequence(seed)``, so each
    phase's samples do not depend on how many other phases are requested
    before it.
    """
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    if phases.size == 0:
        raise ValueError("need at least one phase")
    if n_per_phase < 1:
        raise ValueError("n_per_phase must be >= 1")
    r = as_dm(rho)
    streams = np.random.SeedSequence(seed).spawn(phases.size)
    out: list[QuadratureRecord] = []
    for theta, ss in zip(phases, streams):
        m = marginal(r, theta, check_support=True)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (m.pdf[1:] + m.pdf[:-1]) * np.diff(m.xs))])
        cdf /= cdf[-1]
        u = np.random.default_rng(ss).random(n_per_phase)
        xs = np.interp(u, cdf, m.xs)
        out.extend(QuadratureRecord(theta, x) for x in xs)
    return out


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "x"])
    for rec in records:
        w.writerow([repr(rec.theta), repr(rec.x)])
    return buf.getvalue()


def records_from_csv(text: str) -> list[QuadratureRecord]:
    rows = csv.DictReader(io.StringIO(text))
    if rows.fieldnames != ["theta", "x"]:
        raise ValueError(f"expected header theta,x; got {rows.fieldnames}")
    return [QuadratureRecord(float(r["theta"]), float(r["x"])) for r in rows]


def records_from_trajectories(trajectories) -> list[QuadratureRecord]:
    """Probe samples carried by Monte-Carlo trajectories."""
    recs = [QuadratureRecord(t.probe_theta, t.probe_x) for t in trajectories if t.probe_x is not None]
    if not recs:
        raise ValueError("trajectories carry no probe samples")
    return recs


# ---------------------------------------------------------------- POVM


def povm_element(theta: float, x: float, width: float, efficiency: float, N: int,
                 nodes: int = 8) -> ModeOperator:
    """Bin operator int_{x-w/2}^{x+w/2} |x', theta><x', theta| dx', smeared by loss."""
    if width <= 0:
        raise ValueError("bin width must be positive")
    return ModeOperator(_bin_operators(theta, np.array([x]), width, efficiency, N, nodes)[0], "povm")


def _bin_operators(theta, centers, width, efficiency, N, nodes=8) -> np.ndarray:
    t, w = leggauss(nodes)
    pts = (centers[:, None] + 0.5 * width * t[None, :]).ravel()
    H = hermite_functions(N, pts).reshape(N, centers.size, nodes)
    Hw = H * (0.5 * width * w)
    ops = np.einsum("nbk,mbk->bnm", Hw, H, optimize=True).astype(complex)
    n = np.arange(N)
    ops *= np.exp(1j * theta * (n[:, None] - n[None, :]))
    if efficiency < 1.0:
        ops = np.stack([loss_adjoint(op, efficiency) for op in ops])
    return ops


# ---------------------------------------------------------------- reconstruction


@dataclass(frozen=True, eq=False)
class ReconstructionReport:
    rho: DensityMatrix
    iterations: int
    log_likelihood_trace: list[float]
    converged: bool
    efficiency_assumed: float
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        ll = np.asarray(self.log_likelihood_trace)
        if ll.size > 1 and np.any(np.diff(ll) < -1e-10):
            raise AssertionError("log-likelihood decreased during reconstruction")

    def metadata(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "efficiency_assumed": self.efficiency_assumed,
            "final_log_likelihood": self.log_likelihood_trace[-1] if self.log_likelihood_trace else None,
            **self.settings,
        }


def _bin_records(records, width: float):
    """Group records by phase and bin index: returns list of (theta, centers, counts)."""
    by_phase: dict[float, list[float]] = {}
    for rec in records:
        by_phase.setdefault(round(rec.theta, 12), []).append(rec.x)
    groups = []
    for theta in sorted(by_phase):
        idx = np.floor(np.asarray(by_phase[theta]) / width + 0.5).astype(np.int64)
        uniq, counts = np.unique(idx, return_counts=True)
        groups.append((theta, uniq * width, counts))
    return groups


def maxlik_reconstruct(
    records,
    N: int,
    efficiency: float = 1.0,
    max_iters: int = 2000,
    tol: float = 1e-9,
    bin_width: float = 0.1,
) -> ReconstructionReport:
    """Iterative maximum-likelihood estimate of rho from binned homodyne data.

    Each step is rho <- R rho R / Tr(...) with R = sum_k f_k Pi_k / p_k.  Should
    a full step lower the likelihood, the step is diluted to
    (1 + eps R) rho (1 + eps R) with eps halved until the likelihood does not
    drop, so the recorded likelihood trace never decreases.  Iteration stops
    once the mean log-likelihood per record changes by less than ``tol``.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to reconstruct from")
    if not 0.0 < efficiency <= 1.0:
        raise ValueError(f"efficiency {efficiency} outside (0, 1]")
    if len(records) < N * N:
        warnings.warn(f"{len(records)} records for {N * N} parameters", stacklevel=2)

    groups = _bin_records(records, bin_width)
    ops = np.concatenate([_bin_operators(th, c, bin_width, efficiency, N) for th, c, _ in groups])
    counts = np.concatenate([c for *_, c in groups]).astype(float)
    freq = counts / counts.sum()
    # p_k = Tr(rho Pi_k) = sum_ab rho_ab Pi_k[b, a]
    flat = ops.transpose(0, 2, 1).reshape(len(ops), N * N)

    def probs(rho):
        return np.clip((flat @ rho.reshape(-1)).real, 1e-300, None)

    def loglik(p):
        return float(freq @ np.log(p))

    rho = np.eye(N, dtype=complex) / N
    p = probs(rho)
    ll = loglik(p)
    trace = [ll]
    converged = False
    eye = np.eye(N)
    it = 0
    for it in range(1, max_iters + 1):
        R = np.tensordot(freq / p, ops, axes=1)
        cand = R @ rho @ R
        cand = 0.5 * (cand + cand.conj().T) / np.trace(cand).real
        p_new = probs(cand)
        ll_new = loglik(p_new)
        eps = 1.0
        while ll_new < ll and eps > 1e-12:
            G = eye + eps * R
            cand = G @ rho @ G
            cand = 0.5 * (cand + cand.conj().T) / np.trace(cand).real
            p_new = probs(cand)
            ll_new = loglik(p_new)
            eps *= 0.5
        if ll_new < ll:
            converged = True   # no ascent direction left at numerical precision
            break
        rho, p = cand, p_new
        change = ll_new - ll
        ll = ll_new
        trace.append(ll)
        if change < tol:
            converged = True
            break
    settings = {"bin_width": bin_width, "max_iters": max_iters, "tol": tol,
                "n_records": len(records), "n_bins": int(len(ops)), "cutoff": N}
    return ReconstructionReport(DensityMatrix(rho), it, trace, converged, efficiency, settings)
