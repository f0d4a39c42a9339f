"""Measurement-based squeezing gate.

An ancilla squeezed state and the input meet on a beam splitter of
transmittance ``T = exp(-2|gamma|)``; the ancilla arm is homodyned and the
outcome, scaled by ``sqrt((1-T)/T)``, displaces the signal.  For ``gamma > 0``
the ancilla is p-squeezed, x is measured and x is corrected; for
``gamma < 0`` every role is rotated by 90 degrees.

Three forms are provided:

* :func:`heisenberg_moments` - linear quadrature map on means/covariances.
* :func:`mb_squeeze_channel` - the unconditional Fock-space channel, obtained
  by integrating feedforward-corrected conditional states over the homodyne
  outcome with Gauss-Hermite quadrature.  The signal is handled in the
  quadrature-eigenbasis of the measured direction, where beam splitter,
  projection and displacement act as coordinate maps, so the ancilla never
  has to fit into a Fock cutoff.
* :func:`mb_squeeze_mc` - shot-by-shot simulation with an explicit two-mode
  Fock state, beam splitter, homodyne projection and displacement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy import sparse

from .fock import (
    MAX_SILENT_DEFICIT,
    CutoffError,
    DensityMatrix,
    DimensionError,
    Ket,
    as_dm,
    hermite_functions,
    partial_trace,
    quadrature_eigenvectors,
    quadrature_moments,
)
from .gates import (
    AncillaModel,
    beam_splitter,
    prepare_squeezed_thermal,
    quadrature_shift,
    rotate,
)


class ConvergenceError(RuntimeError):
    """Numerical integration or iteration did not reach its tolerance."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


def gamma_to_T(gamma: float) -> float:
    return float(np.exp(-2.0 * abs(gamma)))


def T_to_gamma(T: float) -> float:
    """|gamma| for a transmittance in (0, 1]."""
    if not 0.0 < T <= 1.0:
        raise ValueError(f"transmittance {T} outside (0, 1]")
    return float(-0.5 * np.log(T))


@dataclass(frozen=True)
class SqueezeGateConfig:
    """Gate parameters; ``feedforward_gain=None`` selects sqrt((1-T)/T)."""

    gamma: float
    ancilla: AncillaModel
    feedforward_gain: float | None = None
    quadrature_nodes: int = 64

    def __post_init__(self):
        if self.gamma > 0 and self.ancilla.orientation != "p":
            raise ValueError("positive gamma needs a p-squeezed ancilla")
        if self.gamma < 0 and self.ancilla.orientation != "x":
            raise ValueError("negative gamma needs an x-squeezed ancilla")
        if self.feedforward_gain is not None and self.feedforward_gain <= 0:
            raise ValueError("feedforward gain must be positive")
        if self.quadrature_nodes < 4:
            raise ValueError("need at least 4 quadrature nodes")

    @classmethod
    def with_ancilla(cls, gamma: float, ancilla: AncillaModel, **kw) -> "SqueezeGateConfig":
        """Orient ``ancilla`` to suit the sign of ``gamma``."""
        return cls(gamma, ancilla.oriented("x" if gamma < 0 else "p"), **kw)

    @classmethod
    def paper(cls, gamma: float, **kw) -> "SqueezeGateConfig":
        return cls.with_ancilla(gamma, AncillaModel.paper(), **kw)

    @classmethod
    def ideal(cls, gamma: float, squeezed_variance: float = 5e-5, **kw) -> "SqueezeGateConfig":
        return cls.with_ancilla(gamma, AncillaModel.pure(squeezed_variance), **kw)

    @property
    def transmittance(self) -> float:
        return gamma_to_T(self.gamma)

    @property
    def gain(self) -> float:
        if self.feedforward_gain is not None:
            return self.feedforward_gain
        T = self.transmittance
        return float(np.sqrt((1 - T) / T))

    @property
    def orientation(self) -> str:
        return "squeeze-x" if self.gamma < 0 else "squeeze-p"

    @property
    def measured_angle(self) -> float:
        """Homodyne angle on the ancilla arm; feedforward acts on the same quadrature."""
        return np.pi / 2 if self.gamma < 0 else 0.0

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "squeezed_variance": self.ancilla.squeezed_variance,
            "antisqueezed_variance": self.ancilla.antisqueezed_variance,
            "feedforward_gain": self.feedforward_gain,
            "quadrature_nodes": self.quadrature_nodes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SqueezeGateConfig":
        gamma = float(d["gamma"])
        if "squeezed_variance" in d:
            anc = AncillaModel(float(d["squeezed_variance"]), float(d["antisqueezed_variance"]))
        elif "squeezing_db" in d:
            anc = AncillaModel.from_db(float(d["squeezing_db"]), float(d["antisqueezing_db"]))
        else:
            anc = AncillaModel.paper()
        return cls.with_ancilla(
            gamma, anc,
            feedforward_gain=d.get("feedforward_gain"),
            quadrature_nodes=int(d.get("quadrature_nodes", 64)),
        )


@dataclass(frozen=True)
class GaussianMoments:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(2)
        cov = np.asarray(self.cov, dtype=float).reshape(2, 2)
        if abs(cov[0, 1] - cov[1, 0]) > 1e-9:
            raise ValueError("covariance must be symmetric")
        if np.linalg.det(cov) < 0.25 - 1e-9:
            raise ValueError("covariance violates the uncertainty relation")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def vacuum(cls) -> "GaussianMoments":
        return cls(np.zeros(2), 0.5 * np.eye(2))

    @classmethod
    def of(cls, rho) -> "GaussianMoments":
        return cls(*quadrature_moments(rho))


def _heisenberg_matrices(cfg: SqueezeGateConfig):
    """Output quadratures = S_in @ (x_in, p_in) + S_anc @ (x_anc, p_anc)."""
    T, g = cfg.transmittance, cfg.gain
    st, sr = np.sqrt(T), np.sqrt(1 - T)
    kept = (st, sr)                     # untouched quadrature after the beam splitter
    fed = (st + g * sr, sr - g * st)    # corrected quadrature: q'_in - g q'_anc
    if cfg.gamma < 0:   # p measured and corrected
        s_in = np.diag([kept[0], fed[0]])
        s_anc = np.diag([kept[1], fed[1]])
    else:
        s_in = np.diag([fed[0], kept[0]])
        s_anc = np.diag([fed[1], kept[1]])
    return s_in, s_anc


def ancilla_covariance(model: AncillaModel) -> np.ndarray:
    v = (model.squeezed_variance, model.antisqueezed_variance)
    return np.diag(v if model.orientation == "x" else v[::-1])


def heisenberg_moments(moments: GaussianMoments, cfg: SqueezeGateConfig) -> GaussianMoments:
    """Propagate first and second moments through the gate (ancilla mean zero)."""
    if cfg.gamma == 0:
        return moments
    s_in, s_anc = _heisenberg_matrices(cfg)
    cov = s_in @ moments.cov @ s_in.T + s_anc @ ancilla_covariance(cfg.ancilla) @ s_anc.T
    return GaussianMoments(s_in @ moments.mean, cov)


# ---------------------------------------------------------------- channel


@dataclass(frozen=True)
class _Grid:
    """Signal quadrature grid in the measured basis, with split Gaussian weights."""

    x: np.ndarray
    sqrt_w: np.ndarray
    out_basis: np.ndarray   # A[n, i] with sum_ij A[n,i] R_ij conj(A[k,j]) = <n|R|k>
    scale: float


def _signal_grid(N_out: int, N_in: int, T: float, theta: float) -> _Grid:
    s = 0.5 * (1.0 + T)
    M = N_out + N_in + 32
    t, w = hermgauss(M)
    x = t / np.sqrt(s)
    sqrt_w = np.sqrt(w / np.sqrt(s))
    phase = np.exp(1j * theta * np.arange(N_out))[:, None]
    A = phase * hermite_functions(N_out, x, 0.5 * s) * sqrt_w
    return _Grid(x, sqrt_w, A, s)


def _input_basis(grid: _Grid, N_in: int, T: float, shift: float, theta: float) -> np.ndarray:
    """B[k, i] = e^{ik theta} psi_k(sqrt(T) x_i + shift), carrying the other half weight."""
    s = grid.scale
    y = np.sqrt(T) * grid.x + shift
    c = s / (2 * T)
    B = hermite_functions(N_in, y, c)
    if shift != 0.0:
        B = B * np.exp(0.5 * s * grid.x**2 - c * y**2)
    phase = np.exp(1j * theta * np.arange(N_in))[:, None]
    return phase * B * grid.sqrt_w


def _ancilla_log_kernel(z: np.ndarray, Vq: float, Vc: float) -> np.ndarray:
    """log of the ancilla density kernel <z|rho_anc|z'> in its measured basis."""
    zs = z[:, None] + z[None, :]
    zd = z[:, None] - z[None, :]
    return -0.5 * np.log(2 * np.pi * Vq) - zs**2 / (8 * Vq) - 0.5 * Vc * zd**2


def _outcome_nodes(rho: np.ndarray, cfg: SqueezeGateConfig, n_nodes: int):
    T = cfg.transmittance
    theta = cfg.measured_angle
    mean, cov = quadrature_moments(DensityMatrix(rho, check_positive=False))
    u = np.array([np.cos(theta), np.sin(theta)])
    q_mean = float(u @ mean)
    q_var = float(u @ cov @ u)
    Vq = cfg.ancilla.antisqueezed_variance
    mu = -np.sqrt(1 - T) * q_mean
    sigma = np.sqrt((1 - T) * q_var + T * Vq)
    t, w = hermgauss(n_nodes)
    m = mu + np.sqrt(2) * sigma * t
    # log of the quadrature weight including the e^{t^2} compensation
    logw = np.log(w * np.sqrt(2) * sigma) + t**2
    return m, logw


def _kernel_sum(grid: _Grid, cfg: SqueezeGateConfig, m: np.ndarray, logw: np.ndarray) -> np.ndarray:
    T = cfg.transmittance
    a = np.sqrt(1 - T)
    c2 = np.sqrt(1 - T) * cfg.gain + np.sqrt(T)
    Vq = cfg.ancilla.antisqueezed_variance
    Vc = cfg.ancilla.squeezed_variance
    K = np.zeros((grid.x.size, grid.x.size))
    for mk, lw in zip(m, logw):
        K += np.exp(_ancilla_log_kernel(a * grid.x + c2 * mk, Vq, Vc) + lw)
    return K


def _apply_gate(rho: np.ndarray, cfg: SqueezeGateConfig, n_nodes: int, N_out: int) -> np.ndarray:
    N_in = rho.shape[0]
    T = cfg.transmittance
    theta = cfg.measured_angle
    grid = _signal_grid(N_out, N_in, T, theta)
    c1 = np.sqrt(T) * cfg.gain - np.sqrt(1 - T)
    m, logw = _outcome_nodes(rho, cfg, n_nodes)
    A = grid.out_basis
    if abs(c1) < 1e-14:
        B = _input_basis(grid, N_in, T, 0.0, theta)
        P = B.conj().T @ rho @ B
        R = P * _kernel_sum(grid, cfg, m, logw)
    else:
        R = np.zeros((grid.x.size, grid.x.size), dtype=complex)
        for mk, lw in zip(m, logw):
            B = _input_basis(grid, N_in, T, c1 * mk, theta)
            P = B.conj().T @ rho @ B
            R += P * _kernel_sum(grid, cfg, np.array([mk]), np.array([lw]))
    return A @ R @ A.conj().T


def conditional_output(rho, cfg: SqueezeGateConfig, outcome: float, N_out: int | None = None):
    """Feedforward-corrected signal state for one homodyne outcome.

    Returns the unnormalized operator and the outcome probability density.
    """
    r = as_dm(rho).elems
    N_out = N_out or r.shape[0]
    T = cfg.transmittance
    theta = cfg.measured_angle
    grid = _signal_grid(N_out, r.shape[0], T, theta)
    c1 = np.sqrt(T) * cfg.gain - np.sqrt(1 - T)
    B = _input_basis(grid, r.shape[0], T, c1 * outcome, theta)
    P = B.conj().T @ r @ B
    K = _kernel_sum(grid, cfg, np.array([outcome]), np.array([0.0]))
    out = grid.out_basis @ (P * K) @ grid.out_basis.conj().T
    out = 0.5 * (out + out.conj().T)
    return out, float(np.trace(out).real)


def mb_squeeze_channel(
    rho_in,
    cfg: SqueezeGateConfig,
    *,
    N_out: int | None = None,
    dephasing_stddev: float = 0.0,
    residual_tol: float = 1e-8,
    max_deficit: float = MAX_SILENT_DEFICIT,
) -> DensityMatrix:
    """Unconditional gate output.  See :func:`mb_squeeze_channel_report`."""
    return mb_squeeze_channel_report(
        rho_in, cfg, N_out=N_out, dephasing_stddev=dephasing_stddev,
        residual_tol=residual_tol, max_deficit=max_deficit,
    )[0]


def mb_squeeze_channel_report(
    rho_in,
    cfg: SqueezeGateConfig,
    *,
    N_out: int | None = None,
    dephasing_stddev: float = 0.0,
    dephasing_nodes: int = 32,
    residual_tol: float = 1e-8,
    max_deficit: float = MAX_SILENT_DEFICIT,
):
    """Gate output and the quadrature residual.

    The residual is the largest element change between the configured number
    of outcome nodes and half of it; above ``residual_tol`` a
    :class:`ConvergenceError` is raised.  A phase jitter of the gate axis with
    standard deviation ``dephasing_stddev`` (radians) is averaged with a
    Gauss-Hermite rule.
    """
    rho = as_dm(rho_in)
    N_out = N_out or rho.dim
    if cfg.gamma == 0:
        if N_out != rho.dim:
            raise DimensionError("identity gate cannot change the cutoff")
        return rho, 0.0

    if dephasing_stddev > 0:
        t, w = hermgauss(dephasing_nodes)
        deltas = np.sqrt(2) * dephasing_stddev * t
        weights = w / np.sqrt(np.pi)
    else:
        deltas, weights = np.zeros(1), np.ones(1)

    n = cfg.quadrature_nodes
    out = np.zeros((N_out, N_out), dtype=complex)
    residual = 0.0
    for d, wd in zip(deltas, weights):
        Rin = rotate(-d, rho.dim).elems
        Rout = rotate(d, N_out).elems
        r = Rin @ rho.elems @ Rin.conj().T
        full = _apply_gate(r, cfg, n, N_out)
        half = _apply_gate(r, cfg, n // 2, N_out)
        residual = max(residual, float(np.max(np.abs(full - half))))
        out += wd * (Rout @ full @ Rout.conj().T)
    if residual > residual_tol:
        raise ConvergenceError(
            f"outcome quadrature residual {residual:.3g} above {residual_tol:.3g}", residual
        )
    return DensityMatrix.from_unnormalized(out, max_deficit=max_deficit, prior_tail=rho.tail_weight), residual


# ---------------------------------------------------------------- Monte Carlo


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """One shot: ancilla homodyne outcome, corrected signal state, outcome density.

    ``probe_theta``/``probe_x`` hold an optional homodyne sample of the output,
    which is how trajectories feed the tomography module.
    """

    measurement_outcome: float
    conditional_state: DensityMatrix | None
    weight: float
    probe_theta: float | None = None
    probe_x: float | None = None

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError("outcome density must be non-negative")


@dataclass
class _Sampler:
    """Inverse-CDF sampler of a single-mode homodyne marginal on a dense grid."""

    xs: np.ndarray
    cdf: np.ndarray

    @staticmethod
    def grid_for(rho: np.ndarray, theta: float, n_grid: int = 4001) -> np.ndarray:
        mean, cov = quadrature_moments(DensityMatrix(rho, check_positive=False))
        u = np.array([np.cos(theta), np.sin(theta)])
        mu, sd = float(u @ mean), float(np.sqrt(u @ cov @ u))
        half = 10.0 * sd + 3.0
        return np.linspace(mu - half, mu + half, n_grid)

    @classmethod
    def of(cls, rho: np.ndarray, theta: float, xs=None, basis=None):
        """``basis`` may carry precomputed quadrature eigenvectors on ``xs``."""
        xs = cls.grid_for(rho, theta) if xs is None else xs
        V = quadrature_eigenvectors(theta, xs, rho.shape[0]) if basis is None else basis
        pdf = np.clip(np.sum(V.conj() * (rho @ V), axis=0).real, 0.0, None)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(xs))])
        return cls(xs, cdf / cdf[-1])

    def draw(self, u: float) -> float:
        return float(np.interp(u, self.cdf, self.xs))


def _shot_rng(seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(k)])


def mb_squeeze_mc(
    state_in,
    cfg: SqueezeGateConfig,
    n_shots: int,
    seed: int,
    *,
    forced_outcomes=None,
    keep_states: bool = True,
    probe_phases=None,
    ancilla_tail_tol: float = 1e-3,
    shot_deficit_tol: float = 1e-3,
    batch: int = 256,
):
    """Shot-by-shot gate simulation in a two-mode Fock space.

    Every shot draws its outcome from the ancilla-arm marginal with its own
    generator seeded by ``(seed, shot)``, so results do not depend on the
    order in which shots are evaluated.  ``forced_outcomes`` replaces the
    random draws (used to pin degenerate paths in tests).

    Returns (records, averaged DensityMatrix).
    """
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    rho = as_dm(state_in)
    N = rho.dim
    if cfg.gamma == 0:
        recs = [TrajectoryRecord(0.0, rho if keep_states else None, 1.0) for _ in range(n_shots)]
        return recs, rho

    T, g, theta = cfg.transmittance, cfg.gain, cfg.measured_angle
    anc = prepare_squeezed_thermal(cfg.ancilla, N, tail_tol=ancilla_tail_tol)
    joint = np.kron(rho.elems, anc.elems)
    U = sparse.csr_matrix(beam_splitter(T, N).elems)   # real and block-sparse
    joint = np.asarray((U @ np.asarray(U @ joint).T).T)
    arm = partial_trace(DensityMatrix(joint, (N, N), check_positive=False), 0)
    sampler = _Sampler.of(arm.elems, theta)
    # G[(i,j),(a,b)] = joint[(i,a),(j,b)]
    G = joint.reshape(N, N, N, N).transpose(0, 2, 1, 3).reshape(N * N, N * N)

    if forced_outcomes is not None:
        forced = np.broadcast_to(np.asarray(forced_outcomes, dtype=float), (n_shots,))
    probe_phases = None if probe_phases is None else np.asarray(probe_phases, dtype=float) % (2 * np.pi)
    probe_xs = np.linspace(-12.0, 12.0, 601)
    probe_basis = {}

    records: list[TrajectoryRecord] = []
    total = np.zeros((N, N), dtype=complex)
    for start in range(0, n_shots, batch):
        ks = range(start, min(n_shots, start + batch))
        rngs = [_shot_rng(seed, k) for k in ks]
        if forced_outcomes is not None:
            outcomes = forced[start:start + len(rngs)].copy()
        else:
            outcomes = np.array([sampler.draw(r.random()) for r in rngs])
        conds, dens = _project_batch(G, outcomes, theta, N)
        for j, k in enumerate(ks):
            # An outcome in a vanishing-probability region: redraw from the same stream.
            while dens[j] < 1e-300 and forced_outcomes is None:
                outcomes[j] = sampler.draw(rngs[j].random())
                c, d = _project_batch(G, outcomes[j:j + 1], theta, N)
                conds[j], dens[j] = c[0], d[0]
            D = quadrature_shift(-g * outcomes[j], theta, N)
            out = D @ conds[j] @ D.conj().T
            # Positive by construction (projection of a positive operator).
            state = DensityMatrix.from_unnormalized(
                out / dens[j], max_deficit=shot_deficit_tol, prior_tail=anc.tail_weight,
                check_positive=False,
            )
            total += state.elems
            probe_t = probe_x = None
            if probe_phases is not None:
                probe_t = float(probe_phases[k % probe_phases.size])
                if probe_t not in probe_basis:
                    probe_basis[probe_t] = quadrature_eigenvectors(probe_t, probe_xs, N)
                probe_x = _Sampler.of(state.elems, probe_t, probe_xs, probe_basis[probe_t]).draw(
                    rngs[j].random()
                )
            records.append(TrajectoryRecord(
                float(outcomes[j]), state if keep_states else None, float(dens[j]), probe_t, probe_x
            ))
    avg = DensityMatrix.from_unnormalized(total / n_shots, max_deficit=1.0)
    return records, avg


def _project_batch(G: np.ndarray, outcomes: np.ndarray, theta: float, N: int):
    V = quadrature_eigenvectors(theta, outcomes, N)          # <a|m, theta>
    X = (V.conj()[:, None, :] * V[None, :, :]).reshape(N * N, -1)
    C = (G @ X).T.reshape(-1, N, N)
    C = 0.5 * (C + C.conj().transpose(0, 2, 1))
    dens = np.trace(C, axis1=1, axis2=2).real.copy()
    return C, dens


def homodyne_project(joint, mode: int, theta: float, x: float, support: float = 40.0):
    """Apply <x, theta| to ``mode`` of a two-mode state.

    Returns the unnormalized conditional state of the other mode (a vector for
    a Ket, a matrix otherwise) and the outcome probability density.
    """
    if abs(x) > support:
        raise ValueError(f"outcome {x} outside quadrature support +-{support}")
    if len(joint.dims) != 2:
        raise DimensionError("homodyne_project needs a two-mode state")
    d0, d1 = joint.dims
    v = quadrature_eigenvectors(theta, [x], joint.dims[mode])[:, 0].conj()   # <x,theta|n>
    if isinstance(joint, Ket):
        psi = joint.amps.reshape(d0, d1)
        cond = psi @ v if mode == 1 else v @ psi
        return cond, float(np.vdot(cond, cond).real)
    r = joint.elems.reshape(d0, d1, d0, d1)
    if mode == 1:
        cond = np.einsum("a,iajb,b->ij", v, r, v.conj())
    else:
        cond = np.einsum("a,aibj,b->ij", v, r, v.conj())
    return cond, float(np.trace(cond).real)
