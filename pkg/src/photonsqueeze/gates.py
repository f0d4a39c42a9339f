"""Gaussian unitaries, loss, photon subtraction and the experiment's input states."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from .fock import (
    MAX_SILENT_DEFICIT,
    CutoffError,
    DensityMatrix,
    Ket,
    ModeOperator,
    StateError,
    annihilation,
    as_dm,
    embed,
    make_fock,
    thermal_populations,
    truncate,
)

# Unitaries are exponentiated on an enlarged space and projected back, so that
# the cutoff edge does not feed back into the low-lying block.
PAD_FACTOR = 2


def db_to_variance(db: float) -> float:
    """Quadrature variance for a noise level in dB relative to shot noise (1/2)."""
    return 0.5 * 10.0 ** (db / 10.0)


def variance_to_db(v: float) -> float:
    return 10.0 * np.log10(v / 0.5)


@dataclass(frozen=True)
class LossBudget:
    """Imperfections of the heralded single photon.

    ``eta_unattributed`` absorbs whatever part of the measured single-photon
    deficit the itemized contributions do not explain (1 means none).
    """

    eta_detection: float = 1.0
    eta_propagation: float = 1.0
    dark_fraction: float = 0.0
    multiphoton_fraction: float = 0.0
    eta_unattributed: float = 1.0

    def __post_init__(self):
        for name in ("eta_detection", "eta_propagation", "dark_fraction",
                     "multiphoton_fraction", "eta_unattributed"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.dark_fraction + self.multiphoton_fraction >= 1.0:
            raise ValueError("dark_fraction + multiphoton_fraction must be < 1")

    @property
    def efficiency(self) -> float:
        return self.eta_detection * self.eta_propagation * self.eta_unattributed

    @classmethod
    def ideal(cls) -> "LossBudget":
        return cls()

    @classmethod
    def paper(cls, single_photon_fraction: float = 0.84) -> "LossBudget":
        """7% detection, 4% propagation, 1% false heralds, 2% two-photon.

        These items alone leave a 0.866 single-photon weight; the remaining
        gap to ``single_photon_fraction`` is assigned to unattributed loss.
        """
        base = cls(0.93, 0.96, 0.01, 0.02)
        itemized = base.efficiency * (1 - base.dark_fraction - base.multiphoton_fraction)
        return cls(0.93, 0.96, 0.01, 0.02, single_photon_fraction / itemized)


@dataclass(frozen=True)
class AncillaModel:
    """Gaussian ancilla, shot-noise units (vacuum = 1/2).

    ``orientation`` names the squeezed quadrature: ``"p"`` for the ancilla of a
    positive squeezing parameter, ``"x"`` for a negative one.
    """

    squeezed_variance: float
    antisqueezed_variance: float
    orientation: str = "p"

    def __post_init__(self):
        if self.orientation not in ("x", "p"):
            raise ValueError(f"orientation must be 'x' or 'p', got {self.orientation!r}")
        if not self.squeezed_variance <= 0.5 <= self.antisqueezed_variance:
            raise ValueError("need squeezed_variance <= 1/2 <= antisqueezed_variance")
        if self.squeezed_variance * self.antisqueezed_variance < 0.25 * (1 - 1e-12):
            raise ValueError("ancilla variances violate the uncertainty relation")

    @classmethod
    def from_db(cls, squeezing_db: float, antisqueezing_db: float, orientation: str = "p"):
        return cls(db_to_variance(squeezing_db), db_to_variance(antisqueezing_db), orientation)

    @classmethod
    def pure(cls, squeezed_variance: float, orientation: str = "p") -> "AncillaModel":
        return cls(squeezed_variance, 0.25 / squeezed_variance, orientation)

    @classmethod
    def paper(cls, orientation: str = "p") -> "AncillaModel":
        return cls.from_db(-6.8, 10.3, orientation)

    def oriented(self, orientation: str) -> "AncillaModel":
        return AncillaModel(self.squeezed_variance, self.antisqueezed_variance, orientation)

    @property
    def purity(self) -> float:
        return 0.5 / np.sqrt(self.squeezed_variance * self.antisqueezed_variance)


# ---------------------------------------------------------------- unitaries


def _padded_ladder(N: int) -> np.ndarray:
    return annihilation(PAD_FACTOR * N).elems


def _squeeze_full(gamma: complex, M: int) -> np.ndarray:
    a = annihilation(M).elems
    gen = 0.5 * (gamma * (a.T @ a.T) - np.conj(gamma) * (a @ a))
    return expm(gen)


def squeeze_unitary(gamma: complex, N: int) -> ModeOperator:
    """S(gamma) = exp[(gamma a^dag^2 - gamma^* a^2) / 2], real gamma > 0 stretches x."""
    return ModeOperator(_squeeze_full(gamma, PAD_FACTOR * N)[:N, :N], "squeeze")


def displace(alpha: complex, N: int) -> ModeOperator:
    a = _padded_ladder(N)
    return ModeOperator(expm(alpha * a.T - np.conj(alpha) * a)[:N, :N], "displace")


def rotate(theta: float, N: int) -> ModeOperator:
    """exp(-i theta n); conjugation maps x to x(theta)."""
    return ModeOperator(np.diag(np.exp(-1j * theta * np.arange(N))), "rotate")


@lru_cache(maxsize=32)
def _quadrature_eig(theta: float, M: int):
    a = annihilation(M).elems * np.exp(-1j * theta)
    q = (a + a.conj().T) / np.sqrt(2)
    return np.linalg.eigh(q)


def quadrature_shift(d: float, theta: float, N: int) -> np.ndarray:
    """exp(-i d p(theta)): translates the quadrature x(theta) by ``d``.

    Uses a cached eigendecomposition on a padded space, so repeated calls
    (one per Monte-Carlo shot) cost a single matrix product.
    """
    vals, vecs = _quadrature_eig(float(theta + np.pi / 2), PAD_FACTOR * N)
    top = vecs[:N]
    return (top * np.exp(-1j * d * vals)) @ top.conj().T


def apply_unitary(state, U, max_deficit: float = MAX_SILENT_DEFICIT):
    u = U.elems if isinstance(U, ModeOperator) else np.asarray(U)
    if isinstance(state, Ket):
        return Ket.from_unnormalized(u @ state.amps, state.dims, max_deficit, state.tail_weight)
    return DensityMatrix.from_unnormalized(
        u @ state.elems @ u.conj().T, state.dims, max_deficit, state.tail_weight
    )


def squeeze(state, gamma: complex, max_deficit: float = MAX_SILENT_DEFICIT):
    """Apply S(gamma) with a truncation check on the output."""
    N = state.dim
    big = embed(state, PAD_FACTOR * N)
    out = apply_unitary(big, _squeeze_full(gamma, PAD_FACTOR * N), max_deficit=1.0)
    return truncate(out, N, max_deficit)


@lru_cache(maxsize=512)
def beam_splitter_block(T: float, n: int) -> np.ndarray:
    """Beam splitter restricted to total photon number ``n``.

    Entry [j, k] is <j, n-j|U|k, n-k>, i.e. indices count photons in the first mode.
    """
    if not 0.0 < T < 1.0:
        raise ValueError(f"transmittance {T} outside (0, 1)")
    angle = np.arccos(np.sqrt(T))
    k = np.arange(n + 1)
    gen = np.zeros((n + 1, n + 1))
    up = np.sqrt((k[:-1] + 1) * (n - k[:-1]))
    gen[k[1:], k[:-1]] = angle * up
    gen[k[:-1], k[1:]] = -angle * up
    block = expm(gen)
    block.setflags(write=False)
    return block


def beam_splitter(T: float, N: int) -> ModeOperator:
    """Two-mode unitary with a -> sqrt(T) a + sqrt(1-T) b, b -> -sqrt(1-T) a + sqrt(T) b.

    Built block by block in total photon number, so every block is exact and
    only states with a mode at or above ``N`` are discarded.
    """
    if not 0.0 < T < 1.0:
        raise ValueError(f"transmittance {T} outside (0, 1)")
    U = np.zeros((N * N, N * N))
    for n in range(2 * N - 1):
        k = np.arange(n + 1)
        block = beam_splitter_block(float(T), n)
        keep = (k < N) & (n - k < N)
        idx = k[keep] * N + (n - k[keep])
        U[np.ix_(idx, idx)] = block[np.ix_(keep, keep)]
    return ModeOperator(U, "beam_splitter", (N, N))


# ---------------------------------------------------------------- channels


def _log_binom(n, k):
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def loss_channel(rho, eta: float) -> DensityMatrix:
    """Pure loss: mixing with vacuum at a beam splitter of transmittance ``eta``."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"efficiency {eta} outside [0, 1]")
    m = as_dm(rho).elems
    N = m.shape[0]
    n = np.arange(N, dtype=float)
    out = np.zeros_like(m)
    for k in range(N):
        rows = n[: N - k]
        if eta == 0.0:
            amp = (rows == 0).astype(float)
        else:
            amp = np.exp(0.5 * _log_binom(rows + k, k) + 0.5 * rows * np.log(eta))
        weight = (1.0 - eta) ** k
        if weight == 0.0:
            continue
        out[: N - k, : N - k] += weight * np.outer(amp, amp) * m[k:, k:]
    return DensityMatrix.from_unnormalized(out, prior_tail=as_dm(rho).tail_weight, max_deficit=1e-10)


def loss_adjoint(op: np.ndarray, eta: float) -> np.ndarray:
    """Heisenberg-picture loss map, used to smear detector POVM elements."""
    N = op.shape[0]
    n = np.arange(N, dtype=float)
    out = np.zeros_like(op, dtype=complex)
    for k in range(N):
        rows = n[: N - k]
        if eta == 0.0:
            amp = (rows == 0).astype(float)
        else:
            amp = np.exp(0.5 * _log_binom(rows + k, k) + 0.5 * rows * np.log(eta))
        weight = (1.0 - eta) ** k
        if weight == 0.0:
            continue
        out[k:, k:] += weight * np.outer(amp, amp) * op[: N - k, : N - k]
    return out


def photon_subtract(rho):
    """Returns (a rho a^dag / p, p) with p = Tr(a rho a^dag)."""
    r = as_dm(rho)
    a = annihilation(r.dim).elems
    m = a @ r.elems @ a.T
    p = float(np.trace(m).real)
    if p <= 1e-14:
        raise StateError("photon subtraction from the vacuum has zero probability")
    return DensityMatrix(m / p, tail_weight=r.tail_weight, check_positive=False), p


def prepare_experimental_photon(budget: LossBudget, N: int) -> DensityMatrix:
    """Lossy heralded photon: loss first, then false-herald and two-photon admixture."""
    if N < 3:
        raise CutoffError("the two-photon admixture needs a cutoff of at least 3")
    lossy = loss_channel(make_fock(1, N), budget.efficiency).elems
    vac = make_fock(0, N).dm().elems
    two = make_fock(2, N).dm().elems
    good = 1.0 - budget.dark_fraction - budget.multiphoton_fraction
    m = good * lossy + budget.dark_fraction * vac + budget.multiphoton_fraction * two
    return DensityMatrix.from_unnormalized(m)


def prepare_squeezed_thermal(model: AncillaModel, N: int, tail_tol: float = MAX_SILENT_DEFICIT) -> DensityMatrix:
    """Squeezed thermal state with the model's quadrature variances."""
    vth = np.sqrt(model.squeezed_variance * model.antisqueezed_variance)
    nbar = vth - 0.5
    r = 0.5 * np.log(model.antisqueezed_variance / vth)
    gamma = r if model.orientation == "p" else -r
    M = 3 * N
    S = _squeeze_full(gamma, M)
    big = (S * thermal_populations(nbar, M)) @ S.T
    return DensityMatrix.from_unnormalized(big[:N, :N], max_deficit=tail_tol)


def subtracted_squeezed_vacuum(r: float, N: int) -> DensityMatrix:
    """a S(r)|0>, the photon-subtraction route to an odd superposition."""
    vac = squeeze(make_fock(0, N), r)
    return photon_subtract(vac)[0]
