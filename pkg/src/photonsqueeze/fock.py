"""Truncated Fock-space states and single-mode operators.

Conventions used throughout the package::

    x = (a + a^dag) / sqrt(2),   p = (a - a^dag) / (i sqrt(2)),   [x, p] = i

so the vacuum has quadrature variance 1/2 along every direction, and
``x(theta) = cos(theta) x + sin(theta) p`` is the Hermitian part of
``a exp(-i theta)``.  Wigner functions are normalized to unit integral over
``dx dp``.

Two-mode states are stored with the first mode as the slow index:
``|n1, n2> -> n1 * N2 + n2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

VACUUM_VARIANCE = 0.5

NORM_TOL = 1e-9
HERMITIAN_TOL = 1e-9
POSITIVITY_TOL = 1e-8
# Renormalizing a truncated state silently is allowed only below this deficit.
MAX_SILENT_DEFICIT = 1e-6
# Eigenvalue check is O(d^3); joint states above this size are checked on demand.
_AUTO_PSD_MAX_DIM = 400


class CutoffError(ValueError):
    """A state or operator does not fit inside the chosen Fock cutoff."""


class DimensionError(ValueError):
    """Incompatible Hilbert-space dimensions."""


class StateError(ValueError):
    """A state violates its physical invariants."""


@dataclass(frozen=True, eq=False)
class Ket:
    """Normalized pure state; ``tail_weight`` is the norm lost to truncation."""

    amps: np.ndarray
    dims: tuple[int, ...] = ()
    tail_weight: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)
        if not self.dims:
            object.__setattr__(self, "dims", (amps.size,))
        if int(np.prod(self.dims)) != amps.size:
            raise DimensionError(f"dims {self.dims} do not match {amps.size} amplitudes")
        if min(self.dims) < 2:
            raise StateError("cutoff dimension must be at least 2")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise StateError(f"ket norm {norm!r} differs from 1")

    @property
    def dim(self) -> int:
        return self.amps.size

    @classmethod
    def from_unnormalized(cls, amps, dims=(), max_deficit=MAX_SILENT_DEFICIT, prior_tail=0.0):
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        norm = float(np.vdot(amps, amps).real)
        if norm <= 0:
            raise StateError("zero vector cannot be normalized")
        deficit = max(0.0, 1.0 - norm) + prior_tail
        if deficit > max_deficit:
            raise CutoffError(f"truncated weight {deficit:.3g} exceeds {max_deficit:.3g}")
        return cls(amps / np.sqrt(norm), dims, deficit)

    def dm(self) -> "DensityMatrix":
        return ket_to_dm(self)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Unit-trace Hermitian positive operator on a truncated Fock space."""

    elems: np.ndarray
    dims: tuple[int, ...] = ()
    tail_weight: float = 0.0
    check_positive: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = np.array(self.elems, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        if not self.dims:
            object.__setattr__(self, "dims", (m.shape[0],))
        if int(np.prod(self.dims)) != m.shape[0]:
            raise DimensionError(f"dims {self.dims} do not match size {m.shape[0]}")
        if min(self.dims) < 2:
            raise StateError("cutoff dimension must be at least 2")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise StateError("density matrix is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > NORM_TOL:
            raise StateError(f"trace {tr!r} differs from 1")
        m.setflags(write=False)
        object.__setattr__(self, "elems", m)
        if self.check_positive and m.shape[0] <= _AUTO_PSD_MAX_DIM:
            self.validate()

    @property
    def dim(self) -> int:
        return self.elems.shape[0]

    def validate(self) -> "DensityMatrix":
        lo = float(np.linalg.eigvalsh(self.elems)[0])
        if lo < -POSITIVITY_TOL:
            raise StateError(f"density matrix has eigenvalue {lo:.3g}")
        return self

    @classmethod
    def from_unnormalized(cls, m, dims=(), max_deficit=MAX_SILENT_DEFICIT, prior_tail=0.0,
                          check_positive=True):
        """Hermitize and renormalize ``m``; the lost trace is recorded as tail weight."""
        m = np.asarray(m, dtype=complex)
        m = 0.5 * (m + m.conj().T)
        tr = float(np.trace(m).real)
        if tr <= 0:
            raise StateError("operator has non-positive trace")
        deficit = max(0.0, 1.0 - tr) + prior_tail
        if deficit > max_deficit:
            raise CutoffError(f"truncated weight {deficit:.3g} exceeds {max_deficit:.3g}")
        return cls(m / tr, dims, deficit, check_positive)

    def populations(self) -> np.ndarray:
        return np.clip(np.diag(self.elems).real, 0.0, None)


@dataclass(frozen=True, eq=False)
class ModeOperator:
    """Dense operator on one or two truncated modes."""

    elems: np.ndarray
    kind: str = "general"
    dims: tuple[int, ...] = ()

    def __post_init__(self):
        m = np.asarray(self.elems, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator must be square, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "elems", m)
        if not self.dims:
            object.__setattr__(self, "dims", (m.shape[0],))

    @property
    def dim(self) -> int:
        return self.elems.shape[0]

    @property
    def H(self) -> "ModeOperator":
        return ModeOperator(self.elems.conj().T, self.kind, self.dims)

    def __matmul__(self, other):
        if isinstance(other, ModeOperator):
            _check_dim(self.dim, other.dim)
            return ModeOperator(self.elems @ other.elems, "general", self.dims)
        return self.elems @ other


def _check_dim(a: int, b: int):
    if a != b:
        raise DimensionError(f"dimension mismatch: {a} vs {b}")


# ---------------------------------------------------------------- operators


def annihilation(N: int) -> ModeOperator:
    return ModeOperator(np.diag(np.sqrt(np.arange(1, N, dtype=float)), 1), "annihilation")


def creation(N: int) -> ModeOperator:
    return ModeOperator(np.diag(np.sqrt(np.arange(1, N, dtype=float)), -1), "creation")


def number(N: int) -> ModeOperator:
    return ModeOperator(np.diag(np.arange(N, dtype=float)), "number")


def quadrature(theta: float, N: int) -> ModeOperator:
    """x(theta) = (a e^{-i theta} + a^dag e^{i theta}) / sqrt(2)."""
    a = annihilation(N).elems * np.exp(-1j * theta)
    return ModeOperator((a + a.conj().T) / np.sqrt(2), f"quadrature({theta!r})")


def log_sqrt_factorial(n) -> np.ndarray:
    return 0.5 * gammaln(np.asarray(n, dtype=float) + 1.0)


def hermite_functions(N: int, x, gauss_shift: float = 0.0) -> np.ndarray:
    """Harmonic-oscillator eigenfunctions psi_n(x) for n < N, shape (N, len(x)).

    With ``gauss_shift = c`` the result is ``psi_n(x) * exp(c x^2)``, which keeps
    quadrature sums with large nodes free of overflow.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((N, x.size))
    out[0] = np.pi ** -0.25 * np.exp((gauss_shift - 0.5) * x * x)
    if N > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, N - 1):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def quadrature_eigenvectors(theta: float, x, N: int) -> np.ndarray:
    """Columns are <n|x, theta> = e^{i n theta} psi_n(x)."""
    phase = np.exp(1j * theta * np.arange(N))
    return phase[:, None] * hermite_functions(N, x)


# ---------------------------------------------------------------- states


def make_fock(n: int, N: int) -> Ket:
    if not 0 <= n < N:
        raise CutoffError(f"photon number {n} outside cutoff {N}")
    amps = np.zeros(N, dtype=complex)
    amps[n] = 1.0
    return Ket(amps)


def coherent_amplitudes(alpha: complex, N: int) -> np.ndarray:
    """Untruncated-normalization coefficients e^{-|a|^2/2} a^n / sqrt(n!)."""
    n = np.arange(N)
    alpha = complex(alpha)
    if alpha == 0:
        amps = np.zeros(N, dtype=complex)
        amps[0] = 1.0
        return amps
    logmag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - log_sqrt_factorial(n)
    return np.exp(logmag) * np.exp(1j * n * np.angle(alpha))


def make_coherent(alpha: complex, N: int, tail_tol: float = 1e-8) -> Ket:
    amps = coherent_amplitudes(alpha, N)
    tail = max(0.0, 1.0 - float(np.sum(np.abs(amps) ** 2)))
    if tail > tail_tol:
        raise CutoffError(f"coherent state |{alpha}> loses weight {tail:.3g} at cutoff {N}")
    return Ket(amps / np.linalg.norm(amps), tail_weight=tail)


def make_css(alpha: complex, parity: str, N: int, tail_tol: float = 1e-8) -> Ket:
    """Normalized |alpha> - |-alpha> (odd) or |alpha> + |-alpha> (even)."""
    if parity not in ("odd", "even"):
        raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")
    if parity == "odd" and alpha == 0:
        raise StateError("odd superposition has zero norm at alpha = 0")
    amps = coherent_amplitudes(alpha, N)
    # Full-space coherent weight, used only for the truncation check.
    tail = max(0.0, 1.0 - float(np.sum(np.abs(amps) ** 2)))
    if tail > tail_tol:
        raise CutoffError(f"superposition of amplitude {alpha} loses weight {tail:.3g}")
    keep = (np.arange(N) % 2) == (1 if parity == "odd" else 0)
    # Scale by the leading kept amplitude so tiny alpha does not underflow.
    lead = np.abs(amps[keep]).max()
    amps = np.where(keep, amps / lead, 0.0)
    return Ket(amps / np.linalg.norm(amps), tail_weight=tail)


def thermal_populations(nbar: float, N: int) -> np.ndarray:
    n = np.arange(N)
    if nbar == 0:
        return (n == 0).astype(float)
    return (nbar / (1 + nbar)) ** n / (1 + nbar)


# ---------------------------------------------------------------- plumbing


def as_dm(state) -> DensityMatrix:
    return ket_to_dm(state) if isinstance(state, Ket) else state


def ket_to_dm(k: Ket) -> DensityMatrix:
    return DensityMatrix(np.outer(k.amps, k.amps.conj()), k.dims, k.tail_weight, check_positive=False)


def fidelity(rho, psi) -> float:
    """<psi|rho|psi> for a pure target; Uhlmann fidelity if both are mixed.

    Either argument may be a Ket.  The Uhlmann form is the squared convention
    (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, which reduces to <psi|rho|psi>.
    """
    if isinstance(rho, Ket) and not isinstance(psi, Ket):
        rho, psi = psi, rho
    if isinstance(psi, Ket):
        _check_dim(rho.dim, psi.dim)
        if isinstance(rho, Ket):
            return float(abs(np.vdot(psi.amps, rho.amps)) ** 2)
        return float(np.vdot(psi.amps, rho.elems @ psi.amps).real)
    _check_dim(rho.dim, psi.dim)
    for a, b in ((rho, psi), (psi, rho)):
        w, v = np.linalg.eigh(b.elems)
        if w[-1] > 1.0 - 1e-12:   # numerically pure: square roots of ~0 eigenvalues would add noise
            return float(np.vdot(v[:, -1], a.elems @ v[:, -1]).real)
    # Tr sqrt(sqrt(rho) sigma sqrt(rho)) is the nuclear norm of sqrt(rho) sqrt(sigma);
    # singular values stay accurate where eigenvalues of the product do not.
    sv = np.linalg.svd(_psd_sqrt(rho.elems) @ _psd_sqrt(psi.elems), compute_uv=False)
    return float(np.sum(sv) ** 2)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def purity(rho) -> float:
    m = as_dm(rho).elems
    return float(np.sum(np.abs(m) ** 2))


def expectation(rho, op) -> complex:
    m = as_dm(rho).elems
    o = op.elems if isinstance(op, ModeOperator) else np.asarray(op)
    _check_dim(m.shape[0], o.shape[0])
    return complex(np.sum(m * o.T))


def trace_distance(rho, sigma) -> float:
    a, b = as_dm(rho).elems, as_dm(sigma).elems
    _check_dim(a.shape[0], b.shape[0])
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))


def tensor(a, b):
    """Joint state of two single-mode states (Ket if both are Kets)."""
    if isinstance(a, Ket) and isinstance(b, Ket):
        return Ket(np.kron(a.amps, b.amps), (a.dim, b.dim), a.tail_weight + b.tail_weight)
    ra, rb = as_dm(a), as_dm(b)
    return DensityMatrix(
        np.kron(ra.elems, rb.elems), (ra.dim, rb.dim), ra.tail_weight + rb.tail_weight,
        check_positive=False,
    )


def partial_trace(joint, mode: int) -> DensityMatrix:
    """Trace out ``mode`` (0 or 1) of a two-mode state; returns the other mode."""
    if len(joint.dims) != 2:
        raise DimensionError("partial_trace needs a two-mode state")
    if mode not in (0, 1):
        raise ValueError("mode index must be 0 or 1")
    d0, d1 = joint.dims
    if isinstance(joint, Ket):
        psi = joint.amps.reshape(d0, d1)
        red = psi @ psi.conj().T if mode == 1 else psi.T @ psi.conj()
    else:
        r = joint.elems.reshape(d0, d1, d0, d1)
        red = np.einsum("ajbj->ab", r) if mode == 1 else np.einsum("jajb->ab", r)
    return DensityMatrix.from_unnormalized(red, prior_tail=joint.tail_weight, max_deficit=1.0)


def quadrature_moments(rho):
    """(mean[2], cov[2x2]) of (x, p), covariance symmetrized."""
    m = as_dm(rho).elems
    N = m.shape[0]
    a = annihilation(N).elems
    ea = np.sum(m * a.T)
    ea2 = np.sum(m * (a @ a).T)
    en = float(np.sum(np.diag(m).real * np.arange(N)))
    mean = np.array([np.sqrt(2) * ea.real, np.sqrt(2) * ea.imag])
    # <x^2> = (<a^2> + <a^dag^2> + 2<n> + 1) / 2 etc.
    xx = (2 * ea2.real + 2 * en + 1) / 2
    pp = (-2 * ea2.real + 2 * en + 1) / 2
    xp = ea2.imag  # <(xp + px)/2>
    cov = np.array([[xx, xp], [xp, pp]]) - np.outer(mean, mean)
    return mean, cov


def truncate(state, N: int, max_deficit: float = MAX_SILENT_DEFICIT):
    """Project a single-mode state onto its lowest ``N`` Fock levels."""
    if isinstance(state, Ket):
        return Ket.from_unnormalized(state.amps[:N], max_deficit=max_deficit, prior_tail=state.tail_weight)
    return DensityMatrix.from_unnormalized(
        state.elems[:N, :N], max_deficit=max_deficit, prior_tail=state.tail_weight
    )


def embed(state, N: int):
    """Zero-pad a single-mode state to a larger cutoff."""
    if N < state.dim:
        raise DimensionError("embed only enlarges the cutoff")
    if isinstance(state, Ket):
        amps = np.zeros(N, dtype=complex)
        amps[: state.dim] = state.amps
        return Ket(amps, tail_weight=state.tail_weight)
    m = np.zeros((N, N), dtype=complex)
    m[: state.dim, : state.dim] = state.elems
    return DensityMatrix(m, tail_weight=state.tail_weight, check_positive=False)


def tail_weight(state, n_top: int = 1) -> float:
    """Population in the highest ``n_top`` Fock levels (a cutoff-adequacy probe)."""
    pops = np.abs(state.amps) ** 2 if isinstance(state, Ket) else as_dm(state).populations()
    return float(np.sum(pops[-n_top:]))
