"""Quantum dynamics on the truncated lattice: eigensystems, time evolution,
position moments, the current operator, spectral projections, and the
time-averaged velocity with its infinite-time target.

Everything downstream of `diagonalize` works in the eigenbasis, so the time
average over [0, T] is evaluated in closed form through the kernel
kappa(T, w) = (e^{iTw} - 1) / (iTw) instead of quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, ResourceLimitError, SingularDensityError
from .model import LatticeOperator, Window

DIMENSION_CAP = 8192

# numerically degenerate Bohr frequencies take the resonant branch kappa = 1
_DEGENERACY_TOL = 1e-12


@dataclass
class EigenSystem:
    """Full spectral decomposition of a truncated operator.

    Eigenvalues ascend; each eigenvector's first component larger than
    1e-12 in modulus is made positive, which pins an otherwise arbitrary
    gauge and keeps runs reproducible.
    """

    energies: np.ndarray
    vectors: np.ndarray          # column j is the eigenvector of energies[j]
    window: Window
    lattice_dim: int = 1
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.energies)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    scale = np.abs(vectors).max(axis=0)
    first = np.argmax(np.abs(vectors) > 1e-12 * scale[None, :], axis=0)
    signs = np.sign(vectors[first, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs[None, :]


def diagonalize(op: LatticeOperator) -> EigenSystem:
    """Symmetric eigendecomposition with deterministic ordering and gauge."""
    if op.dim > DIMENSION_CAP:
        raise ResourceLimitError(
            f"matrix dimension {op.dim} exceeds cap {DIMENSION_CAP}"
        )
    if op.kind == "schrodinger_1d" and op.dense is None:
        energies, vectors = scipy.linalg.eigh_tridiagonal(op.diagonal, op.offdiagonal)
    else:
        energies, vectors = scipy.linalg.eigh(op.matrix)
    order = np.argsort(energies, kind="stable")
    return EigenSystem(
        energies=np.ascontiguousarray(energies[order]),
        vectors=_fix_signs(np.ascontiguousarray(vectors[:, order])),
        window=op.window, lattice_dim=op.lattice_dim, meta=dict(op.meta),
    )


def delta_state(window: Window, site: int = 0, lattice_dim: int = 1) -> np.ndarray:
    """Basis vector concentrated at a single lattice site."""
    psi = np.zeros(window.size(lattice_dim), dtype=np.complex128)
    if lattice_dim == 1:
        psi[site + window.radius] = 1.0
    else:
        sites = window.sites(lattice_dim)
        idx = np.flatnonzero(np.all(sites == np.asarray(site), axis=1))
        psi[idx[0]] = 1.0
    return psi


def evolve(sys: EigenSystem, psi0: np.ndarray, t: float) -> np.ndarray:
    """psi(t) = sum_j e^{-i t E_j} <phi_j, psi0> phi_j."""
    if not np.isfinite(t):
        raise ConfigurationError("evolution time must be finite")
    coeffs = sys.vectors.T @ np.asarray(psi0, dtype=np.complex128)
    return (sys.vectors * np.exp(-1j * t * sys.energies)[None, :]) @ coeffs


def current_operator(window: Window) -> np.ndarray:
    """Lattice current A = i(S_+ - S_-): entry (n, n+1) is i, (n, n-1) is -i.

    Hermitian with operator norm at most 2.
    """
    size = window.size(1)
    a = np.zeros((size, size), dtype=np.complex128)
    idx = np.arange(size - 1)
    a[idx, idx + 1] = 1j
    a[idx + 1, idx] = -1j
    return a


def apply_current(states: np.ndarray) -> np.ndarray:
    """A @ states without materializing A; states indexed (site, column)."""
    out = np.zeros(states.shape, dtype=np.result_type(states.dtype, np.complex128))
    out[:-1] += 1j * states[1:]
    out[1:] += -1j * states[:-1]
    return out


@dataclass(frozen=True)
class MomentResult:
    value: float
    boundary_mass: float
    horizon_ok: bool


def position_moment(sys: EigenSystem, psi0: np.ndarray, t: float, p: float) -> MomentResult:
    """sum_n |n|^p |psi(t, n)|^2 with a truncation-horizon flag.

    The flag trips when more than 1e-8 of the mass sits on the outer three
    site rings, i.e. the wavepacket reached the Dirichlet wall.
    """
    if p <= 0:
        raise ConfigurationError("moment order must be positive")
    psi_t = evolve(sys, psi0, t)
    prob = np.abs(psi_t) ** 2
    if sys.lattice_dim == 1:
        dist = np.abs(sys.window.offsets()).astype(np.float64)
    else:
        sites = sys.window.sites(sys.lattice_dim)
        dist = np.abs(sites).max(axis=1).astype(np.float64)
        weights = np.sqrt((sites**2).sum(axis=1)) ** p
    weights = dist**p if sys.lattice_dim == 1 else weights
    value = float(weights @ prob)
    edge = dist > sys.window.radius - 3
    boundary_mass = float(prob[edge].sum())
    return MomentResult(value=value, boundary_mass=boundary_mass,
                        horizon_ok=boundary_mass <= 1e-8)


@dataclass(frozen=True)
class EnergyWindowSet:
    """Finite union of disjoint closed energy intervals."""

    intervals: tuple

    def __post_init__(self):
        ivs = sorted((float(a), float(b)) for a, b in self.intervals)
        for a, b in ivs:
            if b < a:
                raise ConfigurationError(f"interval [{a}, {b}] is reversed")
        for (_, b0), (a1, _) in zip(ivs, ivs[1:]):
            if a1 <= b0:
                raise ConfigurationError("energy intervals must be pairwise disjoint")
        object.__setattr__(self, "intervals", tuple(ivs))

    @classmethod
    def single(cls, a: float, b: float) -> "EnergyWindowSet":
        return cls(intervals=((a, b),))

    @classmethod
    def empty(cls) -> "EnergyWindowSet":
        return cls(intervals=())

    def contains(self, energies: np.ndarray) -> np.ndarray:
        e = np.asarray(energies)
        mask = np.zeros(e.shape, dtype=bool)
        for a, b in self.intervals:
            mask |= (e >= a) & (e <= b)
        return mask


def spectral_projection(sys: EigenSystem, K: EnergyWindowSet) -> np.ndarray:
    """P = sum over eigenvalues in K of |phi_j><phi_j|."""
    sel = K.contains(sys.energies)
    vk = sys.vectors[:, sel]
    return vk @ vk.T


def _kappa(T: float, omega: np.ndarray) -> np.ndarray:
    """Average of e^{i t omega} over t in [0, T]."""
    out = np.ones(omega.shape, dtype=np.complex128)
    mask = np.abs(omega) >= _DEGENERACY_TOL
    w = omega[mask]
    out[mask] = (np.exp(1j * T * w) - 1.0) / (1j * T * w)
    return out


@dataclass
class VelocityEstimate:
    """Finite-time averaged velocity (1/T) int_0^T e^{itH} PAP e^{-itH} dt
    in the site basis, with hermiticity and norm diagnostics."""

    matrix: np.ndarray
    T: float
    window: Window
    diagnostics: dict = field(default_factory=dict)


def time_averaged_velocity(sys: EigenSystem, K: EnergyWindowSet, T: float) -> VelocityEstimate:
    """Closed-form time average of the K-filtered current.

    In the eigenbasis the matrix element (j, k) of PAP picks up the factor
    kappa(T, E_j - E_k); the resonant branch kappa = 1 applies on numerically
    degenerate pairs.
    """
    if T <= 0:
        raise ConfigurationError("averaging time must be positive")
    sel = K.contains(sys.energies)
    if not np.any(sel):
        z = np.zeros((sys.dim, sys.dim), dtype=np.complex128)
        return VelocityEstimate(matrix=z, T=T, window=sys.window,
                                diagnostics={"hermiticity_defect": 0.0, "rank": 0})
    vk = sys.vectors[:, sel]
    ek = sys.energies[sel]
    a_sub = vk.T @ apply_current(vk)
    omega = ek[:, None] - ek[None, :]
    m_tilde = _kappa(T, omega) * a_sub
    m = (vk @ m_tilde) @ vk.T
    herm = float(np.abs(m - m.conj().T).max())
    return VelocityEstimate(matrix=m, T=T, window=sys.window,
                            diagnostics={"hermiticity_defect": herm,
                                         "rank": int(sel.sum())})


def velocity_applied(sys: EigenSystem, K: EnergyWindowSet, T: float,
                     psi: np.ndarray) -> np.ndarray:
    """time_averaged_velocity(...) @ psi without the dense site-basis matrix."""
    sel = K.contains(sys.energies)
    if not np.any(sel):
        return np.zeros_like(np.asarray(psi, dtype=np.complex128))
    vk = sys.vectors[:, sel]
    ek = sys.energies[sel]
    a_sub = vk.T @ apply_current(vk)
    omega = ek[:, None] - ek[None, :]
    coeffs = vk.T @ np.asarray(psi, dtype=np.complex128)
    return vk @ ((_kappa(T, omega) * a_sub) @ coeffs)


def asymptotic_velocity(sys: EigenSystem, K: EnergyWindowSet, ids,
                        floor: float = 1e-4) -> np.ndarray:
    """Infinite-time velocity g_K(H) = sum_{E_j in K} phi_j phi_j^T / (pi N'(E_j)).

    N' comes from the supplied density-of-states table; a derivative below
    `floor` anywhere on K raises SingularDensityError naming the interval.
    """
    sel = K.contains(sys.energies)
    if not np.any(sel):
        return np.zeros((sys.dim, sys.dim))
    ek = sys.energies[sel]
    nprime = np.array([ids.derivative(e) for e in ek])
    bad = nprime < floor
    if np.any(bad):
        e_bad = ek[bad][0]
        for a, b in K.intervals:
            if a <= e_bad <= b:
                raise SingularDensityError(
                    f"density-of-states derivative below {floor} at E={e_bad:.6g} "
                    f"inside K-interval [{a}, {b}]"
                )
        raise SingularDensityError(f"density-of-states derivative below {floor} at E={e_bad:.6g}")
    g = 1.0 / (np.pi * nprime)
    vk = sys.vectors[:, sel]
    return (vk * g[None, :]) @ vk.T


def operator_norm_estimate(m: np.ndarray, iters: int = 60, seed: int = 7) -> float:
    """Power-iteration lower estimate of the spectral norm (converges to it)."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(m.shape[1]) + 1j * rng.standard_normal(m.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = m @ v
        w = m.conj().T @ w
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        est = np.sqrt(nw)
        v = w / nw
    return float(est)
