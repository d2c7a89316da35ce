"""Fourier-shear duality between the phase-indexed chain family and the
long-range dual family, plus dual-side localization diagnostics.

Grid conventions for the transform: fields live on (x_j = j/Mx, n = -Nn..Nn)
and map to (theta_i = i/Mn, m = -Nd..Nd) with Mx = 2*Nd+1 and the theta-grid
size equal to the site count Mn.  The shear theta -> theta + m*alpha is
evaluated exactly from the Fourier coefficients of a band-limited field, so
the transform is unitary to rounding even for incommensurate alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .dynamics import EnergyWindowSet
from .errors import ConfigurationError, HorizonError
from .model import Frequency, Potential, Window, build_dual, build_schrodinger


def _check_field(field_xn: np.ndarray) -> tuple[int, int]:
    if field_xn.ndim != 2:
        raise ConfigurationError("field must be 2-d: (x grid, site)")
    mx, mn = field_xn.shape
    if mx % 2 == 0 or mn % 2 == 0:
        raise ConfigurationError(
            f"grid sizes must be odd (symmetric windows), got {field_xn.shape}"
        )
    return mx, mn


def _mode_order(m_count: int) -> np.ndarray:
    """DFT bin -> signed mode, ascending order -N..N."""
    half = m_count // 2
    return np.arange(-half, half + 1)


def duality_transform(field_xn: np.ndarray, alpha: Frequency) -> np.ndarray:
    """Apply the duality operator to a sampled field.

    The kernel is e^{2 pi i (n (theta + m alpha) + m x)}: a double Fourier
    transform with the shear theta -> theta + m alpha evaluated exactly from
    the band-limited coefficients.  This sign pattern is the one under which
    the chain family conjugates fiberwise to the long-range family with
    diagonal 2 cos(2 pi (m alpha + theta)).  Input (Mx, Mn), output (Mn, Mx).
    """
    if alpha.dim != 1:
        raise ConfigurationError("sampled duality transform implemented for one phase dimension")
    mx, mn = _check_field(np.asarray(field_xn))
    field_xn = np.asarray(field_xn, dtype=np.complex128)
    modes_m = _mode_order(mx)
    n_off = _mode_order(mn)
    # x integral against e^{+2 pi i m x} -> coefficients c[m, n], m ascending
    c = np.fft.ifft(field_xn, axis=0)
    c = np.concatenate([c[-(mx // 2):], c[: mx // 2 + 1]], axis=0)
    # shear phase is diagonal in (m, n): e^{2 pi i n m alpha}
    shear = np.exp(2j * np.pi * np.outer(modes_m * alpha.alpha[0], n_off))
    b = c * shear
    theta = np.arange(mn) / mn
    waves = np.exp(2j * np.pi * np.outer(theta, n_off))
    return waves @ b.T


def duality_transform_inverse(field_tm: np.ndarray, alpha: Frequency) -> np.ndarray:
    """Exact inverse of `duality_transform`; input (Mn, Mx), output (Mx, Mn)."""
    if alpha.dim != 1:
        raise ConfigurationError("sampled duality transform implemented for one phase dimension")
    mt, md = _check_field(np.asarray(field_tm))
    field_tm = np.asarray(field_tm, dtype=np.complex128)
    modes_m = _mode_order(md)
    n_off = _mode_order(mt)
    # theta average -> coefficients over n, then undo the shear phase
    ctn = np.fft.fft(field_tm, axis=0) / mt
    ctn = np.concatenate([ctn[-(mt // 2):], ctn[: mt // 2 + 1]], axis=0)  # (n, m)
    shear = np.exp(-2j * np.pi * np.outer(n_off, modes_m * alpha.alpha[0]))
    c = ctn * shear
    x = np.arange(md) / md
    waves = np.exp(2j * np.pi * np.outer(x, modes_m))
    return waves @ c.T


def double_fourier(field_xn: np.ndarray) -> np.ndarray:
    """Plain double Fourier transform without the shear, output (theta, m)."""
    mx, mn = _check_field(np.asarray(field_xn))
    field_xn = np.asarray(field_xn, dtype=np.complex128)
    c = np.fft.fft(field_xn, axis=0) / mx
    c = np.concatenate([c[-(mx // 2):], c[: mx // 2 + 1]], axis=0)
    theta = np.arange(mn) / mn
    waves = np.exp(2j * np.pi * np.outer(theta, _mode_order(mn)))
    return waves @ c.T


def field_norm(field: np.ndarray) -> float:
    """Direct-integral norm: mean over the continuous grid, sum over sites."""
    return float(np.sqrt(np.mean(np.sum(np.abs(field) ** 2, axis=1))))


def dual_current(theta: float, window: Window, alpha: Frequency) -> np.ndarray:
    """Diagonal dual current 2 sin(2 pi (m . alpha + theta)) on the window."""
    sites = window.sites(alpha.dim)
    return np.diag(2.0 * np.sin(2.0 * np.pi * ((sites @ alpha.alpha) + theta)))


@dataclass
class DualSpectrum:
    """Per-theta eigenpairs of the truncated dual operator restricted to K."""

    thetas: np.ndarray
    energies: list                      # per theta, ascending, within K
    vectors: list                       # per theta, (size, count) columns
    window: Window
    lattice_dim: int
    potential: Potential = None
    alpha: Frequency = None
    K: EnergyWindowSet = None

    @property
    def sites(self) -> np.ndarray:
        return self.window.sites(self.lattice_dim)


def dual_spectrum(potential: Potential, alpha: Frequency, K: EnergyWindowSet,
                  window: Window, theta_count: int = 64) -> DualSpectrum:
    """Diagonalize the dual family on an offset theta grid and keep the
    eigenpairs with eigenvalues in K."""
    thetas = (np.arange(theta_count) + 0.5) / theta_count
    energies, vectors = [], []
    for th in thetas:
        op = build_dual(potential, alpha, float(th), window)
        evals, evecs = scipy.linalg.eigh(op.dense)
        sel = K.contains(evals)
        energies.append(evals[sel])
        vectors.append(evecs[:, sel])
    return DualSpectrum(thetas=thetas, energies=energies, vectors=vectors,
                        window=window, lattice_dim=potential.dim,
                        potential=potential, alpha=alpha, K=K)


def covariance_check(spectrum: DualSpectrum, ell, boundary_tol: float = 1e-8,
                     max_states: int = 8) -> float:
    """Max residual of the translated-eigenvector identity.

    For each sampled eigenpair (E, psi) of the dual operator at theta, the
    shifted vector (T^l psi)(n) = psi(n + l) must solve the eigenvalue
    problem at theta + l . alpha.  The residual is measured on interior rows
    only; an eigenvector carrying more than `boundary_tol` mass within the
    shift distance of the wall raises HorizonError.
    """
    d = spectrum.lattice_dim
    ell = np.atleast_1d(np.asarray(ell, dtype=np.int64))
    if len(ell) != d:
        raise ConfigurationError(f"shift has dimension {len(ell)}, expected {d}")
    sites = spectrum.sites
    radius = spectrum.window.radius
    hop = spectrum.potential.support_radius
    shift_pad = int(np.abs(ell).max())
    interior = np.all(np.abs(sites) <= radius - hop - shift_pad, axis=1)
    worst = 0.0
    for th, evals, evecs in zip(spectrum.thetas, spectrum.energies, spectrum.vectors):
        if len(evals) == 0:
            continue
        th_shift = float((th + ell @ spectrum.alpha.alpha) % 1.0)
        op = build_dual(spectrum.potential, spectrum.alpha, th_shift, spectrum.window)
        for k in range(min(len(evals), max_states)):
            psi = evecs[:, k]
            edge = np.any(np.abs(sites) > radius - shift_pad, axis=1)
            if float(np.sum(psi[edge] ** 2)) > boundary_tol:
                raise HorizonError(
                    f"shift {tuple(ell)} pushes eigenvector support into the boundary"
                )
            shifted = _translate(psi, sites, ell, radius, d)
            resid = op.dense @ shifted - evals[k] * shifted
            worst = max(worst, float(np.linalg.norm(resid[interior])))
    return worst


def _translate(psi: np.ndarray, sites: np.ndarray, ell: np.ndarray,
               radius: int, d: int) -> np.ndarray:
    """(T^l psi)(n) = psi(n + l) with zeros where n + l leaves the window."""
    out = np.zeros_like(psi)
    target = sites + ell[None, :]
    ok = np.all(np.abs(target) <= radius, axis=1)
    if d == 1:
        idx = target[ok, 0] + radius
    else:
        width = 2 * radius + 1
        idx = (target[ok, 0] + radius) * width + (target[ok, 1] + radius)
    out[ok] = psi[idx]
    return out


@dataclass
class LocalizationProfile:
    """Phase-averaged dynamical profile h(p) and its decay fits."""

    offsets: np.ndarray
    values: np.ndarray
    times: tuple
    theta_count: int
    exp_rate: float = math.nan
    exp_prefactor: float = math.nan
    exp_residual: float = math.nan
    power_exponent: float = math.nan
    power_prefactor: float = math.nan
    power_residual: float = math.nan


def localization_profile(potential: Potential, alpha: Frequency, K: EnergyWindowSet,
                         window: Window, theta_count: int = 64,
                         t_samples=(5.0, 10.0, 20.0, 50.0),
                         floor: float = 1e-13) -> LocalizationProfile:
    """h(p) = max over sampled times of the theta-average of
    |<delta_p, 1_K(L_theta) e^{-i t L_theta} delta_0>|, with exponential and
    power-law least-squares fits of the decay reported side by side."""
    if theta_count < 64:
        raise ConfigurationError("theta_count must be >= 64")
    spect = dual_spectrum(potential, alpha, K, window, theta_count)
    d = potential.dim
    size = window.size(d)
    center = (size - 1) // 2
    acc = np.zeros((len(t_samples), size))
    for evals, evecs in zip(spect.energies, spect.vectors):
        if len(evals) == 0:
            continue
        w0 = evecs[center, :]
        for it, t in enumerate(t_samples):
            amp = evecs @ (np.exp(-1j * t * evals) * w0)
            acc[it] += np.abs(amp)
    acc /= theta_count
    values = acc.max(axis=0)
    offsets = spect.sites[:, 0] if d == 1 else np.abs(spect.sites).max(axis=1)
    prof = LocalizationProfile(offsets=offsets, values=values,
                               times=tuple(t_samples), theta_count=theta_count)
    _fit_decay(prof, floor)
    return prof


def _fit_decay(prof: LocalizationProfile, floor: float) -> None:
    p = np.abs(prof.offsets)
    h = prof.values
    mask = (p >= 1) & (h > floor)
    if mask.sum() < 4:
        return
    lp, lh = p[mask], np.log(h[mask])
    a = np.vstack([np.ones_like(lp), -lp]).T
    coef, *_ = np.linalg.lstsq(a, lh, rcond=None)
    resid = lh - a @ coef
    prof.exp_prefactor = float(np.exp(coef[0]))
    prof.exp_rate = float(coef[1])
    prof.exp_residual = float(np.sqrt(np.mean(resid**2)))
    a2 = np.vstack([np.ones_like(lp), -np.log1p(lp)]).T
    coef2, *_ = np.linalg.lstsq(a2, lh, rcond=None)
    resid2 = lh - a2 @ coef2
    prof.power_prefactor = float(np.exp(coef2[0]))
    prof.power_exponent = float(coef2[1])
    prof.power_residual = float(np.sqrt(np.mean(resid2**2)))


def psi_star(psi: np.ndarray) -> np.ndarray:
    """Absolute autocorrelation psi_*(p) = sum_m |psi(m) psi(m+p)|.

    Output indexed by p = -(L-1)..L-1 for input length L; symmetric in p.
    """
    a = np.abs(np.asarray(psi, dtype=np.float64)).ravel()
    return np.correlate(a, a, mode="full")


def sobolev_localization_functional(spectrum: DualSpectrum, s: float) -> float:
    """Finite-grid weighted autocorrelation functional
    sum_p (1+|p|)^{2s} mean over sampled eigenvectors of |psi_*(p)|^2."""
    if spectrum.lattice_dim != 1:
        raise ConfigurationError("functional implemented for one lattice dimension")
    size = spectrum.window.size(1)
    acc = np.zeros(2 * size - 1)
    count = 0
    for evecs in spectrum.vectors:
        for k in range(evecs.shape[1]):
            acc += psi_star(evecs[:, k]) ** 2
            count += 1
    if count == 0:
        return 0.0
    acc /= count
    p = np.arange(-(size - 1), size)
    weights = (1.0 + np.abs(p)) ** (2.0 * s)
    return float(weights @ acc)


def _probe_states(window: Window, count_axis: int = 3) -> list:
    """Bulk-localized dual-side probes: Gaussian in m, plane wave in theta.

    Bulk microsupport in both window variables is what makes the finite
    truncations comparable; wall artifacts are not part of the contract.
    """
    n = window.radius
    m_size = window.size(1)
    theta_size = m_size
    m = window.offsets()
    theta_idx = np.arange(theta_size)
    probes = []
    centers = np.linspace(-n // 4, n // 4, count_axis).astype(int)
    widthm = max(2.0, n / 8.0)
    for m0 in centers:
        for n0 in centers:
            envelope = np.exp(-((m - m0) ** 2) / (2.0 * widthm**2))
            wave = np.exp(2j * np.pi * n0 * theta_idx / theta_size)
            psi = wave[:, None] * envelope[None, :]
            probes.append(psi / field_norm(psi))
    return probes


def hamiltonian_duality_defect(potential: Potential, alpha: Frequency,
                               window: Window) -> float:
    """Defect of the operator identity between the two families on matched
    grids: max over bulk probes of ||(U H U^{-1} - L) psi|| / ||psi||."""
    if potential.dim != 1:
        raise ConfigurationError("defect probe implemented for one phase dimension")
    m_size = window.size(1)
    x = np.arange(m_size) / m_size
    n = window.offsets()
    vgrid = potential.value(((x[:, None] + n[None, :] * alpha.alpha[0]) % 1.0))
    thetas = np.arange(m_size) / m_size
    sites = window.offsets()
    cosdiag = 2.0 * np.cos(2.0 * np.pi * (sites[None, :] * alpha.alpha[0] + thetas[:, None]))
    modes, amps = potential.mode_arrays()
    worst = 0.0
    for psi in _probe_states(window):
        phi = duality_transform_inverse(psi, alpha)
        hphi = np.zeros_like(phi)
        hphi[:, :-1] += phi[:, 1:]
        hphi[:, 1:] += phi[:, :-1]
        hphi += vgrid * phi
        lhs = duality_transform(hphi, alpha)
        rhs = cosdiag * psi
        for mode, amp in zip(modes, amps):
            k = int(mode[0])
            hop = float(np.real(amp))
            if k == 0:
                rhs += hop * psi
            elif k > 0:
                rhs[:, k:] += hop * psi[:, :-k]
            else:
                rhs[:, :k] += hop * psi[:, -k:]
        worst = max(worst, field_norm(lhs - rhs))
    return worst


def ensemble_spectra_hausdorff(potential: Potential, alpha: Frequency,
                               window: Window, samples: int = 32) -> float:
    """Hausdorff distance between the pooled eigenvalue sets of the direct
    and dual truncated ensembles."""
    direct = []
    for j in range(samples):
        x = np.full(alpha.dim, (j + 0.5) / samples)
        op = build_schrodinger(potential, alpha, x, window)
        direct.append(scipy.linalg.eigh_tridiagonal(op.diagonal, op.offdiagonal,
                                                    eigvals_only=True))
    dual = []
    for j in range(samples):
        th = (j + 0.5) / samples
        op = build_dual(potential, alpha, th, window)
        dual.append(np.linalg.eigvalsh(op.dense))
    a = np.sort(np.concatenate(direct))
    b = np.sort(np.concatenate(dual))
    return max(_directed_hausdorff(a, b), _directed_hausdorff(b, a))


def _directed_hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    idx = np.clip(np.searchsorted(b, a), 1, len(b) - 1)
    nearest = np.minimum(np.abs(a - b[idx - 1]), np.abs(a - b[idx]))
    return float(nearest.max())
