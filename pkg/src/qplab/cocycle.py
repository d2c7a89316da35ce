"""Transfer-matrix cocycle iteration, Lyapunov exponent, rotation number.

The long orbit loops are jitted with numba when available (they run for
10^5..10^6 steps); a pure-python fallback keeps the module importable
without it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .model import Frequency, Potential

try:
    from numba import njit
except ImportError:                      # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

# Norm extraction threshold: exact power of two keeps the rescaling lossless.
_RENORM_SCALE = 2.0**512
_RENORM_LOG = 512.0 * math.log(2.0)
# Determinant drift of a product is only resolvable while the matrix norm is
# modest (the cancellation noise floor is eps * norm^2).
_DET_CHECK_NORM = 2.0**11


def transfer_matrix(E: float, potential: Potential, x) -> np.ndarray:
    """One-step transfer matrix [[E - v(x), -1], [1, 0]]; det is exactly 1."""
    v = potential.value(x)
    return np.array([[E - v, -1.0], [1.0, 0.0]])


@dataclass
class CocycleOrbit:
    """Renormalized running product of transfer matrices.

    The true product equals exp(log_scale) * current; current stays within
    floating range via exact power-of-two extractions.
    """

    current: np.ndarray
    log_scale: float
    steps: int
    phase: np.ndarray
    max_det_dev: float = 0.0
    renorm_count: int = 0

    def norm(self) -> float:
        """Spectral norm of the renormalized 2x2 iterate."""
        return _spectral_norm_2x2(self.current)

    def log_norm(self) -> float:
        """ln of the true product norm."""
        return self.log_scale + math.log(self.norm())


def _spectral_norm_2x2(m: np.ndarray) -> float:
    s = np.abs(m).max()
    if s == 0.0:
        return 0.0
    a, b, c, d = (m / s).ravel()
    t = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = max(t * t - 4.0 * det * det, 0.0)
    return s * math.sqrt(0.5 * (t + math.sqrt(disc)))


@njit(cache=True)
def _potential_at(x, modes, amp_re, amp_im):
    acc = 0.0
    for j in range(modes.shape[0]):
        phase = 0.0
        for a in range(modes.shape[1]):
            phase += modes[j, a] * x[a]
        ang = 2.0 * math.pi * phase
        acc += amp_re[j] * math.cos(ang) - amp_im[j] * math.sin(ang)
    return acc


@njit(cache=True)
def _orbit_kernel(e, alpha, x0, modes, amp_re, amp_im, n_steps, renorm_scale,
                  renorm_log, det_check_norm):
    """Iterate the product S(x_{n-1}) ... S(x_0) with exact scale extraction.

    Returns (a, b, c, d, log_scale, max_det_dev, renorm_count, det_steps).
    Determinant drift is monitored only while entries are small enough for
    the computed det to be meaningful.
    """
    a = 1.0; b = 0.0; c = 0.0; d = 1.0
    log_scale = 0.0
    x = x0.copy()
    max_det_dev = 0.0
    renorms = 0
    det_steps = 0
    for _ in range(n_steps):
        v = _potential_at(x, modes, amp_re, amp_im)
        s11 = e - v
        na = s11 * a - c
        nb = s11 * b - d
        nc = a
        nd = b
        a, b, c, d = na, nb, nc, nd
        big = max(max(abs(a), abs(b)), max(abs(c), abs(d)))
        if big > renorm_scale:
            a /= renorm_scale; b /= renorm_scale
            c /= renorm_scale; d /= renorm_scale
            log_scale += renorm_log
            renorms += 1
        elif renorms == 0 and big < det_check_norm:
            # det of the computed product is only resolvable before any
            # extraction and while entries are small (noise floor eps*norm^2)
            dev = abs(a * d - b * c - 1.0)
            if dev > max_det_dev:
                max_det_dev = dev
            det_steps += 1
        for k in range(x.shape[0]):
            x[k] += alpha[k]
            x[k] -= math.floor(x[k])
    return a, b, c, d, log_scale, max_det_dev, renorms, det_steps


@njit(cache=True)
def _winding_kernel(e, alpha, x0, modes, amp_re, amp_im, n_steps):
    """Sign-change count of the solution sequence psi_{n+1} = (E-v) psi_n - psi_{n-1}.

    Each sign change is one crossing of the projective orbit past the marked
    axis, i.e. a half-turn of the lifted angle; zeros inherit the last sign.
    """
    psi_old = 0.0
    psi_cur = 1.0
    last_sign = 1
    crossings = 0
    x = x0.copy()
    for _ in range(n_steps):
        v = _potential_at(x, modes, amp_re, amp_im)
        psi_new = (e - v) * psi_cur - psi_old
        mag = abs(psi_new)
        if mag > 1e250:
            psi_new /= mag
            psi_cur /= mag
        if psi_new > 0.0:
            if last_sign < 0:
                crossings += 1
            last_sign = 1
        elif psi_new < 0.0:
            if last_sign > 0:
                crossings += 1
            last_sign = -1
        psi_old = psi_cur
        psi_cur = psi_new
        for k in range(x.shape[0]):
            x[k] += alpha[k]
            x[k] -= math.floor(x[k])
    return crossings


def _kernel_args(potential: Potential, alpha: Frequency, x0):
    if potential.dim != alpha.dim:
        raise ConfigurationError("potential / frequency dimension mismatch")
    x = np.atleast_1d(np.asarray(x0, dtype=np.float64)) % 1.0
    if len(x) != alpha.dim:
        raise ConfigurationError(f"phase has dimension {len(x)}, expected {alpha.dim}")
    modes, amps = potential.mode_arrays()
    return alpha.alpha.astype(np.float64), x, modes.astype(np.float64), \
        np.ascontiguousarray(amps.real), np.ascontiguousarray(amps.imag)


def iterate_orbit(E: float, potential: Potential, alpha: Frequency, x0,
                  n_steps: int) -> CocycleOrbit:
    """Run the cocycle for n_steps and return the renormalized orbit state."""
    al, x, modes, are, aim = _kernel_args(potential, alpha, x0)
    a, b, c, d, log_scale, det_dev, renorms, _ = _orbit_kernel(
        float(E), al, x.copy(), modes, are, aim, int(n_steps),
        _RENORM_SCALE, _RENORM_LOG, _DET_CHECK_NORM)
    phase = (x + n_steps * al) % 1.0
    return CocycleOrbit(current=np.array([[a, b], [c, d]]), log_scale=log_scale,
                        steps=int(n_steps), phase=phase,
                        max_det_dev=det_dev, renorm_count=renorms)


def lyapunov_exponent(E: float, potential: Potential, alpha: Frequency,
                      x0=0.0, n_steps: int = 100_000) -> float:
    """Single-orbit Lyapunov estimate (log_scale + ln ||current||) / n."""
    if n_steps < 1000:
        raise ConfigurationError("n_steps must be >= 1000")
    orbit = iterate_orbit(E, potential, alpha, x0, n_steps)
    return orbit.log_norm() / n_steps


def lyapunov_phase_averaged(E: float, potential: Potential, alpha: Frequency,
                            n_steps: int = 100_000, seeds: int = 32) -> float:
    """Average the single-orbit estimate over equidistributed phase seeds."""
    vals = []
    for j in range(seeds):
        x0 = np.full(alpha.dim, (j + 0.5) / seeds)
        vals.append(lyapunov_exponent(E, potential, alpha, x0, n_steps))
    return float(np.mean(vals))


def rotation_number(E: float, potential: Potential, alpha: Frequency,
                    x0=0.0, n_steps: int = 200_000) -> float:
    """Fibered rotation number in [0, 1/2] by projective winding.

    The lifted angle of the orbit advances by pi at every crossing of the
    marked axis (a sign change of the solution sequence), so the Birkhoff
    average of increments is crossings / (2 n); the count is already folded
    into [0, 1/2].
    """
    if n_steps < 1000:
        raise ConfigurationError("n_steps must be >= 1000")
    al, x, modes, are, aim = _kernel_args(potential, alpha, x0)
    crossings = _winding_kernel(float(E), al, x.copy(), modes, are, aim, int(n_steps))
    rho = crossings / (2.0 * n_steps)
    rho_mod = rho % 1.0
    return min(rho_mod, 1.0 - rho_mod)


def projective_winding(matrices) -> float:
    """Rotation number (in turns per step, folded to [0, 1/2]) of an explicit
    SL(2, R) matrix sequence, tracking lifted angle increments of a projective
    vector.  Test hook and generic fallback for non-Schrodinger cocycles."""
    v = np.array([1.0, 0.0])
    theta = 0.0
    total = 0.0
    n = 0
    for m in matrices:
        w = np.asarray(m) @ v
        nw = math.hypot(w[0], w[1])
        if nw == 0.0:
            raise ConfigurationError("projective orbit collapsed to zero")
        w = w / nw
        new_theta = math.atan2(w[1], w[0])
        delta = new_theta - theta
        while delta <= -math.pi:
            delta += 2.0 * math.pi
        while delta > math.pi:
            delta -= 2.0 * math.pi
        total += delta
        theta = new_theta
        v = w
        n += 1
    if n == 0:
        raise ConfigurationError("empty matrix sequence")
    rho = (total / (2.0 * math.pi * n)) % 1.0
    return min(rho, 1.0 - rho)
