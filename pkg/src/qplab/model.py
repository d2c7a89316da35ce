"""Potentials, frequency vectors, and finite lattice operator truncations.

Two operator families are built here: the quasiperiodic Schrodinger chain
on Z with diagonal v(x + n*alpha), and its long-range partner on Z^d with
hopping given by the Fourier coefficients of v and diagonal
2*cos(2*pi*(n.alpha + theta)).  Truncations use a Dirichlet window (all
couplings leaving the window are dropped).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConfigurationError, InvalidInputError, UnsupportedOperationError

# Reality of coefficient pairs is enforced to this absolute tolerance;
# pairs are then exactly symmetrized so built matrices are exactly real.
_REALITY_TOL = 1e-12

# Frequencies whose continued fraction terminates (or is float-indistinguishable
# from a rational) below this denominator are rejected as (near-)rational.
_MAX_DENOMINATOR = 10**12
_NEAR_RATIONAL_Q = 10**6
_NEAR_RATIONAL_TOL = 1e-15


@dataclass(frozen=True)
class Potential:
    """Real trigonometric polynomial on the d-torus, stored by Fourier modes.

    ``coeffs`` maps integer mode vectors n (length-d tuples) to complex
    amplitudes; the pair constraint coeff[-n] == conj(coeff[n]) makes the
    sampled values real.  Coefficient pairs are symmetrized exactly at
    construction so that downstream matrices are exactly real symmetric.
    """

    dim: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigurationError(f"potential dimension must be >= 1, got {self.dim}")
        cleaned = {}
        for n, c in self.coeffs.items():
            key = tuple(int(k) for k in (n if isinstance(n, tuple) else (n,)))
            if len(key) != self.dim:
                raise ConfigurationError(f"mode {key} has wrong dimension (expected {self.dim})")
            cleaned[key] = complex(c)
        for n, c in cleaned.items():
            mirror = cleaned.get(tuple(-k for k in n), 0.0)
            if abs(c - np.conj(mirror)) > _REALITY_TOL * max(1.0, abs(c)):
                raise InvalidInputError(
                    f"reality violated: coeff[{n}]={c} vs conj(coeff[-n])={np.conj(mirror)}"
                )
        # exact symmetrization: store each pair from a single representative
        sym = {}
        for n, c in cleaned.items():
            neg = tuple(-k for k in n)
            if neg in sym:
                sym[n] = np.conj(sym[neg])
            else:
                sym[n] = 0.5 * (c + np.conj(cleaned.get(neg, c)))
        object.__setattr__(self, "coeffs", dict(sorted(sym.items())))

    @classmethod
    def zero(cls, dim: int = 1) -> "Potential":
        return cls(dim=dim, coeffs={})

    @classmethod
    def cosine(cls, coupling: float, dim: int = 1) -> "Potential":
        """v(x) = 2*coupling*cos(2 pi x_1), the standard cosine chain."""
        n = tuple([1] + [0] * (dim - 1))
        m = tuple([-1] + [0] * (dim - 1))
        return cls(dim=dim, coeffs={n: coupling, m: coupling})

    @property
    def support_radius(self) -> int:
        if not self.coeffs:
            return 0
        return max(max(abs(k) for k in n) for n in self.coeffs)

    def mode_arrays(self):
        """(modes, amplitudes) as ndarrays for vectorized evaluation."""
        if not self.coeffs:
            return np.zeros((0, self.dim), dtype=np.int64), np.zeros(0, dtype=np.complex128)
        modes = np.array(list(self.coeffs.keys()), dtype=np.int64)
        amps = np.array(list(self.coeffs.values()), dtype=np.complex128)
        return modes, amps

    def value(self, x) -> np.ndarray:
        """Evaluate v at phases x, shape (..., d) or scalar for d = 1."""
        x = np.asarray(x, dtype=np.float64)
        if self.dim == 1 and x.ndim == 0:
            x = x.reshape(1)
            scalar = True
        else:
            scalar = False
        if x.shape[-1] != self.dim and self.dim == 1:
            x = x[..., None]
        modes, amps = self.mode_arrays()
        if len(amps) == 0:
            out = np.zeros(x.shape[:-1])
        else:
            phase = 2.0 * np.pi * np.tensordot(x, modes.T, axes=1)
            out = np.tensordot(np.exp(1j * phase), amps, axes=([-1], [0])).real
        return float(out[0]) if scalar else out


def continued_fraction_convergents(alpha: float, max_q: int = _MAX_DENOMINATOR):
    """Convergents (p_k, q_k) of alpha in (0, 1), stopping once q exceeds
    max_q or the expansion terminates.  Returns (convergents, terminated)."""
    p_prev, q_prev = 1, 0
    p_cur, q_cur = 0, 1   # p_0/q_0 = floor(alpha) = 0
    x = alpha % 1.0
    convergents = []
    terminated = False
    for _ in range(200):
        if x == 0.0:
            terminated = True
            break
        a = int(1.0 / x)
        x = 1.0 / x - a
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        if q_cur > max_q:
            break
        convergents.append((p_cur, q_cur))
    return convergents, terminated


@dataclass(frozen=True)
class Frequency:
    """Frequency vector alpha in [0,1)^d with continued-fraction data (d=1).

    Rational and near-rational inputs are rejected: each component must be
    irrational at the working resolution, i.e. no rational p/q with
    q <= 10^6 reproduces it to 1e-15.
    """

    alpha: np.ndarray
    convergents: tuple = ()

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.alpha, dtype=np.float64)) % 1.0
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "convergents", tuple(tuple(pq) for pq in self.convergents))

    @property
    def dim(self) -> int:
        return len(self.alpha)

    @classmethod
    def from_alpha(cls, alpha) -> "Frequency":
        a = np.atleast_1d(np.asarray(alpha, dtype=np.float64)) % 1.0
        convergents = ()
        for comp in a:
            conv, terminated = continued_fraction_convergents(float(comp))
            if terminated:
                raise ConfigurationError(
                    f"frequency component {comp} is rational (convergents exhausted)"
                )
            for p, q in conv:
                if q <= _NEAR_RATIONAL_Q and abs(comp - p / q) < _NEAR_RATIONAL_TOL:
                    raise ConfigurationError(
                        f"frequency component {comp} is within {_NEAR_RATIONAL_TOL} "
                        f"of {p}/{q}; rejected as near-rational"
                    )
            if len(a) == 1:
                convergents = tuple(conv)
        return cls(alpha=a, convergents=convergents)

    @classmethod
    def golden(cls) -> "Frequency":
        return cls.from_alpha((math.sqrt(5.0) - 1.0) / 2.0)

    @classmethod
    def from_continued_fraction(cls, digits) -> "Frequency":
        """One-dimensional frequency [0; a_1, a_2, ...] built from exact
        integer digits.  Bypasses the float near-rational guard, which is
        what makes Liouville-like test frequencies constructible."""
        if not digits:
            raise ConfigurationError("empty continued fraction")
        frac = Fraction(0)
        for a in reversed([int(d) for d in digits]):
            if a < 1:
                raise ConfigurationError("continued fraction digits must be >= 1")
            frac = Fraction(1, a + frac)
        p_prev, q_prev = 1, 0
        p_cur, q_cur = 0, 1
        convergents = []
        for a in digits:
            p_prev, p_cur = p_cur, a * p_cur + p_prev
            q_prev, q_cur = q_cur, a * q_cur + q_prev
            convergents.append((p_cur, q_cur))
        return cls(alpha=np.array([float(frac)]), convergents=tuple(convergents))


def beta_ratio_sequence(alpha: Frequency, depth: int) -> list:
    """Ratios ln(q_{k+1}) / q_k of consecutive convergent denominators,
    k = 0 .. depth-1."""
    if alpha.dim != 1:
        raise UnsupportedOperationError("denominator growth is defined for one frequency only")
    conv = alpha.convergents
    if len(conv) < 2:
        raise ConfigurationError("not enough convergents available")
    depth = min(depth, len(conv) - 1)
    return [math.log(conv[k + 1][1]) / conv[k][1] for k in range(depth)]


def beta_exponent(alpha: Frequency, depth: int) -> float:
    """Finite-depth proxy for the upper exponential growth rate of
    continued-fraction denominators.

    The target is a limsup, so the proxy takes the max of ln(q_{k+1}) / q_k
    over the deeper half of the computed ratios; transient early ratios
    (always O(1) regardless of arithmetic type) are discarded.
    """
    ratios = beta_ratio_sequence(alpha, depth)
    return max(ratios[len(ratios) // 2:])


@dataclass(frozen=True)
class DiophantineReport:
    margin: float
    worst_k: tuple
    gamma: float
    tau: float
    k_max: int
    passed: bool


def diophantine_margin(alpha: Frequency, gamma: float, tau: float, k_max: int) -> DiophantineReport:
    """Exhaustive scan of dist(k.alpha, Z) * |k|^tau over 0 < |k| <= k_max.

    For d >= 2 the scan runs over the sup-norm box and |k| is Euclidean.
    """
    if k_max < 1:
        raise ConfigurationError("k_max must be >= 1")
    if gamma <= 0:
        raise ConfigurationError("gamma must be > 0")
    a = alpha.alpha
    if alpha.dim == 1:
        k = np.arange(1, k_max + 1, dtype=np.float64)
        dist = np.abs((k * a[0] + 0.5) % 1.0 - 0.5)
        weighted = dist * k**tau
        i = int(np.argmin(weighted))
        margin, worst = float(weighted[i]), (int(k[i]),)
    else:
        axes = [np.arange(-k_max, k_max + 1)] * alpha.dim
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, alpha.dim)
        grid = grid[np.any(grid != 0, axis=1)]
        dots = grid @ a
        dist = np.abs((dots + 0.5) % 1.0 - 0.5)
        norms = np.sqrt((grid.astype(np.float64) ** 2).sum(axis=1))
        weighted = dist * norms**tau
        i = int(np.argmin(weighted))
        margin, worst = float(weighted[i]), tuple(int(v) for v in grid[i])
    return DiophantineReport(margin=margin, worst_k=worst, gamma=gamma, tau=tau,
                             k_max=k_max, passed=margin >= gamma)


@dataclass(frozen=True)
class Window:
    """Symmetric Dirichlet truncation window: sites -radius..radius per axis."""

    radius: int
    boundary: str = "dirichlet"

    def __post_init__(self):
        if self.radius < 1:
            raise ConfigurationError(f"window radius must be >= 1, got {self.radius}")
        if self.boundary != "dirichlet":
            raise UnsupportedOperationError(f"unsupported boundary {self.boundary!r}")

    def size(self, lattice_dim: int = 1) -> int:
        return (2 * self.radius + 1) ** lattice_dim

    def offsets(self) -> np.ndarray:
        return np.arange(-self.radius, self.radius + 1)

    def sites(self, lattice_dim: int = 1) -> np.ndarray:
        """All lattice sites in the window, shape (size, lattice_dim),
        lexicographic order."""
        axes = [self.offsets()] * lattice_dim
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, lattice_dim)


@dataclass
class LatticeOperator:
    """Finite real symmetric truncation of a lattice Hamiltonian.

    ``kind`` is "schrodinger_1d" (tridiagonal, stored as diagonal plus unit
    off-diagonal) or "dual_zd" (dense).  ``matrix`` materializes the dense
    form on demand.
    """

    kind: str
    window: Window
    lattice_dim: int
    diagonal: np.ndarray
    offdiagonal: np.ndarray | None = None
    dense: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.diagonal)

    @property
    def matrix(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        m = np.diag(self.diagonal)
        idx = np.arange(self.dim - 1)
        m[idx, idx + 1] = self.offdiagonal
        m[idx + 1, idx] = self.offdiagonal
        return m

    def norm_bound(self) -> float:
        """Cheap upper bound on the operator norm (Gershgorin)."""
        if self.dense is not None:
            return float(np.max(np.sum(np.abs(self.dense), axis=1)))
        return float(np.max(np.abs(self.diagonal))) + 2.0


def build_schrodinger(potential: Potential, alpha: Frequency, x, window: Window) -> LatticeOperator:
    """Tridiagonal truncation with diagonal v(x + n*alpha) and unit hopping."""
    if potential.dim != alpha.dim:
        raise ConfigurationError(
            f"potential dimension {potential.dim} != frequency dimension {alpha.dim}"
        )
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if len(x) != alpha.dim:
        raise ConfigurationError(f"phase has dimension {len(x)}, expected {alpha.dim}")
    n = window.offsets()
    phases = (x[None, :] + n[:, None] * alpha.alpha[None, :]) % 1.0
    diag = potential.value(phases)
    off = np.ones(len(n) - 1)
    return LatticeOperator(
        kind="schrodinger_1d", window=window, lattice_dim=1,
        diagonal=np.asarray(diag, dtype=np.float64), offdiagonal=off,
        meta={"alpha": alpha, "x": tuple(x), "potential": potential},
    )


def build_dual(potential: Potential, alpha: Frequency, theta: float, window: Window) -> LatticeOperator:
    """Long-range dual truncation on Z^d: hopping coeff[n - m], diagonal
    2*cos(2*pi*(n.alpha + theta)).  Exactly real symmetric by construction."""
    if potential.dim != alpha.dim:
        raise ConfigurationError(
            f"potential dimension {potential.dim} != frequency dimension {alpha.dim}"
        )
    d = potential.dim
    if d > 2:
        raise UnsupportedOperationError("dual operators supported for d in {1, 2}")
    # hopping coeff[n-m] is real symmetric only for even potentials; an odd
    # Fourier part would make the matrix complex Hermitian, which the real
    # storage contract forbids
    for mode, amp in potential.coeffs.items():
        if abs(np.imag(amp)) > _REALITY_TOL * max(1.0, abs(amp)):
            raise InvalidInputError(
                f"dual matrix would be non-real: coeff[{mode}]={amp} has an imaginary part"
            )
    sites = window.sites(d)
    size = len(sites)
    mat = np.zeros((size, size))
    delta = sites[:, None, :] - sites[None, :, :]
    # shared per-offset amplitude keeps (n, m) and (m, n) entries exactly equal
    for mode, amp in potential.coeffs.items():
        hop = float(np.real(amp))
        hit = np.all(delta == np.asarray(mode), axis=-1)
        mat[hit] += hop
    theta = float(theta) % 1.0
    diag = 2.0 * np.cos(2.0 * np.pi * ((sites @ alpha.alpha) + theta))
    mat[np.arange(size), np.arange(size)] += diag
    return LatticeOperator(
        kind="dual_zd", window=window, lattice_dim=d,
        diagonal=np.diag(mat).copy(), dense=mat,
        meta={"alpha": alpha, "theta": theta, "potential": potential},
    )
