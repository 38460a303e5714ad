"""Constant (additive) noise: coefficient profiles and reproducible streams.

The driving noise acts mode-wise: mode i receives q_i * dB^i for
independent scalar Brownian motions B^i (a full coupling matrix is also
supported).  Streams are counter-based (Philox) and keyed by
(master_seed, stream_id), so every trajectory's noise is reproducible
independently of scheduling.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

PROFILES = ("zero", "diagonal_power", "explicit_diagonal", "full_matrix")


@dataclass(frozen=True)
class NoiseSpec:
    """Noise coefficient profile plus the master RNG seed.

    diagonal_power: q_i = c * i**(-a).
    explicit_diagonal: q given as a vector.
    full_matrix: mode couplings q_ij; q_i^2 = sum_j q_ij^2.
    """

    profile: str = "zero"
    c: float = 0.0
    a: float = 0.0
    q: np.ndarray = None
    matrix: np.ndarray = None
    master_seed: int = 0

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"unknown noise profile {self.profile!r}")
        if self.profile == "diagonal_power" and (self.c < 0 or self.a < 0):
            raise ValueError("diagonal_power requires c >= 0 and a >= 0")
        if self.profile == "explicit_diagonal":
            q = np.asarray(self.q, dtype=float)
            if q.ndim != 1 or not np.all(np.isfinite(q)):
                raise ValueError("explicit_diagonal requires a finite vector")
            object.__setattr__(self, "q", q)
        if self.profile == "full_matrix":
            m = np.asarray(self.matrix, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1] or not np.all(np.isfinite(m)):
                raise ValueError("full_matrix requires a finite square matrix")
            object.__setattr__(self, "matrix", m)

    def q_vector(self, n_modes):
        """Per-mode amplitudes q_i for i <= n_modes (truncated profile)."""
        if self.profile == "zero":
            return np.zeros(n_modes)
        if self.profile == "diagonal_power":
            i = np.arange(1, n_modes + 1, dtype=float)
            return self.c * i ** (-self.a)
        if self.profile == "explicit_diagonal":
            out = np.zeros(n_modes)
            m = min(n_modes, len(self.q))
            out[:m] = self.q[:m]
            return out
        # row-sum amplitudes q_i^2 = sum_j q_ij^2
        m = np.zeros((n_modes, n_modes))
        k = min(n_modes, self.matrix.shape[0])
        m[:k, :k] = self.matrix[:k, :k]
        return np.sqrt(np.sum(m * m, axis=1))

    @property
    def is_zero(self):
        if self.profile == "zero":
            return True
        if self.profile == "diagonal_power":
            return self.c == 0.0
        if self.profile == "explicit_diagonal":
            return not np.any(self.q)
        return not np.any(self.matrix)


def trace(spec, operator):
    """The quantity sum_i q_i^2 / lambda_i (finite for all built-in profiles).

    For diagonal_power the sum over the retained modes is completed by the
    exact analytic tail c^2/pi^2 * zeta_H(2a+2, n+1); for explicit and
    matrix profiles the sum is finite.  Returns inf if a future profile
    ever diverges.
    """
    n = operator.n_modes
    qv = spec.q_vector(n)
    head = float(np.sum(qv**2 / operator.eigenvalues))
    if spec.profile == "diagonal_power" and spec.c > 0:
        tail = spec.c**2 / np.pi**2 * float(zeta(2 * spec.a + 2, n + 1))
        return head + tail
    return head


class NoiseStream:
    """Reproducible Gaussian stream keyed by (master_seed, stream_id)."""

    def __init__(self, spec, stream_id=0):
        self.spec = spec
        self.stream_id = int(stream_id)
        bitgen = np.random.Philox(key=[spec.master_seed & (2**64 - 1), self.stream_id])
        self._rng = np.random.Generator(bitgen)

    def normals(self, shape):
        return self._rng.standard_normal(shape)


def sample_increments(spec, n_modes, dt, stream):
    """One vector of per-mode noise increments over a step of length dt."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    xi = stream.normals(n_modes)
    if spec.profile == "full_matrix":
        m = np.zeros((n_modes, n_modes))
        k = min(n_modes, spec.matrix.shape[0])
        m[:k, :k] = spec.matrix[:k, :k]
        return m @ (xi * np.sqrt(dt))
    # multiply xi by sqrt(dt) first so a diagonal full_matrix run is
    # bit-identical to the explicit_diagonal one
    return spec.q_vector(n_modes) * (xi * np.sqrt(dt))


def sample_increment_block(spec, n_modes, dt, stream, count):
    """(count, n_modes) block of consecutive increments from one stream."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    xi = stream.normals((count, n_modes))
    if spec.profile == "full_matrix":
        m = np.zeros((n_modes, n_modes))
        k = min(n_modes, spec.matrix.shape[0])
        m[:k, :k] = spec.matrix[:k, :k]
        return (xi * np.sqrt(dt)) @ m.T
    return spec.q_vector(n_modes) * (xi * np.sqrt(dt))
