"""Correlators of GHZ and W states under two dichotomic qubit measurements per party.

Each party ``j`` measures, for input ``x``, the observable ``n . sigma`` with
Bloch vector ``(sin t cos p, sin t sin p, cos t)`` where ``t = theta[j, x]``
and ``p = phi[j, x]``.  In state vectors party 1 is the leading tensor axis.

Besides full correlation tables this module evaluates MS polynomials through
the identity ``M_n + i M'_n = ((1 - i)/2)**(n-1) prod_j (a_j + i a'_j)``: for
a quantum state the right-hand side becomes ``<psi| (x)_j (A_j0 + i A_j1) |psi>``,
which costs one product-operator expectation instead of ``2**n`` correlators.
That is what makes W states with ``n`` up to 10**6 tractable.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import CorrelationTable

STATEVECTOR_LIMIT = 14
TABLE_LIMIT = 20
_W = (1 - 1j) / 2


@dataclass(frozen=True, eq=False)
class MeasurementSettings:
    """Polar and azimuthal angles, each of shape ``(n, 2)`` (party, input)."""

    theta: np.ndarray
    phi: np.ndarray = field(default=None)

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float)
        phi = np.zeros_like(theta) if self.phi is None else np.array(self.phi, dtype=float)
        if theta.ndim != 2 or theta.shape[1] != 2 or phi.shape != theta.shape:
            raise ValueError(f"angles must have shape (n, 2), got {theta.shape} and {phi.shape}")
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(phi))):
            raise ValueError("angles must be finite")
        theta.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    @property
    def n(self) -> int:
        return self.theta.shape[0]

    @classmethod
    def identical(cls, n: int, setting0, setting1) -> "MeasurementSettings":
        """Every party uses ``setting0 = (theta, phi)`` for input 0 and ``setting1`` for input 1."""
        theta = np.tile([setting0[0], setting1[0]], (n, 1))
        phi = np.tile([setting0[1], setting1[1]], (n, 1))
        return cls(theta, phi)

    @classmethod
    def from_vector(cls, x, n: int) -> "MeasurementSettings":
        """Inverse of :meth:`to_vector`: ``[t0, p0, t1, p1]`` per party."""
        x = np.asarray(x, dtype=float).reshape(n, 2, 2)
        return cls(x[:, :, 0], x[:, :, 1])

    def to_vector(self) -> np.ndarray:
        return np.stack([self.theta, self.phi], axis=-1).reshape(-1)

    @classmethod
    def from_pairs(cls, pairs) -> "MeasurementSettings":
        """From ``[[[t0, p0], [t1, p1]], ...]`` (one entry per party)."""
        arr = np.asarray(pairs, dtype=float)
        if arr.ndim != 3 or arr.shape[1:] != (2, 2):
            raise ValueError("settings must be a list of [[theta0, phi0], [theta1, phi1]] per party")
        return cls(arr[:, :, 0], arr[:, :, 1])

    def to_pairs(self) -> list:
        return np.stack([self.theta, self.phi], axis=-1).tolist()

    def is_identical(self, atol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.theta - self.theta[0]) <= atol)
                    and np.all(np.abs(self.phi - self.phi[0]) <= atol))

    def permuted(self, perm) -> "MeasurementSettings":
        """Settings with party ``i`` moved to position ``perm[i]``."""
        inv = np.argsort(perm)
        return MeasurementSettings(self.theta[inv], self.phi[inv])

    def observables(self) -> np.ndarray:
        """Array of shape ``(n, 2, 2, 2)``: party, input, row, column."""
        t, p = self.theta, self.phi
        out = np.empty(t.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = np.cos(t)
        out[..., 1, 1] = -np.cos(t)
        out[..., 0, 1] = np.sin(t) * np.exp(-1j * p)
        out[..., 1, 0] = np.sin(t) * np.exp(1j * p)
        return out


def mermin_settings(n: int, kind: str = "M") -> MeasurementSettings:
    """Equatorial settings with ``phi_1 = phi_0 + pi/2`` maximizing ``kind`` on GHZ(pi/4)."""
    # z = 2^{(n-1)/2} exp(-i(pi(n-1)/4 + sum phi_0)); M needs arg z = 0, M+ needs arg z = pi/4
    target = 0.0 if kind in ("M", "M-") else math.pi / 4
    if kind == "M-":
        target = -math.pi / 4
    phi0 = -(math.pi * (n - 1) / 4 + target) / n
    theta = np.full((n, 2), math.pi / 2)
    phi = np.tile([phi0, phi0 + math.pi / 2], (n, 1))
    return MeasurementSettings(theta, phi)


@dataclass(frozen=True, eq=False)
class StateSpec:
    """``GHZ`` (cos t |0..0> + sin t |1..1>), ``W``, or an explicit ``vector``."""

    kind: str
    n: int
    theta: float = math.pi / 4
    vector: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("GHZ", "W", "vector"):
            raise ValueError(f"unknown state kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kind == "GHZ" and not -1e-12 <= self.theta <= math.pi / 4 + 1e-12:
            raise ValueError("GHZ angle must lie in [0, pi/4]")
        if self.kind == "vector":
            v = np.asarray(self.vector, dtype=complex).ravel()
            if v.shape != (2**self.n,):
                raise ValueError(f"state vector must have {2**self.n} amplitudes")
            norm = np.linalg.norm(v)
            if not np.isfinite(norm) or norm == 0:
                raise ValueError("state vector is not normalizable")
            object.__setattr__(self, "vector", v / norm)

    @classmethod
    def ghz(cls, n: int, theta: float = math.pi / 4) -> "StateSpec":
        return cls("GHZ", n, theta)

    @classmethod
    def w(cls, n: int) -> "StateSpec":
        return cls("W", n)

    def statevector(self) -> np.ndarray:
        if self.n > STATEVECTOR_LIMIT:
            raise ValueError(f"dense state vectors limited to n <= {STATEVECTOR_LIMIT}")
        if self.kind == "vector":
            return self.vector
        psi = np.zeros(2**self.n, dtype=complex)
        if self.kind == "GHZ":
            psi[0] = math.cos(self.theta)
            psi[-1] = math.sin(self.theta)
        else:
            # party j sits on tensor axis j, i.e. flat-index bit n-1-j
            psi[[1 << (self.n - 1 - j) for j in range(self.n)]] = 1 / math.sqrt(self.n)
        return psi

    def describe(self) -> dict:
        d = {"kind": self.kind, "n": self.n}
        if self.kind == "GHZ":
            d["theta"] = self.theta
        return d


def _clamped_table(n: int, values: np.ndarray) -> CorrelationTable:
    values = np.asarray(values, dtype=float)
    excess = np.max(np.abs(values)) - 1 if values.size else 0.0
    if excess > 1e-10:
        raise FloatingPointError(f"correlator exceeds 1 by {excess:.3g}")
    return CorrelationTable(n, np.clip(values, -1.0, 1.0))


def correlation_table_statevector(state: StateSpec, settings: MeasurementSettings) -> CorrelationTable:
    """``E(s) = <psi| (x)_j A_j^{s_j} |psi>`` for every ``s`` by dense simulation (n <= 14)."""
    n = state.n
    if settings.n != n:
        raise ValueError(f"settings are for {settings.n} parties, state has {n}")
    if n > STATEVECTOR_LIMIT:
        raise ValueError(f"statevector path limited to n <= {STATEVECTOR_LIMIT}")
    psi = state.statevector().reshape((2,) * n)
    ops = settings.observables()
    # parties act on disjoint factors and observables are Hermitian, so
    # E(sL, sR) = <A_L(sL) psi | A_R(sR) psi>
    left = n // 2
    phi_left = _apply_batched(psi, ops, range(left))
    phi_right = _apply_batched(psi, ops, range(left, n))
    E = (phi_left.conj() @ phi_right.T).real
    # row index is the left assignment (low bits), column the right one
    E = E.T.reshape(-1)
    return _clamped_table(n, E)


def _apply_batched(psi: np.ndarray, ops: np.ndarray, parties) -> np.ndarray:
    """Rows ``(x)_{j in parties} A_j^{s_j} psi`` for all inputs ``s`` of ``parties`` (little-endian)."""
    n = psi.ndim
    T = psi[None]
    for j in parties:
        R = np.tensordot(ops[j], T, axes=([2], [j + 1]))
        T = np.moveaxis(R, 1, j + 2).reshape((-1,) + (2,) * n)
    return T.reshape(T.shape[0], -1)


def _little_endian_products(factors: np.ndarray) -> np.ndarray:
    """``out[s] = prod_j factors[j, s_j]`` over all assignments ``s``."""
    out = np.ones(1, dtype=factors.dtype)
    for j in range(factors.shape[0]):
        out = np.concatenate([out * factors[j, 0], out * factors[j, 1]])
    return out


def correlation_ghz_closed(theta: float, settings: MeasurementSettings) -> CorrelationTable:
    """GHZ correlators from the closed form.

    ``E(s) = (cos^2 t + (-1)^n sin^2 t) prod_j cos a_j + sin 2t Re prod_j sin a_j e^{-i p_j}``
    with ``a_j, p_j`` the angles party ``j`` uses for input ``s_j``.
    """
    n = settings.n
    if n > TABLE_LIMIT:
        raise ValueError(f"full tables limited to n <= {TABLE_LIMIT}")
    cos_part = _little_endian_products(np.cos(settings.theta))
    off_part = _little_endian_products(np.sin(settings.theta) * np.exp(-1j * settings.phi))
    diag = math.cos(theta) ** 2 + (-1) ** n * math.sin(theta) ** 2
    return _clamped_table(n, diag * cos_part + math.sin(2 * theta) * off_part.real)


def _pow(x: float, e: int) -> float:
    return x**e if e >= 0 else 0.0


def w_weight_correlators(n: int, setting0, setting1) -> np.ndarray:
    """``E(k)`` for W_n when every party uses the same two settings and ``k`` of them pick input 1."""
    (t0, p0), (t1, p1) = setting0, setting1
    c0, c1 = math.cos(t0), math.cos(t1)
    s0, s1 = math.sin(t0), math.sin(t1)
    mixed = 2 * s0 * s1 * math.cos(p0 - p1)
    out = np.empty(n + 1)
    for k in range(n + 1):
        r = n - k
        diag = -_pow(c0, r) * _pow(c1, k)
        off = (r * (r - 1) * s0 * s0 * _pow(c0, r - 2) * _pow(c1, k) if r >= 2 else 0.0)
        off += (k * (k - 1) * s1 * s1 * _pow(c0, r) * _pow(c1, k - 2) if k >= 2 else 0.0)
        off += (r * k * mixed * _pow(c0, r - 1) * _pow(c1, k - 1) if r and k else 0.0)
        out[k] = diag + off / n
    return out


def correlation_w_closed(settings: MeasurementSettings) -> CorrelationTable:
    """W-state correlators from the symmetric closed form; settings must be identical across parties."""
    if not settings.is_identical():
        raise ValueError("W closed form requires identical settings for all parties")
    n = settings.n
    if n > TABLE_LIMIT:
        raise ValueError(f"full tables limited to n <= {TABLE_LIMIT}; use w_weight_correlators")
    s0 = (settings.theta[0, 0], settings.phi[0, 0])
    s1 = (settings.theta[0, 1], settings.phi[0, 1])
    by_weight = w_weight_correlators(n, s0, s1)
    weights = np.array([bin(s).count("1") for s in range(2**n)])
    return _clamped_table(n, by_weight[weights])


# -- fast MS evaluation ---------------------------------------------------------

def _b_entries(t0, p0, t1, p1):
    """Matrix entries of ``A(t0, p0) + i A(t1, p1)``."""
    c0, c1 = math.cos(t0), math.cos(t1)
    s0, s1 = math.sin(t0), math.sin(t1)
    e0, e1 = cmath.exp(1j * p0), cmath.exp(1j * p1)
    b00 = c0 + 1j * c1
    b01 = s0 / e0 + 1j * s1 / e1
    b10 = s0 * e0 + 1j * s1 * e1
    return b00, b01, b10, -b00


def _ghz_generating(theta: float, thetas, phis) -> complex:
    p00 = p01 = p10 = p11 = 1.0 + 0j
    for (t0, t1), (q0, q1) in zip(thetas, phis):
        b00, b01, b10, b11 = _b_entries(t0, q0, t1, q1)
        p00 *= b00
        p01 *= b01
        p10 *= b10
        p11 *= b11
    c, s = math.cos(theta), math.sin(theta)
    return c * c * p00 + s * s * p11 + c * s * (p01 + p10)


def _w_generating(thetas, phis) -> complex:
    n = len(thetas)
    # states: no excitation yet, bra excitation placed, ket excitation placed, both placed
    none, bra, ket, both = 1.0 + 0j, 0j, 0j, 0j
    for (t0, t1), (q0, q1) in zip(thetas, phis):
        b00, b01, b10, b11 = _b_entries(t0, q0, t1, q1)
        both = both * b00 + bra * b01 + ket * b10 + none * b11
        bra, ket = bra * b00 + none * b10, ket * b00 + none * b01
        none = none * b00
    return both / n


def _vector_generating(state: StateSpec, settings: MeasurementSettings) -> complex:
    n = state.n
    psi = state.statevector().reshape((2,) * n)
    ops = settings.observables()
    v = psi
    for j in range(n):
        b = ops[j, 0] + 1j * ops[j, 1]
        v = np.moveaxis(np.tensordot(b, v, axes=([1], [j])), 0, j)
    return complex(np.vdot(psi, v))


def generating_value(state: StateSpec, settings: MeasurementSettings) -> complex:
    """``<psi| (x)_j (A_j0 + i A_j1) |psi> = sum_s i^{|s|} E(s)``."""
    if settings.n != state.n:
        raise ValueError(f"settings are for {settings.n} parties, state has {state.n}")
    if state.kind == "GHZ":
        return _ghz_generating(state.theta, settings.theta.tolist(), settings.phi.tolist())
    if state.kind == "W":
        return _w_generating(settings.theta.tolist(), settings.phi.tolist())
    return _vector_generating(state, settings)


def generating_value_flat(state: StateSpec, x) -> complex:
    """:func:`generating_value` for a flat ``[t0, p0, t1, p1] * n`` angle vector (GHZ and W only)."""
    arr = np.asarray(x, dtype=float).reshape(state.n, 2, 2)
    thetas, phis = arr[:, :, 0].tolist(), arr[:, :, 1].tolist()
    if state.kind == "GHZ":
        return _ghz_generating(state.theta, thetas, phis)
    if state.kind == "W":
        return _w_generating(thetas, phis)
    return _vector_generating(state, MeasurementSettings(arr[:, :, 0], arr[:, :, 1]))


def ms_from_generating(g: complex, n: int, kind: str) -> float:
    """Value of ``M``, ``M'``, ``M+`` or ``M-`` from the generating value ``g``."""
    z = _W ** (n - 1) * g
    if kind == "M":
        return z.real
    if kind == "M'":
        return z.imag
    if kind == "M+":
        return (z.real + z.imag) / math.sqrt(2)
    if kind == "M-":
        return (z.real - z.imag) / math.sqrt(2)
    raise ValueError(f"unknown polynomial kind {kind!r}")


def ms_value(state: StateSpec, settings: MeasurementSettings, kind: str) -> float:
    """Quantum value of an MS polynomial without building the correlation table."""
    return ms_from_generating(generating_value(state, settings), state.n, kind)


def w_identical_ms_value(n: int, setting0, setting1, kind: str) -> float:
    """MS value on W_n with identical settings, O(1) in ``n``."""
    b00, b01, b10, b11 = _b_entries(setting0[0], setting0[1], setting1[0], setting1[1])
    if n == 1:
        return ms_from_generating(b11, 1, kind)
    # fold the ((1-i)/2)^(n-1) prefactor into the powers to avoid overflow at large n
    q = _W * b00
    z = q ** (n - 2) * (q * b11 + (n - 1) * _W * b10 * b01)
    return ms_from_generating(z, 1, kind)


def w_limit_ms_value(c0: float, c1: float, kind: str) -> float:
    """``n -> infinity`` limit of the W value with planar settings at polar angles ``c_x / sqrt(n)``."""
    decay = cmath.exp(-_W * (c0 * c0 + 1j * c1 * c1) / 2)
    z = decay * ((c0 + 1j * c1) ** 2 / (1 + 1j) - (1 + 1j))
    # z already includes the ((1-i)/2)^(n-1) prefactor; undo the one applied in ms_from_generating
    return ms_from_generating(z, 1, kind)
