"""
Coupling-field attenuation, coupled-mode generator and probe/signal transfer matrix.

The steady-state (zero frequency) probe and signal amplitudes obey

    d/dz [a_p, a_s]^T = M(z) [a_p, a_s]^T,     z in [0, 1]

with M built from the first-order atomic response. M varies along the
medium only through the attenuated coupling field Omega_c(z). The transfer
matrix [[A, B], [C, D]] maps the input amplitudes at z=0 to the output.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, DomainError, NumericalError, SingularParameterError
from .numerics import expm2, gauss_legendre, lambertw_log, ordered_product
from .scheme import (DEFAULT_ALPHA_C_RULE, DEFAULT_GAMMA_CONVENTION, AtomicScheme,
                     CouplingScales, GammaMatrix, build_scheme, decoherence_rates,
                     ground_manifold, od_scalings)

METHODS = ("exact-sliced", "magnus1", "magnus2")


@dataclass(frozen=True)
class OperatingPoint:
    """Five control parameters plus the medium, in units of Gamma.

    ``gamma`` defaults to :func:`decoherence_rates` of ``scheme``;
    ``alpha_c``/``alpha_s`` override the optical-depth scaling rule.
    """

    delta_p: float
    delta_c: float
    delta: float
    omega_c: float
    omega_d: float
    od: float
    scheme: AtomicScheme
    gamma: GammaMatrix | None = None
    alpha_c: float | None = None
    alpha_s: float | None = None
    alpha_c_rule: str = DEFAULT_ALPHA_C_RULE
    scales: CouplingScales = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vals = (self.delta_p, self.delta_c, self.delta, self.omega_c, self.omega_d, self.od)
        if not all(np.isfinite(v) for v in vals):
            raise DomainError(f"operating point has non-finite entries: {vals}")
        if self.od < 0 or self.omega_c < 0 or self.omega_d < 0:
            raise DomainError("od, omega_c and omega_d must be nonnegative")
        if self.gamma is None:
            object.__setattr__(self, "gamma", decoherence_rates(self.scheme))
        object.__setattr__(self, "scales", od_scalings(
            self.scheme, self.od, self.alpha_c_rule, self.alpha_c, self.alpha_s))

    @classmethod
    def from_params(cls, band, od, params, *, gamma_deph=0.0,
                    convention=DEFAULT_GAMMA_CONVENTION, **kwargs):
        """Build a point from a band tag and ``(dp, dc, delta, omega_c, omega_d)``."""
        scheme = band if isinstance(band, AtomicScheme) else build_scheme(band)
        gamma = decoherence_rates(scheme, gamma_deph, convention)
        dp, dc, dl, oc, od_ = (float(x) for x in params)
        return cls(dp, dc, dl, oc, od_, float(od), scheme, gamma, **kwargs)

    @property
    def params(self):
        return (self.delta_p, self.delta_c, self.delta, self.omega_c, self.omega_d)

    def with_params(self, params):
        dp, dc, dl, oc, od_ = (float(x) for x in params)
        return replace(self, delta_p=dp, delta_c=dc, delta=dl, omega_c=oc, omega_d=od_)


# -- coupling field ---------------------------------------------------------


@dataclass(frozen=True)
class CouplingProfile:
    """Coupling Rabi frequency sampled on a uniform grid of z in [0, 1].

    ``A0, B0, C0, D0`` are the constants of the intensity equation
    du/dz = D0 u / (A0 + B0 u) with the medium length set to one.
    """

    zeta: np.ndarray
    omega_c: np.ndarray
    intensity: np.ndarray
    A0: float
    B0: float
    C0: complex
    D0: float


def _profile_constants(point: OperatingPoint):
    G31, g31 = point.scheme.Gamma31, point.gamma[3, 1]
    A0 = 2.0 * G31 * (g31 ** 2 + 4.0 * point.delta_c ** 2)
    B0 = 4.0 * g31
    C0 = -point.scales.alpha_c * G31 ** 2 * (g31 + 2j * point.delta_c)
    return A0, B0, C0, 2.0 * C0.real


def coupling_field(point: OperatingPoint, zeta, absorbing=True):
    """Complex coupling Rabi frequency at positions ``zeta`` (closed form).

    The intensity u = |Omega_c|^2 follows from the principal Lambert W
    branch; the phase follows from d ln(Omega_c) = (C0/D0) d ln(u).
    """
    zeta = np.asarray(zeta, dtype=float)
    u0 = point.omega_c ** 2
    A0, B0, C0, D0 = _profile_constants(point)
    if not absorbing or u0 == 0.0 or D0 == 0.0:
        return np.full(zeta.shape, complex(point.omega_c))
    k = B0 / A0
    log_x = np.log(k * u0) + k * u0 + D0 / A0 * zeta
    u = lambertw_log(log_x) / k
    ratio = np.where(zeta == 0.0, 1.0, u / u0)
    # a fully absorbed coupling underflows to zero intensity
    safe = np.where(ratio > 0.0, ratio, 1.0)
    return np.where(ratio > 0.0, point.omega_c * np.exp((C0 / D0) * np.log(safe)), 0.0)


def coupling_profile(point: OperatingPoint, grid_size: int = 65) -> CouplingProfile:
    """Sample the attenuated coupling field on ``grid_size`` points."""
    if grid_size < 2:
        raise DomainError("grid_size must be at least 2")
    zeta = np.linspace(0.0, 1.0, grid_size)
    oc = coupling_field(point, zeta)
    u = np.abs(oc) ** 2
    u[0] = point.omega_c ** 2
    A0, B0, C0, D0 = _profile_constants(point)
    return CouplingProfile(zeta, oc, u, A0, B0, C0, D0)


# -- coupled-mode generator ---------------------------------------------------


def _primed_rates(point):
    g = point.gamma
    g21 = g[2, 1] - 2j * point.delta_p
    g32 = g[3, 2] - 2j * (point.delta_p - point.delta_c)
    g41 = g[4, 1] - 2j * point.delta
    g43 = g[4, 3] - 2j * (point.delta - point.delta_c)
    return g21, g32, g41, g43


def _prefactors(point):
    sc = point.scales
    G780 = point.scheme.Gamma780
    cross = np.sqrt(sc.alpha * sc.alpha_s)
    return 0.5j * sc.alpha * G780, 0.5j * cross * G780, 0.5j * sc.alpha_s * G780


def coupled_mode_matrix(point: OperatingPoint, omega_c_at_zeta, variant="exact"):
    """Self- and cross-coupling coefficients as a (..., 2, 2) array.

    ``[[Lambda_p, kappa_p], [kappa_s, Lambda_s]]`` per unit normalised length.
    The default ``variant="exact"`` is the closed-form inverse of the
    first-order response; ``variant="printed"`` omits the fourth-order rate
    product from the denominator and folds the unit term of the cross
    couplings into the numerator, as some published listings do. It is kept
    only to document that discrepancy.
    """
    oc = np.asarray(omega_c_at_zeta, dtype=complex)
    od = complex(point.omega_d)
    p11, c13 = ground_manifold(point.scheme.Gamma31, point.gamma[3, 1], point.delta_c, oc)
    c31, p33 = np.conj(c13), 1.0 - p11
    g21, g32, g41, g43 = _primed_rates(point)
    c2, d2 = np.abs(oc) ** 2, abs(od) ** 2

    denom = c2 * (g21 * g32 + g41 * g43) + d2 * (g21 * g41 + g32 * g43) + (c2 - d2) ** 2
    if variant == "exact":
        denom = denom + g21 * g32 * g41 * g43
        kp_bracket = (c2 - d2) / (g32 * g43) - 1.0
        ks_bracket = (c2 - d2) / (g21 * g41) - 1.0
    elif variant == "printed":
        kp_bracket = (c2 - d2 - 1.0) / (g32 * g43)
        ks_bracket = (c2 - d2 - 1.0) / (g21 * g41)
    else:
        raise ConfigurationError(f"unknown coefficient variant {variant!r}")
    if np.any(denom == 0) or not np.all(np.isfinite(denom)):
        raise SingularParameterError("coupled-mode denominator vanishes", point=point)

    lam_p = (c31 * g41 * g43 * oc * (1.0 + (c2 - d2) / (g41 * g43))
             + p11 * 1j * g32 * g41 * g43 * (1.0 + c2 / (g41 * g43) + d2 / (g32 * g43)))
    kap_p = (c13 * g32 * g43 * np.conj(od) * kp_bracket
             + p33 * 1j * (g32 + g41) * oc * np.conj(od))
    lam_s = (c13 * g21 * g32 * np.conj(oc) * (1.0 + (c2 - d2) / (g21 * g32))
             + p33 * 1j * g21 * g32 * g41 * (1.0 + c2 / (g21 * g32) + d2 / (g21 * g41)))
    kap_s = (c31 * g21 * g41 * od * ks_bracket
             + p11 * 1j * (g32 + g41) * np.conj(oc) * od)

    pp, ps, ss = _prefactors(point)
    out = np.empty(oc.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = pp * lam_p / denom
    out[..., 0, 1] = ps * kap_p / denom
    out[..., 1, 0] = ps * kap_s / denom
    out[..., 1, 1] = ss * lam_s / denom
    return out


def coupled_mode_matrix_oracle(point: OperatingPoint, omega_c_at_zeta):
    """Coupled-mode matrix from a direct solve of the first-order equations.

    Builds the 4x4 steady-state system for the coherences
    (s12, s14, s32, s34) driven by unit probe and signal amplitudes and
    maps s12 / s34 to the probe / signal source terms.
    """
    oc = np.atleast_1d(np.asarray(omega_c_at_zeta, dtype=complex))
    od = complex(point.omega_d)
    p11, c13 = ground_manifold(point.scheme.Gamma31, point.gamma[3, 1], point.delta_c, oc)
    c31, p33 = np.conj(c13), 1.0 - p11
    g21, g32, g41, g43 = _primed_rates(point)
    n = oc.shape[0]
    K = np.zeros((n, 4, 4), dtype=complex)
    K[:, 0, 0] = -g21
    K[:, 0, 1] = 1j * np.conj(od)
    K[:, 0, 2] = -1j * oc
    K[:, 1, 0] = 1j * od
    K[:, 1, 1] = -g41
    K[:, 1, 3] = -1j * oc
    K[:, 2, 0] = -1j * np.conj(oc)
    K[:, 2, 2] = -g32
    K[:, 2, 3] = 1j * np.conj(od)
    K[:, 3, 1] = -1j * np.conj(oc)
    K[:, 3, 2] = 1j * od
    K[:, 3, 3] = -g43
    rhs = np.zeros((n, 4, 2), dtype=complex)
    rhs[:, 0, 0] = -2j * p11
    rhs[:, 2, 0] = -2j * c31
    rhs[:, 1, 1] = -2j * c13
    rhs[:, 3, 1] = -2j * p33
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularParameterError("first-order response matrix is singular", point=point) from exc
    pp, ps, ss = _prefactors(point)
    out = np.empty((n, 2, 2), dtype=complex)
    # the solve carries the factor 2 that the closed form puts in its prefactor
    out[:, 0, 0] = 0.5 * pp * sol[:, 0, 0]
    out[:, 0, 1] = 0.5 * ps * sol[:, 0, 1]
    out[:, 1, 0] = 0.5 * ps * sol[:, 3, 0]
    out[:, 1, 1] = 0.5 * ss * sol[:, 3, 1]
    return out.reshape(np.shape(omega_c_at_zeta) + (2, 2))


def generator(point: OperatingPoint, absorbing=True):
    """Return ``M(zeta)`` as a vectorised callable."""
    def M(zeta):
        return coupled_mode_matrix(point, coupling_field(point, zeta, absorbing))
    return M


# -- transfer matrix ------------------------------------------------------------


@dataclass(frozen=True)
class TransferMatrix:
    """Input-output map [[A, B], [C, D]] of the probe/signal amplitudes."""

    A: complex
    B: complex
    C: complex
    D: complex
    method: str
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def matrix(self):
        return np.array([[self.A, self.B], [self.C, self.D]])

    @classmethod
    def from_matrix(cls, m, method, **diagnostics):
        m = np.asarray(m)
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]),
                   method, diagnostics)


@dataclass(frozen=True)
class ConversionMetrics:
    """Transmittances and conversion efficiencies for both directions."""

    T_d: float
    eta_d: float
    T_u: float
    eta_u: float


def conversion_metrics(T: TransferMatrix) -> ConversionMetrics:
    return ConversionMetrics(abs(T.A) ** 2, abs(T.C) ** 2, abs(T.D) ** 2, abs(T.B) ** 2)


def _constant_generator(point, absorbing):
    return (not absorbing or point.scales.alpha_c == 0.0 or point.omega_c == 0.0
            or point.od == 0.0)


def _sliced(M, n):
    z = (np.arange(n) + 0.5) / n
    return ordered_product(expm2(M(z) / n))


def transfer_matrix(point: OperatingPoint, method: str = "exact-sliced", *,
                    slices: int = 4096, tol: float = 1e-8, max_slices: int = 2 ** 20,
                    quad_order: int = 32, absorbing: bool = True) -> TransferMatrix:
    """Propagate through the medium and return the transfer matrix.

    ``exact-sliced``
        Ordered product of midpoint slice exponentials, Richardson
        extrapolated, doubling ``slices`` until successive extrapolants
        differ by less than ``tol``.
    ``magnus1``
        exp of the integral of M (Gauss-Legendre, ``quad_order`` nodes).
    ``magnus2``
        Adds the second Magnus term, half the ordered double integral of
        the commutator [M(z1), M(z2)] over z1 > z2.

    With a position-independent generator (no coupling absorption) every
    method reduces to a single exponential.
    """
    if method not in METHODS:
        raise ConfigurationError(f"unknown propagation method {method!r}; expected one of {METHODS}")
    M = generator(point, absorbing)

    if _constant_generator(point, absorbing):
        m0 = M(np.array([0.0]))[0]
        return TransferMatrix.from_matrix(expm2(m0), method, constant_generator=True)

    if method == "exact-sliced":
        if slices < 2:
            raise DomainError("slices must be at least 2")
        n = int(slices)
        p_prev = _sliced(M, n)
        r_prev, err = None, np.inf
        while True:
            if 2 * n > max_slices:
                raise NumericalError(
                    f"slice refinement stalled at {n} slices (achieved {err:.3g}, wanted {tol:g})",
                    achieved=err)
            p_next = _sliced(M, 2 * n)
            r = (4.0 * p_next - p_prev) / 3.0
            if r_prev is not None:
                err = float(np.max(np.abs(r - r_prev)))
                if err < tol:
                    return TransferMatrix.from_matrix(r, method, slices=2 * n, error_estimate=err)
            r_prev, p_prev, n = r, p_next, 2 * n

    nodes, weights = gauss_legendre(quad_order)
    Mk = M(nodes)
    omega = np.tensordot(weights, Mk, axes=1)
    diag = {"quad_order": quad_order}
    if method == "magnus2":
        # inner nodes on [0, z_k] for every outer node z_k
        inner = nodes[:, None] * nodes[None, :]
        Mj = M(inner.ravel()).reshape(quad_order, quad_order, 2, 2)
        comm = Mk[:, None] @ Mj - Mj @ Mk[:, None]
        w2 = weights[:, None] * nodes[:, None] * weights[None, :]
        omega2 = 0.5 * np.tensordot(w2, comm, axes=2)
        omega = omega + omega2
        diag["omega2_norm"] = float(np.linalg.norm(omega2, 2))
    return TransferMatrix.from_matrix(expm2(omega), method, **diag)


def nonabsorbing_transfer(point: OperatingPoint, method: str = "exact-sliced", **kwargs) -> TransferMatrix:
    """Transfer matrix with the coupling field held at its input value."""
    return transfer_matrix(point, method, absorbing=False, **kwargs)


def efficiency(point: OperatingPoint, method: str = "exact-sliced", **kwargs) -> float:
    """Down-conversion efficiency |C|^2 at ``point``."""
    return abs(transfer_matrix(point, method, **kwargs).C) ** 2
