"""
Single-mode quantum channel defined by a conversion coefficient.

The converted mode is ``a_out = c a_in + (vacuum)`` with ``eta = |c|^2``.
Density matrices are dense complex arrays in the Fock basis |0>..|N>.
With ``corrected=True`` a phase shifter is assumed to remove the phase of
``c`` so only ``|c|`` acts; otherwise ``out[m, n]`` picks up ``c^m conj(c)^n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from .errors import DomainError, ResourceError, TruncationError

DEFAULT_NMAX = 16
TAIL_TOL = 1e-8
ORACLE_NMAX = 20


def _effective(coeff, corrected):
    c = complex(coeff)
    if abs(c) > 1.0 + 1e-12:
        raise DomainError(f"|coeff| must not exceed 1, got {abs(c)}")
    return complex(abs(c)) if corrected else c


def _check_square(rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DomainError(f"density matrix must be square, got shape {rho.shape}")
    return rho


# -- input families ---------------------------------------------------------


@dataclass(frozen=True)
class Fock:
    n: int


@dataclass(frozen=True)
class Coherent:
    beta: complex


@dataclass(frozen=True)
class SqueezedCoherent:
    """D(alpha) S(r e^{i phi}) |0>; phi = 0 squeezes the X quadrature."""

    alpha: complex
    r: float
    phi: float = 0.0


@dataclass(frozen=True)
class Generic:
    rho: np.ndarray


@dataclass(frozen=True)
class QuadratureResult:
    var_x: float
    var_y: float


def squeezing_db(var):
    """Noise level ``-10 log10(sqrt(var) / (1/2))`` relative to vacuum, in dB."""
    return -10.0 * np.log10(np.sqrt(var) / 0.5)


def squeeze_parameter(db):
    """Squeezing parameter r giving ``db`` of quadrature noise reduction."""
    return db * np.log(10.0) / 10.0


def moments(rho):
    """Return ``(<a>, <a^2>, <a^dag a>)`` of a truncated density matrix."""
    rho = _check_square(rho)
    n = np.arange(rho.shape[0])
    a1 = np.sum(np.sqrt(n[1:]) * np.diagonal(rho, -1))
    a2 = np.sum(np.sqrt(n[2:] * n[1:-1]) * np.diagonal(rho, -2)) if rho.shape[0] > 2 else 0.0
    nbar = float(np.real(np.sum(n * np.diagonal(rho))))
    return complex(a1), complex(a2), nbar


def _variances_from_moments(a1, a2, nbar):
    var_x = 0.25 * (2.0 * a2.real + 2.0 * nbar + 1.0) - a1.real ** 2
    var_y = 0.25 * (-2.0 * a2.real + 2.0 * nbar + 1.0) - a1.imag ** 2
    return QuadratureResult(float(var_x), float(var_y))


def output_variances(input_spec, coeff, corrected=True) -> QuadratureResult:
    """Quadrature variances of the converted mode, vacuum variance 1/4.

    Closed forms for :class:`Fock`, :class:`Coherent` and
    :class:`SqueezedCoherent`; :class:`Generic` states go through the
    first and second moments ``<a>, <a^2>, <a^dag a>`` transformed as
    ``c<a>, c^2<a^2>, eta<a^dag a>``.
    """
    c = _effective(coeff, corrected)
    eta = abs(c) ** 2
    if isinstance(input_spec, Fock):
        v = 0.25 * (1.0 + 2.0 * input_spec.n * eta)
        return QuadratureResult(v, v)
    if isinstance(input_spec, Coherent):
        return QuadratureResult(0.25, 0.25)
    if isinstance(input_spec, SqueezedCoherent):
        r, phi = input_spec.r, input_spec.phi
        base = 1.0 + eta * (np.cosh(2 * r) - 1.0)
        cross = (c ** 2 * np.exp(1j * phi)).real * np.sinh(2 * r)
        return QuadratureResult(float(0.25 * (base - cross)), float(0.25 * (base + cross)))
    if isinstance(input_spec, Generic):
        rho = _check_square(input_spec.rho)
        leak = abs(1.0 - np.trace(rho).real)
        if leak >= TAIL_TOL:
            raise TruncationError(f"input trace deficit {leak:.3g} exceeds {TAIL_TOL:g}", leakage=leak)
        a1, a2, nbar = moments(rho)
        return _variances_from_moments(c * a1, c * c * a2, eta * nbar)
    raise DomainError(f"unsupported input specification {input_spec!r}")


# -- state conversion -----------------------------------------------------------


def _ladder_weights(eta, jmax):
    """S[j] = sum_l (-1)^l eta^l / (l! (j - l)!) = (1 - eta)^j / j! for j = 0..jmax.

    The binomial closed form avoids the cancellation of the alternating sum
    near eta = 1.
    """
    j = np.arange(jmax + 1)
    return np.exp(j * np.log1p(-eta) - gammaln(j + 1)) if eta < 1.0 else (j == 0).astype(float)


def convert_state(rho_in, coeff, corrected=True):
    """Density matrix of the converted mode, same truncation as the input.

    Evaluates

        out[m, n] = c^m c*^n / sqrt(m! n!) * sum_{k, l} (-1)^l |c|^{2l} / (l! k!)
                    * rho[k+l+m, k+l+n] * sqrt((k+l+m)! (k+l+n)!)

    grouping terms by ``j = k + l``; the l-sum runs over j - l = k >= 0.
    """
    rho = _check_square(rho_in)
    N = rho.shape[0] - 1
    c = _effective(coeff, corrected)
    eta = abs(c) ** 2
    S = _ladder_weights(eta, N)
    lf = gammaln(np.arange(N + 1) + 1)
    out = np.zeros_like(rho)
    cp = c ** np.arange(N + 1)
    for m in range(N + 1):
        for n in range(N + 1):
            jm = N - max(m, n)
            j = np.arange(jm + 1)
            w = np.exp(0.5 * (lf[j + m] - lf[m] + lf[j + n] - lf[n]))
            out[m, n] = cp[m] * np.conj(cp[n]) * np.sum(S[j] * w * rho[j + m, j + n])
    return out


def convert_fock(q, eta, n_max=None):
    """Binomial photon-number distribution B(q, eta) as a diagonal density matrix."""
    if q < 0 or not 0.0 <= eta <= 1.0:
        raise DomainError("need q >= 0 and 0 <= eta <= 1")
    n_max = q if n_max is None else n_max
    if n_max < q:
        raise TruncationError(f"n_max={n_max} cannot hold |{q}>", leakage=1.0)
    p = np.zeros(n_max + 1)
    if eta == 1.0:
        p[q] = 1.0
    else:
        for n in range(q + 1):
            p[n] = math.comb(q, n) * eta ** n * (1.0 - eta) ** (q - n)
    return np.diag(p).astype(complex)


def fock_state(q, n_max=None):
    n_max = q if n_max is None else n_max
    psi = np.zeros(n_max + 1, dtype=complex)
    psi[q] = 1.0
    return psi


def coherent_amplitudes(beta, n_max):
    n = np.arange(n_max + 1)
    beta = complex(beta)
    if beta == 0:
        out = np.zeros(n_max + 1, dtype=complex)
        out[0] = 1.0
        return out
    logmag = n * np.log(abs(beta)) - 0.5 * gammaln(n + 1) - 0.5 * abs(beta) ** 2
    return np.exp(logmag + 1j * n * np.angle(beta))


def coherent_nmax(beta, tail=TAIL_TOL, start=DEFAULT_NMAX):
    """Smallest truncation >= ``start`` whose omitted population is below ``tail``."""
    n_max = start
    while 1.0 - np.sum(np.abs(coherent_amplitudes(beta, n_max)) ** 2) >= tail:
        n_max += 8
    return n_max


def coherent_state(beta, n_max=None):
    """Truncated coherent ket; raises if the omitted tail exceeds ``TAIL_TOL``."""
    if n_max is None:
        n_max = coherent_nmax(beta)
    psi = coherent_amplitudes(beta, n_max)
    leak = 1.0 - float(np.sum(np.abs(psi) ** 2))
    if leak >= TAIL_TOL:
        raise TruncationError(f"coherent state |{beta}> leaks {leak:.3g} beyond n_max={n_max}",
                              leakage=leak)
    return psi


def convert_coherent(beta, coeff, corrected=True, n_max=None):
    """Converted coherent state |c beta><c beta| as a density matrix."""
    c = _effective(coeff, corrected)
    gamma = c * complex(beta)
    if n_max is None:
        n_max = max(coherent_nmax(beta), coherent_nmax(gamma))
    psi = coherent_state(gamma, n_max)
    return np.outer(psi, psi.conj())


def squeezed_coherent_state(alpha, r, phi=0.0, n_max=None, pad=60):
    """D(alpha) S(r e^{i phi})|0> computed in an enlarged space and truncated."""
    n_max = DEFAULT_NMAX if n_max is None else n_max
    big = n_max + pad
    a = np.diag(np.sqrt(np.arange(1, big + 1)), 1).astype(complex)
    ad = a.conj().T
    xi = r * np.exp(1j * phi)
    S = expm(0.5 * (np.conj(xi) * a @ a - xi * ad @ ad))
    D = expm(alpha * ad - np.conj(alpha) * a)
    vac = np.zeros(big + 1, dtype=complex)
    vac[0] = 1.0
    psi = (D @ S @ vac)[: n_max + 1]
    leak = 1.0 - float(np.sum(np.abs(psi) ** 2))
    if leak >= TAIL_TOL:
        raise TruncationError(f"squeezed state leaks {leak:.3g} beyond n_max={n_max}", leakage=leak)
    return psi


def fidelity(rho_out, psi):
    """sqrt(<psi| rho_out |psi>) against a pure reference ket."""
    rho = _check_square(rho_out)
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[0] != rho.shape[0]:
        raise DomainError("state and reference must share the truncation")
    return float(np.sqrt(max(np.real(psi.conj() @ rho @ psi), 0.0)))


def phase_rotation(rho, theta):
    """R rho R^dag with R = diag(exp(i n theta))."""
    rho = _check_square(rho)
    ph = np.exp(1j * theta * np.arange(rho.shape[0]))
    return ph[:, None] * rho * ph.conj()[None, :]


def vacuum_projector_series(n_max, terms=None):
    """Truncated sum_l (-1)^l / l! (a^dag)^l a^l; equals |0><0| in the full space."""
    a = np.diag(np.sqrt(np.arange(1, n_max + 1)), 1)
    ad = a.T
    terms = n_max + 1 if terms is None else terms
    out = np.zeros((n_max + 1, n_max + 1))
    al = np.eye(n_max + 1)
    adl = np.eye(n_max + 1)
    for l in range(terms):
        out += (-1.0) ** l / math.factorial(l) * adl @ al
        al, adl = a @ al, adl @ ad
    return out


# -- independent oracle ------------------------------------------------------------


def loss_channel_oracle(rho_in, eta, phase=0.0):
    """Beam splitter of transmissivity ``eta`` with a vacuum ancilla.

    Builds U = exp(theta (a^dag b - a b^dag)), cos^2 theta = eta, on the
    two-mode box (N+1)^2, applies it to rho (x) |0><0|, traces out the
    ancilla and appends ``exp(i (m - n) phase)``. The generator conserves
    total photon number, so every sector reachable from the input lies
    inside the box and the result is exact.
    """
    rho = _check_square(rho_in)
    N = rho.shape[0] - 1
    if N > ORACLE_NMAX:
        raise ResourceError(f"oracle limited to n_max <= {ORACLE_NMAX}, got {N}")
    if not 0.0 <= eta <= 1.0:
        raise DomainError("eta must lie in [0, 1]")
    d = N + 1
    a = np.diag(np.sqrt(np.arange(1, d)), 1)
    A = np.kron(a, np.eye(d))
    B = np.kron(np.eye(d), a)
    theta = np.arccos(np.sqrt(eta))
    U = expm(theta * (A.T @ B - A @ B.T))
    anc = np.zeros((d, d))
    anc[0, 0] = 1.0
    full = U @ np.kron(rho, anc) @ U.conj().T
    out = np.einsum("ikjk->ij", full.reshape(d, d, d, d))
    return phase_rotation(out, phase)


# -- serialisation and curves ---------------------------------------------------------


def state_to_json(rho):
    rho = _check_square(rho)
    return {"dim": int(rho.shape[0]),
            "entries": [[float(z.real), float(z.imag)] for z in rho.ravel()]}


def state_from_json(obj):
    dim = int(obj["dim"])
    entries = obj["entries"]
    if len(entries) != dim * dim:
        raise DomainError(f"expected {dim * dim} entries, got {len(entries)}")
    return np.array([complex(re, im) for re, im in entries]).reshape(dim, dim)


def fidelity_curves(etas):
    """Rows ``(eta, F_fock1, F_coh1, F_coh10)`` for converted |1> and |beta>."""
    rows = []
    for eta in etas:
        c = np.sqrt(eta)
        f1 = fidelity(convert_fock(1, eta), fock_state(1))
        fc = []
        for beta in (1.0, 10.0):
            n_max = coherent_nmax(beta)
            fc.append(fidelity(convert_coherent(beta, c, n_max=n_max), coherent_state(beta, n_max)))
        rows.append((float(eta), f1, fc[0], fc[1]))
    return rows
