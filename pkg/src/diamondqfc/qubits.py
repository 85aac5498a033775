"""
Qubit channels built from the single-mode conversion map.

Single-rail qubits live in span{|0>, |1>} of one mode. Dual-rail (path or
polarization) qubits use two modes D and U with logical |0> = |1_D 0_U>
and |1> = |0_D 1_U>; two-mode states are indexed by ``2 * n_D + n_U``.
Vacuum leakage is returned alongside every output and never renormalised
away; post-selection is a separate step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResourceError

MAX_MODES = 12
SQRT2 = np.sqrt(2.0)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# two-mode indices (2 n_D + n_U) of the dual-rail logical states and vacuum
_VAC, _L1, _L0 = 0, 1, 2


@dataclass(frozen=True)
class ChannelOutput:
    """Channel output with its vacuum leakage (1 - trace of ``logical``)."""

    rho: np.ndarray        # full output in the physical basis of the encoding
    logical: np.ndarray    # block on the logical subspace (unnormalised)
    leakage: float


def _coeff(c, corrected):
    c = complex(c)
    if abs(c) > 1.0 + 1e-12:
        raise DomainError(f"|coeff| must not exceed 1, got {abs(c)}")
    return complex(abs(c)) if corrected else c


def _qubit(rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise DomainError(f"qubit density matrix must be 2x2, got {rho.shape}")
    return rho


def single_rail_channel(rho, coeff, corrected=True) -> ChannelOutput:
    """[[r00 + (1-eta) r11, c* r01], [c r10, eta r11]] on a photon-number qubit."""
    rho = _qubit(rho)
    c = _coeff(coeff, corrected)
    eta = abs(c) ** 2
    out = np.array([[rho[0, 0] + (1 - eta) * rho[1, 1], np.conj(c) * rho[0, 1]],
                    [c * rho[1, 0], eta * rho[1, 1]]])
    return ChannelOutput(out, out, 0.0)


def _dual_rail(rho, cD, cU):
    eD, eU = abs(cD) ** 2, abs(cU) ** 2
    out = np.zeros((4, 4), dtype=complex)
    out[_L0, _L0] = eD * rho[0, 0]
    out[_L1, _L1] = eU * rho[1, 1]
    out[_L0, _L1] = cD * np.conj(cU) * rho[0, 1]
    out[_L1, _L0] = np.conj(cD) * cU * rho[1, 0]
    out[_VAC, _VAC] = (1 - eD) * rho[0, 0] + (1 - eU) * rho[1, 1]
    logical = out[np.ix_([_L0, _L1], [_L0, _L1])].copy()
    return ChannelOutput(out, logical, float(out[_VAC, _VAC].real))


def path_channel(rho, coeff_D, coeff_U, corrected=True) -> ChannelOutput:
    """Path qubit through two converters; ``rho`` is the 2x2 logical input.

    The full output is the two-mode 4x4 matrix including the
    |0_D 0_U><0_D 0_U| leakage term.
    """
    rho = _qubit(rho)
    return _dual_rail(rho, _coeff(coeff_D, corrected), _coeff(coeff_U, corrected))


def polarization_channel(rho, coeff_D, coeff_U, corrected=True) -> ChannelOutput:
    """Polarization qubit (H = logical 0 on path D, V = logical 1 on path U).

    The first beam-splitter pass multiplies the logical coherence by ``i``
    and the recombining pass by another ``i``. With ``corrected=True`` the
    phase shifters remove these factors together with the coefficient
    phases; otherwise the net ``-1`` is applied on top of the path map.
    ``rho`` and ``logical`` of the result are the 2x2 (H, V) block.
    """
    rho = _qubit(rho)
    cD, cU = _coeff(coeff_D, corrected), _coeff(coeff_U, corrected)
    if not corrected:
        cU = -cU
    res = _dual_rail(rho, cD, cU)
    return ChannelOutput(res.logical, res.logical, res.leakage)


def _mode_superoperator(c):
    """E[m, n, q, r] for one mode: maps rho_in[q, r] to rho_out[m, n]."""
    eta = abs(c) ** 2
    E = np.zeros((2, 2, 2, 2), dtype=complex)
    E[0, 0, 0, 0] = 1.0
    E[0, 0, 1, 1] = 1.0 - eta
    E[0, 1, 0, 1] = np.conj(c)
    E[1, 0, 1, 0] = c
    E[1, 1, 1, 1] = eta
    return E


def n_qubit_channel(rho, coeffs, corrected=True) -> ChannelOutput:
    """Single-rail N-mode channel, each mode with its own coefficient.

    ``rho`` is 2^N x 2^N with mode 1 the most significant bit. Implements the
    product form sum_{q,r} rho[q, r] prod_j E_j[m_j, n_j, q_j, r_j] by
    contracting one mode at a time.
    """
    coeffs = [_coeff(c, corrected) for c in coeffs]
    N = len(coeffs)
    if N > MAX_MODES:
        raise ResourceError(f"dense N-mode channel limited to N <= {MAX_MODES}, got {N}")
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2 ** N, 2 ** N):
        raise DomainError(f"expected a {2 ** N}x{2 ** N} matrix for {N} modes, got {rho.shape}")
    t = rho.reshape((2,) * (2 * N))
    for j, c in enumerate(coeffs):
        E = _mode_superoperator(c)
        # contract the input indices of mode j (axes j and N + j)
        t = np.tensordot(E, t, axes=([2, 3], [j, N + j]))
        t = np.moveaxis(t, [0, 1], [j, N + j])
    out = t.reshape(2 ** N, 2 ** N)
    return ChannelOutput(out, out, float(1.0 - np.trace(out).real))


def dual_rail_embedding(n_qubits):
    """Isometry columns mapping logical |s_1..s_N> to modes |s_1 (1-s_1) ... s_N (1-s_N)>.

    Mode order is (A_1, B_1, ..., A_N, B_N); logical 1 puts the photon in A,
    so A plays the role of U and B the role of D in :func:`path_channel`.
    """
    if 2 * n_qubits > MAX_MODES:
        raise ResourceError(f"dual-rail embedding of {n_qubits} qubits exceeds {MAX_MODES} modes")
    V = np.zeros((4 ** n_qubits, 2 ** n_qubits))
    for s in range(2 ** n_qubits):
        bits = [(s >> (n_qubits - 1 - k)) & 1 for k in range(n_qubits)]
        idx = 0
        for b in bits:
            idx = (idx << 2) | (b << 1) | (1 - b)
        V[idx, s] = 1.0
    return V


def n_qubit_dual_rail_channel(rho, coeffs_A, coeffs_B, corrected=True) -> ChannelOutput:
    """Path or polarization N-qubit channel via the single-rail embedding.

    ``rho`` is the 2^N logical state. ``rho`` of the result is the full
    2N-mode output; ``logical`` is its projection back onto the
    one-photon-per-pair subspace.
    """
    rho = np.asarray(rho, dtype=complex)
    n = len(coeffs_A)
    if len(coeffs_B) != n:
        raise DomainError("coeffs_A and coeffs_B must have equal length")
    V = dual_rail_embedding(n)
    modes = [c for pair in zip(coeffs_A, coeffs_B) for c in pair]
    res = n_qubit_channel(V @ rho @ V.T, modes, corrected)
    logical = V.T @ res.rho @ V
    return ChannelOutput(res.rho, logical, float(1.0 - np.trace(logical).real))


# -- EPR pairs and CHSH -----------------------------------------------------------


A0, A1 = PAULI_Z, PAULI_X
B0, B1 = (PAULI_Z + PAULI_X) / SQRT2, (PAULI_Z - PAULI_X) / SQRT2


def chsh_value(rho):
    """S = <A0 B0> + <A0 B1> + <A1 B0> - <A1 B1> with A = (Z, X), B = (Z +/- X)/sqrt2."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise DomainError("CHSH needs a two-qubit 4x4 density matrix")
    bell = np.kron(A0, B0) + np.kron(A0, B1) + np.kron(A1, B0) - np.kron(A1, B1)
    return float(np.real(np.trace(rho @ bell)))


PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / SQRT2
PHI_MINUS = np.array([1, 0, 0, -1], dtype=complex) / SQRT2
PSI_PLUS = np.array([0, 1, 1, 0], dtype=complex) / SQRT2
PSI_MINUS = np.array([0, 1, -1, 0], dtype=complex) / SQRT2
BELL_BASIS = np.column_stack([PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS])


def to_bell_basis(rho):
    """Matrix elements in the ordered basis (Phi+, Phi-, Psi+, Psi-)."""
    return BELL_BASIS.conj().T @ np.asarray(rho, dtype=complex) @ BELL_BASIS


@dataclass(frozen=True)
class EprResult:
    rho_post: np.ndarray   # 4x4 in |q1 q2>, index 2 q1 + q2
    P_c: float
    F: float
    S: float
    branch: int            # +1 if eta_bar_B > eta_bar_A, -1 if smaller, 0 if equal
    eta_bar_a: float
    eta_bar_b: float


def epr_postselect(eta_A1, eta_A2, eta_B1, eta_B2) -> EprResult:
    """Post-selected |Phi+> after four converters (A carries logical 1, B logical 0)."""
    etas = np.array([eta_A1, eta_A2, eta_B1, eta_B2], dtype=float)
    if np.any(etas < 0) or np.any(etas > 1):
        raise DomainError("conversion efficiencies must lie in [0, 1]")
    a = float(np.sqrt(eta_A1 * eta_A2))
    b = float(np.sqrt(eta_B1 * eta_B2))
    norm = a * a + b * b
    if norm == 0.0:
        raise DomainError("no coincidences: post-selection undefined when eta_bar_A = eta_bar_B = 0")
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = b * b / norm
    rho[3, 3] = a * a / norm
    rho[0, 3] = rho[3, 0] = a * b / norm
    F = (a + b) / np.sqrt(2.0 * norm)
    S = 2.0 * SQRT2 * F * F
    return EprResult(rho, 0.5 * norm, float(F), float(S), int(np.sign(b - a)), a, b)


def epr_branch_state(F, sign):
    """F^2 |Phi+><Phi+| + (1-F^2) |Phi-><Phi-| +/- F sqrt(1-F^2) (|Phi+><Phi-| + h.c.)."""
    if not 0.0 <= F <= 1.0 or sign not in (-1, 1):
        raise DomainError("need 0 <= F <= 1 and sign in {-1, +1}")
    g = np.sqrt(1.0 - F * F)
    pp, mm = np.outer(PHI_PLUS, PHI_PLUS), np.outer(PHI_MINUS, PHI_MINUS)
    pm = np.outer(PHI_PLUS, PHI_MINUS)
    return F * F * pp + g * g * mm + sign * F * g * (pm + pm.T)


def epr_surface(grid):
    """Rows ``(eta_bar_a, eta_bar_b, F, S)`` over a square grid; the (0, 0) corner is skipped."""
    rows = []
    for a in grid:
        for b in grid:
            if a == 0 and b == 0:
                continue
            r = epr_postselect(a, a, b, b)
            rows.append((float(a), float(b), r.F, r.S))
    return rows
