"""
Atomic level schemes, decoherence rates and the zeroth-order steady state.

All rates, detunings and Rabi frequencies are expressed in units of
``GAMMA_MHZ`` (the 780 nm D2 linewidth, 2*pi*6.063 MHz). The propagation
coordinate is normalised to the medium length, so the microscopic constants
(atom number, length, coupling constants) only enter through the optical
depths in :class:`CouplingScales`.

Level labels follow the diamond scheme::

    |4>  (6S1/2 or 4D3/2)
    |2> 5P1/2       |3> 5P3/2
    |1> 5S1/2

probe 1-2 (795 nm), coupling 1-3 (780 nm), driving 2-4, signal 3-4 (telecom).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError

#: Data-table version; bump whenever a constant below changes.
SCHEME_TABLE_VERSION = "1"

#: Reference linewidth in MHz (angular frequency / 2*pi).
GAMMA_MHZ = 6.063

# Fine-structure decay rates in MHz, squared transition coefficients
# (a31^2, a21^2, a42^2, a43^2) and wavelengths in nm (probe, coupling,
# driving, signal).
_SCHEME_TABLE = {
    "E1367": {
        "gamma_fs": {"780": 6.063, "795": 5.745, "drive": 1.008, "signal": 2.087},
        "coeff_sq": {"31": 1.0, "21": 0.5, "42": 0.5, "43": 0.5},
        "lambdas": {"p": 794.979, "c": 780.241, "d": 1323.88, "s": 1366.87},
    },
    "C1529": {
        "gamma_fs": {"780": 6.063, "795": 5.745, "drive": 1.703, "signal": 0.315},
        "coeff_sq": {"31": 1.0, "21": 0.5, "42": 0.5, "43": 0.2},
        "lambdas": {"p": 794.979, "c": 780.241, "d": 1475.64, "s": 1529.26},
    },
}

_BAND_ALIASES = {
    "e": "E1367", "e1367": "E1367", "e-band": "E1367", "1367": "E1367",
    "c": "C1529", "c1529": "C1529", "c-band": "C1529", "1529": "C1529",
}

GAMMA_CONVENTIONS = ("fine_structure", "partial")
ALPHA_C_RULES = ("dipole", "cross_section")

#: Conventions selected by :func:`diamondqfc.calibration.calibrate_conventions`
#: against the E-band OD=50 reference point and frozen here.
DEFAULT_GAMMA_CONVENTION = "fine_structure"
DEFAULT_ALPHA_C_RULE = "dipole"


def canonical_band(band: str) -> str:
    """Map a user band tag ('e', 'C1529', ...) to its canonical name."""
    key = str(band).strip()
    if key in _SCHEME_TABLE:
        return key
    try:
        return _BAND_ALIASES[key.lower()]
    except KeyError:
        raise ConfigurationError(f"unknown band tag {band!r}; expected E1367 or C1529") from None


@dataclass(frozen=True)
class AtomicScheme:
    """Constants of one diamond-type transition scheme.

    ``gamma_fs`` holds the fine-structure decay rates keyed by line
    ('780', '795', 'drive', 'signal'), already divided by ``GAMMA_MHZ``.
    ``coeff_sq`` holds the squared transition coefficients keyed by level
    pair ('31', '21', '42', '43').
    """

    band: str
    gamma_fs: dict
    coeff_sq: dict
    lambdas: dict

    @property
    def Gamma31(self) -> float:
        return self.coeff_sq["31"] * self.gamma_fs["780"]

    @property
    def Gamma21(self) -> float:
        return self.coeff_sq["21"] * self.gamma_fs["795"]

    @property
    def Gamma42(self) -> float:
        return self.coeff_sq["42"] * self.gamma_fs["drive"]

    @property
    def Gamma43(self) -> float:
        return self.coeff_sq["43"] * self.gamma_fs["signal"]

    @property
    def Gamma780(self) -> float:
        return self.gamma_fs["780"]

    def level_decay(self, convention: str = DEFAULT_GAMMA_CONVENTION) -> np.ndarray:
        """Total radiative decay rate out of each level |1>..|4>.

        ``"partial"`` counts only the decay channels kept inside the modelled
        sub-Zeeman chain; ``"fine_structure"`` uses the full fine-structure
        rate of each excited manifold.
        """
        if convention == "partial":
            return np.array([0.0, self.Gamma21, self.Gamma31, self.Gamma42 + self.Gamma43])
        if convention == "fine_structure":
            g = self.gamma_fs
            return np.array([0.0, g["795"], g["780"], g["drive"] + g["signal"]])
        raise ConfigurationError(f"unknown decoherence convention {convention!r}")


def build_scheme(band: str) -> AtomicScheme:
    """Return the built-in scheme for ``band`` with rates in units of Gamma."""
    name = canonical_band(band)
    entry = _SCHEME_TABLE[name]
    rates = {k: v / GAMMA_MHZ for k, v in entry["gamma_fs"].items()}
    return AtomicScheme(name, rates, dict(entry["coeff_sq"]), dict(entry["lambdas"]))


@dataclass(frozen=True)
class GammaMatrix:
    """Symmetric matrix of coherence decay rates gamma_ij (units of Gamma).

    Indices are 1-based level labels: ``gm[2, 1]`` is gamma_21.
    """

    values: np.ndarray
    dephasing: float = 0.0
    convention: str = DEFAULT_GAMMA_CONVENTION

    def __getitem__(self, ij):
        i, j = ij
        return float(self.values[i - 1, j - 1])


def decoherence_rates(scheme: AtomicScheme, gamma_deph: float = 0.0,
                      convention: str = DEFAULT_GAMMA_CONVENTION) -> GammaMatrix:
    """Coherence decay rates gamma_ij = G(i) + G(j) + gamma_deph.

    G(i) is the total radiative decay rate out of level i (see
    :meth:`AtomicScheme.level_decay`); the optional uniform dephasing is
    added to every off-diagonal element.
    """
    if not gamma_deph >= 0:
        raise DomainError(f"dephasing rate must be nonnegative, got {gamma_deph}")
    out = scheme.level_decay(convention)
    g = out[:, None] + out[None, :] + gamma_deph
    np.fill_diagonal(g, 0.0)
    g.setflags(write=False)
    return GammaMatrix(g, float(gamma_deph), convention)


@dataclass(frozen=True)
class CouplingScales:
    """Probe, coupling and signal optical depths."""

    alpha: float
    alpha_c: float
    alpha_s: float


def od_scalings(scheme: AtomicScheme, alpha: float, rule: str = DEFAULT_ALPHA_C_RULE,
                alpha_c_override: float | None = None,
                alpha_s_override: float | None = None) -> CouplingScales:
    """Derive the coupling and signal optical depths from the probe OD.

    The squared field-atom coupling of a sub-Zeeman transition scales as
    (partial decay rate) * wavelength^2, which fixes ``alpha_s``. For the
    coupling field two rules are available:

    ``"dipole"``
        alpha_c / alpha = (lambda_c / lambda_p)^2 * Gamma_780 / Gamma_21
    ``"cross_section"``
        alpha_c / alpha = (|a31|^2 / |a21|^2) * (lambda_c / lambda_p)^2

    Explicit overrides take precedence over either rule.
    """
    if not alpha >= 0:
        raise DomainError(f"optical depth must be nonnegative, got {alpha}")
    lam = scheme.lambdas
    wl = (lam["c"] / lam["p"]) ** 2
    if rule == "dipole":
        ratio_c = wl * scheme.Gamma780 / scheme.Gamma21
    elif rule == "cross_section":
        ratio_c = wl * scheme.coeff_sq["31"] / scheme.coeff_sq["21"]
    else:
        raise ConfigurationError(f"unknown alpha_c rule {rule!r}")
    ratio_s = scheme.Gamma43 * lam["s"] ** 2 / (scheme.Gamma21 * lam["p"] ** 2)
    alpha_c = alpha * ratio_c if alpha_c_override is None else float(alpha_c_override)
    alpha_s = alpha * ratio_s if alpha_s_override is None else float(alpha_s_override)
    return CouplingScales(float(alpha), alpha_c, alpha_s)


@dataclass(frozen=True)
class GroundManifoldState:
    """Zeroth-order populations and coherence of the |1>-|3> manifold."""

    p11: float
    p33: float
    c13: complex

    @property
    def c31(self) -> complex:
        return np.conj(self.c13)


def ground_manifold(Gamma31, gamma31, delta_c, omega_c):
    """Vectorised zeroth-order steady state; returns ``(p11, c13)`` arrays."""
    omega_c = np.asarray(omega_c)
    lorentz = Gamma31 * (gamma31 ** 2 + 4.0 * delta_c ** 2)
    sat = gamma31 * np.abs(omega_c) ** 2
    denom = lorentz + 2.0 * sat
    p11 = (lorentz + sat) / denom
    c13 = 1j * Gamma31 * (gamma31 + 2j * delta_c) * omega_c / denom
    return p11, c13


def zeroth_order_steady_state(scheme: AtomicScheme, gamma: GammaMatrix, delta_c: float,
                              omega_c: complex) -> GroundManifoldState:
    """Steady state of the coupling-dressed |1>-|3> transition."""
    Gamma31, gamma31 = scheme.Gamma31, gamma[3, 1]
    assert Gamma31 > 0 and gamma31 > 0, "Gamma_31 and gamma_31 must be positive"
    p11, c13 = ground_manifold(Gamma31, gamma31, delta_c, omega_c)
    p11 = float(p11)
    return GroundManifoldState(p11, 1.0 - p11, complex(c13))


_OVERRIDE_KEYS = {"band", "gamma_fs", "coeff_sq", "lambdas", "alpha_c_override",
                  "alpha_s_override", "gamma_deph"}


@dataclass(frozen=True)
class SchemeConfig:
    """A scheme plus the knobs an override file may set."""

    scheme: AtomicScheme
    gamma_deph: float = 0.0
    alpha_c_override: float | None = None
    alpha_s_override: float | None = None
    extra: dict = field(default_factory=dict)


def load_scheme_override(path_or_dict) -> SchemeConfig:
    """Build a scheme from a JSON override file (or an already-parsed dict).

    Keys: ``band`` (required), ``gamma_fs`` (MHz, partial dict merged over
    the built-in table), ``coeff_sq``, ``lambdas`` (nm), ``alpha_c_override``,
    ``alpha_s_override``, ``gamma_deph`` (units of Gamma).
    """
    if isinstance(path_or_dict, (str, Path)):
        try:
            data = json.loads(Path(path_or_dict).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read scheme override: {exc}") from exc
    else:
        data = dict(path_or_dict)
    unknown = set(data) - _OVERRIDE_KEYS
    if unknown:
        raise ConfigurationError(f"unknown scheme override keys: {sorted(unknown)}")
    if "band" not in data:
        raise ConfigurationError("scheme override requires 'band'")
    base = build_scheme(data["band"])
    gamma_fs = dict(base.gamma_fs)
    for k, v in data.get("gamma_fs", {}).items():
        if k not in gamma_fs:
            raise ConfigurationError(f"unknown gamma_fs line {k!r}")
        gamma_fs[k] = float(v) / GAMMA_MHZ
    coeff_sq = dict(base.coeff_sq)
    for k, v in data.get("coeff_sq", {}).items():
        if k not in coeff_sq:
            raise ConfigurationError(f"unknown coeff_sq pair {k!r}")
        coeff_sq[k] = float(v)
    lambdas = dict(base.lambdas)
    for k, v in data.get("lambdas", {}).items():
        if k not in lambdas:
            raise ConfigurationError(f"unknown wavelength {k!r}")
        lambdas[k] = float(v)
    scheme = replace(base, gamma_fs=gamma_fs, coeff_sq=coeff_sq, lambdas=lambdas)
    for name in ("Gamma21", "Gamma31", "Gamma42", "Gamma43"):
        if not getattr(scheme, name) > 0:
            raise ConfigurationError(f"{name} must be positive")
    deph = float(data.get("gamma_deph", 0.0))
    if deph < 0:
        raise DomainError("gamma_deph must be nonnegative")
    return SchemeConfig(scheme, deph, data.get("alpha_c_override"), data.get("alpha_s_override"))
