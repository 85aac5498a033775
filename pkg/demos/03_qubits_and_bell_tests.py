"""
Qubits and entanglement through imperfect converters
====================================================

Dual-rail qubits keep their logical state whenever both rails convert with
the same efficiency; unequal efficiencies tilt the state. After
post-selection on one photon per side, a converted Bell pair still
violates CHSH as long as the fidelity exceeds 2^(-1/4).
"""

import numpy as np

from diamondqfc.qubits import chsh_value, epr_postselect, path_channel

plus = np.full((2, 2), 0.5)
for cD, cU in [(0.9, 0.9), (1.0, 0.5)]:
    out = path_channel(plus, cD, cU)
    rho = out.logical / np.trace(out.logical)
    print(f"eta_D={cD ** 2:.2f} eta_U={cU ** 2:.2f}  leakage {out.leakage:.3f}  "
          f"logical state\n{np.round(rho.real, 4)}")

print("\neta_A  eta_B   P_c     F       S")
for a, b in [(0.9, 0.9), (0.9, 0.4), (0.9, 0.1), (0.9, 0.02)]:
    r = epr_postselect(a, a, b, b)
    print(f"{a:.2f}   {b:.2f}   {r.P_c:.4f}  {r.F:.4f}  {chsh_value(r.rho_post):.4f}"
          + ("  violates" if r.S > 2 else ""))
