"""
What the converter does to a quantum state
==========================================

The converter acts on the signal mode as a pure-loss channel with
transmissivity eta. Fock states lose purity, coherent states only shrink,
and squeezing degrades towards the vacuum level.
"""

import numpy as np

from diamondqfc.states import (SqueezedCoherent, coherent_nmax, coherent_state, convert_coherent,
                               convert_fock, fidelity, fock_state, output_variances,
                               squeeze_parameter, squeezing_db)

etas = np.linspace(0.5, 1.0, 6)

print("eta   F(|1>)   F(|beta=1>)  F(|beta=10>)")
for eta in etas:
    row = [fidelity(convert_fock(1, eta), fock_state(1))]
    for beta in (1.0, 10.0):
        n = coherent_nmax(beta)
        row.append(fidelity(convert_coherent(beta, np.sqrt(eta), n_max=n), coherent_state(beta, n)))
    print(f"{eta:.1f}  " + "  ".join(f"{f:.6f}" for f in row))

# 6 dB of squeezing through the converter
spec = SqueezedCoherent(0.0, squeeze_parameter(6.0))
print("\neta   squeezing (dB)")
for eta in etas:
    print(f"{eta:.1f}  {squeezing_db(output_variances(spec, np.sqrt(eta)).var_x):.3f}")
