# A two-level system in an even superposition gets copied by a pointer
# qubit.  Afterwards the composite is still a single pure state, yet
# either half on its own is indistinguishable from a coin flip.  The
# interesting part is that "looks random because we ignored the partner"
# and "is genuinely an ensemble" are different physical situations, and
# the off-diagonal weight tells them apart.

import math

import numpy as np

from wfsim import (
    CompositeSpace,
    PointerCoupling,
    PureState,
    coherence_norm,
    couple_pointer,
    dephase,
    improper_mixture,
    purity,
)

space = CompositeSpace.qubits("s")
system = PureState(space, np.array([1.0, 1.0]) / math.sqrt(2))
print("system before coupling:", system.amplitude("0"), system.amplitude("1"))

coupled = couple_pointer(system, PointerCoupling("s", "p"))
print("factors after coupling:", coupled.space.labels)
print("amplitude of |00>:", coupled.amplitude("00").real)
print("amplitude of |11>:", coupled.amplitude("11").real)
print("amplitude of |01>:", coupled.amplitude("01").real, "(the pointer copied faithfully)")

rho = coupled.density()
print()
print("purity of the composite:   ", purity(rho))
print("purity of the system alone:", purity(improper_mixture(coupled, ("s",))))

# Same diagonal, very different operator.  dephase() kills every
# off-diagonal entry, which is exactly what writing the state as a
# classical ensemble over |00> and |11> would produce.
ensemble = dephase(rho, ("s", "p"))
print()
print("diagonal, entangled state:", np.round(rho.diagonal().real, 12))
print("diagonal, ensemble:       ", np.round(ensemble.diagonal().real, 12))
print("off-diagonal weight, entangled state:", coherence_norm(rho))
print("off-diagonal weight, ensemble:       ", coherence_norm(ensemble))
print("purity, ensemble:", purity(ensemble))

# The reduced state of the system is the same in both cases.  Whatever
# happened to the pointer, nobody looking at the system alone can tell
# the two apart.  Only a joint measurement can.
reduced_entangled = improper_mixture(coupled, ("s",))
print()
print("reduced diagonal (from the pure composite):", np.round(reduced_entangled.diagonal().real, 12))
