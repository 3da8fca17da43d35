# Two agents share c_up |u u> + c_dn |d d> after one measures the other's
# qubit.  A Bell-basis measurement on the pair then either emits a photon
# toward a waiting detector or does not.  If the first agent's measurement
# really collapsed the pair, the photon arrives half the time.  If nothing
# collapsed, it arrives every single time.  A detector that always clicks
# is a loud, binary way to rule one reading out.

import math

import numpy as np

from wfsim import (
    SUBJECTIVE_COLLAPSE,
    UNITARY_ONLY,
    counterexample_frequencies,
    counterexample_probability,
    counterexample_run,
)

print("exact P(photon) if nothing collapses:   ", counterexample_probability(UNITARY_ONLY))
print("exact P(photon) if the measurement did: ", counterexample_probability(SUBJECTIVE_COLLAPSE))

rng = np.random.default_rng(7)
first_runs = "".join("!" if counterexample_run(UNITARY_ONLY, rng) else "." for _ in range(40))
print("\n40 unitary runs:  ", first_runs)
collapse_runs = "".join("!" if counterexample_run(SUBJECTIVE_COLLAPSE, rng) else "." for _ in range(40))
print("40 collapse runs: ", collapse_runs)

runs = 100_000
f_uni = counterexample_frequencies(UNITARY_ONLY, runs, np.random.default_rng(1))
f_col = counterexample_frequencies(SUBJECTIVE_COLLAPSE, runs, np.random.default_rng(2))
print(f"\nfrequency over {runs} runs, unitary:  {f_uni}")
print(f"frequency over {runs} runs, collapse: {f_col}")

# The split does not depend on fine tuning.  With lopsided branch weights
# the collapse reading still loses half the photons, while the unitary
# prediction moves but stays strictly larger.
amps = (math.sqrt(0.8), math.sqrt(0.2))
print("\nbranch weights 0.8 / 0.2:")
print("  unitary:  ", counterexample_probability(UNITARY_ONLY, amplitudes=amps))
print("  collapse: ", counterexample_probability(SUBJECTIVE_COLLAPSE, amplitudes=amps))
