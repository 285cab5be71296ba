"""Phase transitions of the Ising model on convergent graph sequences.

Kernel spectra, mean-field self-consistency, bifurcation diagrams, W-random
graph sampling, and Metropolis Monte Carlo on the sampled graphs.
"""

__version__ = "0.1.0"
