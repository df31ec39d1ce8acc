"""Group-theoretic L2-minimal extensions over Hermitian symmetric domains.

Builds the holomorphic sections ``sigma(Z) = rho(Exp Z) v`` of the Hodge
bundle over the upper half plane and the Siegel spaces, and checks their
minimality numerically.
"""

__version__ = "0.1.0"
