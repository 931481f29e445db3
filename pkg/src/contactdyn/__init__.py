"""Contact Hamiltonian dynamics on Darboux space and the Hopf sphere: flows,
conformal factors, the group operations on contact dynamical systems, contact
lengths and distances, symplectization and reproducible experiments."""

__version__ = "0.1.0"
