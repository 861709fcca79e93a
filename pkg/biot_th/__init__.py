"""
Biot three-field solver

Finite-element solver and convergence-verification harness for Biot's
consolidation model in the displacement / total pressure / fluid pressure
formulation, with backward Euler and Crank-Nicolson coupled time stepping.
"""

__version__ = "1.0.0"
