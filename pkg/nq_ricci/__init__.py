"""Generalized Ricci tensors of degree-2 NQ symplectic manifolds."""

__version__ = "0.1.0"
