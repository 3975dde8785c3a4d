"""Fermion (semi-infinite wedge) representations of affine Krichever-Novikov algebras."""
