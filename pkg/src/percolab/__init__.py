"""percolab: lattice games, three-symbol cellular automata, and the exact
cylinder/weight-function calculus that certifies their long-run behaviour."""

__version__ = "0.1.0"
