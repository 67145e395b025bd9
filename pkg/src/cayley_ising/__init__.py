"""Lee-Yang zeros of the Ising model on Cayley trees via circle-map renormalization."""

__version__ = "0.1.0"
