"""Monte-Carlo statevector study of Shor- vs Steane-style syndrome extraction
on the [[9,1,3]] Bacon-Shor code under a calibrated trapped-ion noise model."""

__version__ = "0.1.0"
