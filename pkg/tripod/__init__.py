"""Tripod-atom coherence simulator: chirped-pulse dynamics, dressed states and Doppler averaging."""

__version__ = "1.0.0"
