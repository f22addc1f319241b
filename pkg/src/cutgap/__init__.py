"""Generator and numerical verifier for SDP integrality-gap instances of
Unique Games and Balanced Edge-Separator, built from the quotiented noisy
hypercube, with l1-embeddability measurement of the resulting negative-type
metrics."""

__version__ = "0.1.0"
