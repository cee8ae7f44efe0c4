"""Discrete log-concavity on Z^d: p.m.f. construction and convolution,
convexity and extensibility decision procedures, entropy and covariance
diagnostics, B-spline smoothing, convex-geometry checks, and a verification
harness with a CLI front end (``lce``)."""

__version__ = "0.1.0"
