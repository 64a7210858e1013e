"""QRAM and look-up-table synthesis from GF(2) encoding polynomials, with simulation and cost estimation."""

__version__ = "0.1.0"
