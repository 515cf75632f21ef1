"""Event-based simulation and quantum-theory oracle for the neutron Cheshire-cat interferometer."""

__version__ = "0.1.0"
