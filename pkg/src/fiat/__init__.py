"""Fine-grained information audit: MI leakage estimation compiled to R1CS."""

__version__ = "0.1.0"
