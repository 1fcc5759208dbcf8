"""Planning and packet-level verification for multi-rate cyclic-forwarding IP networks."""

__version__ = "0.1.0"
