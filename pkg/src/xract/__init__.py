"""xract: record, process, analyze, and serve XR user-action sessions."""

__version__ = "0.1.0"
