"""Code/test file pairing pipeline: corpus construction, a reference n-gram model and test-generation evaluation."""

__version__ = "0.1.0"
