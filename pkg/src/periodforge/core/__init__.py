"""Configuration, exceptions and the parameter tuple."""
