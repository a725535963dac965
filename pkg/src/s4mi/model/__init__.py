"""Model package for domain types, configuration and errors."""
