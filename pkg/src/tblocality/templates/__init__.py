"""Report templates bundled with the package."""
