"""Infrastructure utilities: logging, configuration, reports, resources."""
