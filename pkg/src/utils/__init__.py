# Logging, metrics and keyed RNG helpers
