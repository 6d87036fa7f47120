# Acceptance suite for study-level reproduction checks
