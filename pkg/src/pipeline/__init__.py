# Baselines, experiment harness and report emission
