# RELOAD: reinforcement-learning driven load test generation
