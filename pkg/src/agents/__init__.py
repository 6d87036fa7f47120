# Learning agents and policy persistence
