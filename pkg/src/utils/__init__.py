# Shared helpers: logging setup and the simulator error hierarchy
