# Run report models and the simulation builder
