# Simulator configuration: YAML settings, overrides and validation
