# Managers: configuration, scenario files, event bus
