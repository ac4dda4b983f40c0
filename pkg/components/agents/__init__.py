# Agents: simulation, live transport, calibration, export
