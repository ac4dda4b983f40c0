# Mesh lab components: models, managers, agents
