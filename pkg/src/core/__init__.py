# Configuration, errors and the run orchestrator
