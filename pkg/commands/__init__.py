# Subcommand modules; each exports COMMANDS for the CLI factory
from commands import analysis, experiments, plot, quality, reproduce, simulate

ALL_COMMANDS = [
    *analysis.COMMANDS,
    *quality.COMMANDS,
    *experiments.COMMANDS,
    *simulate.COMMANDS,
    *plot.COMMANDS,
    *reproduce.COMMANDS,
]
