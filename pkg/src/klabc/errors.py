"""Error taxonomy shared by the CLI: configuration problems exit with 2,
data problems with 3, anything else with 4."""


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass
