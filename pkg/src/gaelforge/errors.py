"""Exception hierarchy; the CLI maps these onto exit codes."""


class GaelforgeError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(GaelforgeError):
    """Invalid manifest, config file or parameter. Exit code 2."""


class DataError(GaelforgeError):
    """Corrupt or inconsistent input data. Exit code 3."""


class NetworkError(GaelforgeError):
    """Judge endpoint unreachable or misbehaving. Exit code 4."""
