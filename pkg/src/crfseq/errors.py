"""Exception hierarchy shared by all modules, with process exit codes."""

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class CrfSeqError(Exception):
    """Base class for everything this package raises on purpose."""

    exit_code = EXIT_INTERNAL


class ConfigError(CrfSeqError):
    """Bad usage or configuration: unknown keys, missing resources, invalid values."""

    exit_code = EXIT_CONFIG


class DataError(CrfSeqError):
    """Malformed input data: corpora, embeddings, gazetteers, model files."""

    exit_code = EXIT_DATA


class ParseError(DataError):
    """Syntax error in a line-oriented input file; carries a 1-based line number."""

    def __init__(self, message, line=None, path=None):
        prefix = ""
        if path is not None:
            prefix += f"{path}: "
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)
        self.line = line
        self.path = path


class InternalError(CrfSeqError):
    """An invariant the implementation must maintain was violated."""

    exit_code = EXIT_INTERNAL
