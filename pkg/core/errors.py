"""Exception hierarchy. Each error carries the process exit code the CLI uses."""


class PermcoverError(Exception):
    exit_code = 1


class InvalidInputError(PermcoverError, ValueError):
    exit_code = 2


class RangeError(PermcoverError, IndexError):
    exit_code = 2


class ResourceLimitError(PermcoverError):
    exit_code = 3

    def __init__(self, message, limit=None):
        super().__init__(message)
        self.limit = limit


class VerificationError(PermcoverError):
    exit_code = 1
