# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.


class TMNError(Exception):
    """Base class of every error raised by the toolkit"""

    message = "Unknown error"

    def __init__(self, message=None):
        if message is not None:
            self.message = message
        super().__init__(self.message)


class DimensionError(TMNError, ValueError):
    def __init__(self, primitive, message):
        self.primitive = primitive
        super().__init__(f"{primitive}: {message}")


class NumericError(TMNError, ArithmeticError):
    def __init__(self, primitive, message="non-finite value"):
        self.primitive = primitive
        super().__init__(f"{primitive}: {message}")


class ContractError(TMNError):
    pass


class VocabularyError(TMNError, IndexError):
    pass


class ConfigError(TMNError):
    pass


class ProtocolError(TMNError):
    pass


class FormatError(TMNError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line

        where = ""
        if path is not None:
            where = str(path)
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
