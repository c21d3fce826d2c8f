"""Exception hierarchy. CLI exit codes key off these classes."""


class AmbiragError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class MissingSlot(AmbiragError):
    def __init__(self, name: str):
        super().__init__(f"missing prompt slot {name!r}")
        self.name = name


class BackendUnavailable(AmbiragError):
    exit_code = 2


class FixtureMiss(AmbiragError):
    exit_code = 2

    def __init__(self, key: str):
        super().__init__(f"no scripted completion for {key!r}")
        self.key = key


class BudgetExceeded(AmbiragError):
    exit_code = 2


class UnparsableVerdict(AmbiragError):
    def __init__(self, text: str):
        super().__init__(f"cannot read a yes/no verdict from {text[:60]!r}")
        self.text = text


class LengthMismatch(AmbiragError, ValueError):
    pass


class CorpusFormatError(AmbiragError):
    def __init__(self, line_no: int, detail: str):
        super().__init__(f"line {line_no}: {detail}")
        self.line_no = line_no


class DuplicatePassageId(AmbiragError):
    def __init__(self, pid: str):
        super().__init__(f"duplicate passage id {pid!r}")
        self.pid = pid


class UnknownPassage(AmbiragError, KeyError):
    pass


class EmptyVerdicts(AmbiragError, ValueError):
    pass


class IdMismatch(AmbiragError):
    pass


class NegativeInput(AmbiragError, ValueError):
    pass


class ConfigError(AmbiragError):
    pass
