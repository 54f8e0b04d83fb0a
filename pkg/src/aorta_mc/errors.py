"""Exception hierarchy shared by every stage of the checker."""


class AortaMCError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(AortaMCError):
    """Malformed input text. Carries a 1-based line/column when known."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class NonGroundNegation(AortaMCError):
    """A negated literal or inequality was reached with unbound variables."""


class UnboundActionVariable(ParseError):
    """A reasoning rule action mentions a variable bound nowhere else."""


class UnsupportedFeature(ParseError):
    """Agent program uses a construct outside the supported language subset."""


class UnknownRecipient(AortaMCError):
    pass


class UnknownAgent(AortaMCError):
    pass


class NonGroundAtom(ParseError):
    """A property atom still contains variables after macro expansion."""


class ConfigError(AortaMCError):
    """Invalid multi-agent configuration (names, roles, files)."""


class DuplicateAgentName(ConfigError):
    pass


class UnknownRoleInSpec(ConfigError):
    pass


class InactiveAgentChosen(AortaMCError):
    pass


class ResourceLimit(AortaMCError):
    """Exploration exceeded the configured state cap."""

    def __init__(self, cap):
        self.cap = cap
        super().__init__(f"state cap of {cap} exceeded")


class MalformedModel(AortaMCError):
    pass
