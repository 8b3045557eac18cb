"""Exception hierarchy shared by all journeyshare modules.

Everything raised on purpose derives from JourneyShareError so the CLI can
map input problems to exit code 1 and internal invariant violations to 2.
"""


class JourneyShareError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(JourneyShareError):
    """A source file is syntactically malformed (message names file and line)."""


class ValidationError(JourneyShareError):
    """Parsed data violates a structural invariant (bad run, bad coordinate...)."""


class ReferentialError(JourneyShareError):
    """A record references an entity that does not exist (dangling stop id)."""


class InputError(JourneyShareError):
    """An operation was called with arguments outside its domain."""


class ConsistencyError(JourneyShareError):
    """An internal invariant that should hold by construction was violated."""


class ScenarioError(JourneyShareError):
    """A scenario cannot be generated (e.g. no admissible origin-destination pairs)."""
