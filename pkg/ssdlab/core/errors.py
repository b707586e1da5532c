"""Exception types raised by ssdlab operations."""


class SsdlabError(Exception):
    """Base class for all ssdlab errors."""


class GameValidationError(SsdlabError, ValueError):
    """A matrix game is malformed or cannot be normalized."""


class ConfigurationError(SsdlabError, ValueError):
    """An environment, shaping, learner or experiment config is inconsistent."""


class ActionError(SsdlabError, ValueError):
    """A joint action is illegal for the current environment state."""


class EstimateError(SsdlabError, ValueError):
    """Estimate tables or visibility sets reference unknown agents."""


class TraceFormatError(SsdlabError, ValueError):
    """A scripted visibility trace file is malformed."""


class LogKindError(SsdlabError, ValueError):
    """A metric was asked for on an event log of the wrong environment."""
