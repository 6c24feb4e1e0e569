"""Exception hierarchy."""


class HaarSMError(Exception):
    """Base class for all errors raised by haar_sm."""


class ResolutionError(HaarSMError, ValueError):
    """A requested level is not representable at the available grid resolution."""


class GridAlignmentError(HaarSMError, ValueError):
    """A coordinate does not lie on the dyadic vertex grid."""


class AssumptionError(HaarSMError, ValueError):
    """A theorem-level diagnostic was called on an input violating its hypotheses.

    Raised, for example, when a continuity diagnostic receives an alpha-stable
    sheet, whose paths are not continuous.
    """


class BudgetError(HaarSMError, ValueError):
    """The requested dimension and resolution exceed the supported desk-scale budget."""


class ConfigError(HaarSMError, ValueError):
    """Invalid experiment configuration.

    Parameters
    ----------
    field : str
        Name of the offending configuration field.
    message : str
        Human readable explanation.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
