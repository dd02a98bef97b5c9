"""Exception hierarchy shared by all modules."""


class LoopsatError(Exception):
    pass


class InvalidParameter(LoopsatError, ValueError):
    pass


class AlgebraError(LoopsatError, ValueError):
    """Malformed algebra, unknown operation or unbound variable."""


class BudgetExceeded(LoopsatError):
    """A search or closure hit its configured budget before deciding.

    This is never a negative answer: callers must treat it as "undecided".
    """

    def __init__(self, message, explored=None):
        super().__init__(message)
        self.explored = explored


class EdgeCapExceeded(BudgetExceeded):
    pass


class CapExceeded(BudgetExceeded):
    """Subpower closure stopped at its element or application cap."""

    def __init__(self, message, size=None, applications=None):
        super().__init__(message, explored=applications)
        self.size = size
        self.applications = applications


class VerificationFailed(LoopsatError):
    """An explicit construction failed its independent check.

    ``counterexample`` holds the offending edge, walk or assignment.
    """

    def __init__(self, message, counterexample=None):
        super().__init__(message)
        self.counterexample = counterexample
