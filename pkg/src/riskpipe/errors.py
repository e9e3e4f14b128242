"""Exception hierarchy. Everything under DataError maps to CLI exit status 2."""


class RiskpipeError(Exception):
    pass


class DataError(RiskpipeError, ValueError):
    """Input data violates a contract (bad file, bad value, unusable sample)."""


class InsufficientData(DataError):
    pass


class DegenerateData(DataError):
    """A statistic is undefined for the given input (zero margin, constant column...)."""


class RankDeficient(DataError):
    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__("rank-deficient design; collinear columns: " + ", ".join(self.columns))
