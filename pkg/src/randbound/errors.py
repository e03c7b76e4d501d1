"""Exception hierarchy with stable error codes.

Every error carries a ``code`` string that is emitted verbatim in CLI JSON
output, and an ``exit_code`` (3 for data problems, 4 for computation
problems; argparse handles usage errors with exit code 2).
"""


class RandboundError(Exception):
    code = "Error"
    exit_code = 4


class DataError(RandboundError):
    """Invalid input data (CLI exit code 3)."""

    exit_code = 3


class ComputationError(RandboundError):
    """Invalid or infeasible computation request (CLI exit code 4)."""

    exit_code = 4


class DuplicateIdError(DataError):
    code = "DuplicateId"


class NonBinaryTreatmentError(DataError):
    code = "NonBinaryTreatment"


class MissingBlockError(DataError):
    code = "MissingBlock"


class DegenerateBlockError(DataError):
    code = "DegenerateBlock"


class NonFiniteOutcomeError(DataError):
    code = "NonFiniteOutcome"


class DegenerateDesignError(DataError):
    code = "DegenerateDesign"


class LengthMismatchError(DataError):
    code = "LengthMismatch"


class ParseError(DataError):
    code = "ParseError"

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyArmError(ComputationError):
    code = "EmptyArm"


class ZeroVarianceError(ComputationError):
    code = "ZeroVariance"


class ArmTooSmallError(ComputationError):
    code = "ArmTooSmall"


class SubsetSizeOutOfRangeError(ComputationError):
    code = "SubsetSizeOutOfRange"


class EnumerationTooLargeError(ComputationError):
    code = "EnumerationTooLarge"


class TooLargeForOracleError(ComputationError):
    code = "TooLargeForOracle"


class NonEIStatisticError(ComputationError):
    code = "NonEIStatistic"


class NonMonotonePValueError(ComputationError):
    code = "NonMonotonePValue"


class DegenerateScenarioError(ComputationError):
    code = "DegenerateScenario"
