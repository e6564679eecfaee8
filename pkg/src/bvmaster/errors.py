"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front end.
"""


class BVError(Exception):
    exit_code = 1


class ParseError(BVError):
    """Malformed model or complex file. ``line``/``column`` are 1-based when known."""

    exit_code = 1

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class ModelInvalid(BVError):
    exit_code = 2


class ModelMismatch(ModelInvalid):
    pass


class DeltaSNonzero(ModelInvalid):
    pass


class MasterEquationFails(ModelInvalid):
    pass


class NonIsolatedSingularity(ModelInvalid):
    pass


class UnitInIdeal(ModelInvalid):
    pass


class OddVariablePresent(ModelInvalid):
    pass


class NotZeroDimensional(ModelInvalid):
    pass


class NonHomogeneousIdeal(ModelInvalid):
    pass


class NotNilpotent(ModelInvalid):
    def __init__(self, order, message=""):
        self.order = order
        super().__init__(f"nilpotence relation fails at order {order}" + (f": {message}" if message else ""))


class QuantumExtensionFails(ModelInvalid):
    pass


class UnboundedSlice(ModelInvalid):
    pass


class InternalIdentityViolation(BVError):
    """A relation that must hold exactly did not."""

    exit_code = 3

    def __init__(self, identity, detail=""):
        self.identity = identity
        self.detail = detail
        super().__init__(f"identity '{identity}' violated" + (f": {detail}" if detail else ""))


class HbarDivisionFails(InternalIdentityViolation):
    def __init__(self, detail=""):
        super().__init__("hbar-divisibility", detail)


class NotClosed(InternalIdentityViolation):
    def __init__(self, detail=""):
        super().__init__("Q-closedness", detail)


class OracleMismatch(BVError):
    exit_code = 4
