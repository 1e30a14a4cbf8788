"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates an operation's contract (range, set membership)."""


class UnitError(ParameterError):
    """Arithmetic or a call mixed incompatible physical units."""


class ContractError(RuntimeError):
    """A stateful component was driven outside its allowed call sequence."""


class BusyError(ContractError):
    """A one-shot operation was requested while a previous one is in flight."""


class ScenarioError(ValueError):
    """A scenario file failed to parse or validate.

    Carries one message per offending field so the CLI can print
    actionable diagnostics.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
