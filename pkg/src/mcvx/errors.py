class ShapeError(ValueError):
    pass


class UnknownAtomError(KeyError):
    pass


class DomainError(ArithmeticError):
    """An atom was evaluated outside its domain (e.g. sqrt of a negative)."""

    def __init__(self, atom: str, detail: str = ""):
        self.atom = atom
        msg = f"domain error in {atom}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class UnboundError(LookupError):
    pass


class NonDifferentiableError(ArithmeticError):
    def __init__(self, atom: str, detail: str = ""):
        self.atom = atom
        msg = f"{atom} is not differentiable at the current point"
        super().__init__(f"{msg} ({detail})" if detail else msg)


class NotDMCPError(ValueError):
    pass


class CanonicalizationError(ValueError):
    pass
