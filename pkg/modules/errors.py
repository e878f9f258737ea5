"""Exceptions raised by the toolkit. Everything derives from SelfTrainError so the
command line can tell configuration mistakes apart from failed experiments."""


class SelfTrainError(Exception):
    pass


class DegenerateModelError(SelfTrainError):
    """A zero weight vector (or a zero input where a direction is needed)."""


class AllRejectedError(SelfTrainError):
    def __init__(self, threshold: float, round_index: int = None):
        self.threshold = threshold
        self.round_index = round_index
        message = "no sample passed the acceptance threshold {:g}".format(threshold)
        if round_index is not None:
            message += " in round {}".format(round_index)
        super().__init__(message)


class IllPosedError(SelfTrainError):
    pass


class InvalidResolutionError(SelfTrainError):
    pass


class DomainError(SelfTrainError):
    pass


class InfeasibleError(SelfTrainError):
    pass


class ConfigError(SelfTrainError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__("{}: {}".format(field, message))
