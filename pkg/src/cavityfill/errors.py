"""Package exception types, split along the CLI's exit-code boundary."""


class DataError(ValueError):
    """Malformed or inconsistent input data (files, shapes, labels)."""


class NumericError(ArithmeticError):
    """Numeric failure: singular fits, non-finite losses, bad parameters."""


class TrainingDiverged(NumericError):
    """Loss became non-finite during training."""

    def __init__(self, epoch, batch_index):
        self.epoch = epoch
        self.batch_index = batch_index
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch_index}")
