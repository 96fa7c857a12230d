"""Exception hierarchy. The CLI maps these to exit codes."""


class SkeltagError(Exception):
    pass


class DataError(SkeltagError):
    """Malformed or unusable input data (corpus, tokenizer file, model file)."""


class CorpusError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TokenizerError(DataError):
    pass


class EncodingLengthError(DataError):
    pass


class ModelFormatError(DataError):
    pass


class AlignmentError(DataError):
    pass


class ModelError(SkeltagError):
    """Invalid model configuration or numeric failure during training."""


class ConfigError(ModelError):
    pass


class NumericError(ModelError):
    pass
