"""Exception hierarchy. Each category carries the exit code the CLI returns."""


class MorphGridError(Exception):
    """Base class for all expected failures"""

    exit_code = 1


class InputError(MorphGridError):
    """Something the user pointed us at is missing or unusable"""

    exit_code = 2


class FormatError(MorphGridError):
    """An input file does not follow its format

    Attributes:
        line (int): 1-based line number of the offending line, if known
    """

    exit_code = 3

    def __init__(self, message: str, line: int = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PipelineError(MorphGridError):
    """A stage ran but could not produce a meaningful result"""

    exit_code = 4


class ConfigError(InputError):
    pass


class MissingArtifactError(InputError):
    """An upstream artifact is absent

    Attributes:
        artifact (str): file name of the missing artifact
        stage (str): stage that produces it
    """

    def __init__(self, artifact: str, stage: str):
        self.artifact = artifact
        self.stage = stage
        super().__init__(
            f"missing artifact {artifact!r}; run the {stage!r} stage first"
        )


class AnnotationFormatError(FormatError):
    pass


class TableFormatError(FormatError):
    pass


class ModelFormatError(FormatError):
    pass


class EmptyVocabularyError(PipelineError):
    pass


class NoGoldParadigmsError(PipelineError):
    pass


class NothingToTrainError(PipelineError):
    pass


class NoAnalogiesError(PipelineError):
    pass


class EmptyEvaluationError(PipelineError):
    pass


class ClusteringError(PipelineError):
    pass
