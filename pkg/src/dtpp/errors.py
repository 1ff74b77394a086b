"""Exception hierarchy shared by every module of the package."""


class ModelError(Exception):
    """Base class for errors raised while building or reasoning about a model."""


class ParameterError(ModelError, ValueError):
    """A distribution parameter lies outside its domain."""


class UnknownElementError(ModelError, LookupError):
    """A reference names an element that does not exist (yet)."""


class DecisionValueError(ModelError, ValueError):
    """A decision was not supplied, or was supplied outside its declared range."""


class EvidenceError(ModelError, ValueError):
    """Evidence cannot be used by the requested algorithm."""


class EvaluationError(ModelError):
    """A user function failed while a world was being evaluated.

    ``element_id`` is the id of the model element whose evaluation failed.
    """

    def __init__(self, element_id, cause):
        self.element_id = element_id
        self.cause = cause
        super().__init__(f"element {element_id}: {cause!r}")


class NotEnumerableError(ModelError):
    """Exact enumeration met an element with infinite or continuous support."""

    def __init__(self, element, element_id=None):
        self.element = element
        self.element_id = element_id
        where = f"element {element_id} " if element_id is not None else ""
        super().__init__(f"{where}({type(element).__name__}) has no finite support")


class DegenerateEvidenceError(ModelError):
    """Every attempted world had zero probability under the evidence."""


class OracleUnavailableError(ModelError):
    """Neither enumeration nor a closed-form hook can produce E[U | t, v]."""


class UnknownParentValueError(ModelError, KeyError):
    """An exact policy was queried with a parent value it has never seen."""
