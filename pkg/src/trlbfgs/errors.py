"""Exception types shared across the solver modules."""


class EmptyHistoryError(RuntimeError):
    """An operation needing stored curvature pairs was called on an empty buffer."""


class DegenerateFactorizationError(RuntimeError):
    """A small matrix that should be invertible under the buffer invariants is not."""


class LineSearchError(RuntimeError):
    """The initial backtracking search found no decrease within the halving budget."""
