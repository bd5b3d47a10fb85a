"""Exception hierarchy shared by the library, the cli and the service."""
from __future__ import annotations

EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_INTERNAL = 70


class NetMisfitError(ValueError):
    exit_code = EXIT_INTERNAL
    reason = "error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def as_dict(self) -> dict:
        return {"reason": self.reason, "message": str(self), "details": self.details}


# data format

class ParseError(NetMisfitError):
    exit_code = EXIT_DATA
    reason = "parse_error"


class InvalidVertex(NetMisfitError):
    exit_code = EXIT_DATA
    reason = "invalid_vertex"


class InvalidIndex(NetMisfitError):
    exit_code = EXIT_DATA
    reason = "invalid_index"


class SelfLoop(NetMisfitError):
    exit_code = EXIT_DATA
    reason = "self_loop"


class InvalidLabel(NetMisfitError):
    exit_code = EXIT_DATA
    reason = "invalid_label"


class MissingLabels(NetMisfitError):
    exit_code = EXIT_DATA
    reason = "missing_labels"


class CapacityExceeded(NetMisfitError):
    exit_code = EXIT_DATA
    reason = "capacity_exceeded"


# usage

class UsageError(NetMisfitError):
    exit_code = EXIT_USAGE
    reason = "usage"


class InvalidArgument(NetMisfitError):
    exit_code = EXIT_USAGE
    reason = "invalid_argument"


class InvalidProbability(NetMisfitError):
    exit_code = EXIT_USAGE
    reason = "invalid_probability"


class IndivisibleN(NetMisfitError):
    exit_code = EXIT_USAGE
    reason = "indivisible_n"


class MismatchedSpecs(NetMisfitError):
    exit_code = EXIT_USAGE
    reason = "mismatched_specs"


# estimation; tallied as EstimationFailed by the Monte Carlo engine

class EstimationError(NetMisfitError):
    exit_code = EXIT_DATA
    reason = "estimation_failed"


class DegenerateEstimate(EstimationError):
    reason = "degenerate_estimate"


class EmptyBlock(EstimationError):
    reason = "empty_block"


class IsolatedVertex(EstimationError):
    reason = "isolated_vertex"


class SingularAn(EstimationError):
    reason = "singular_an"


class NonFiniteEvaluation(NetMisfitError):
    exit_code = EXIT_INTERNAL
    reason = "non_finite_evaluation"
