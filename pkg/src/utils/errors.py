from typing import Any, Dict, Optional


class ForecastError(Exception):
    """Base error carrying a machine-readable code and a process exit code"""
    code = "internal_error"
    exit_code = 1

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = dict(context or {})

    def to_dict(self) -> Dict[str, Any]:
        return {"code": self.code, "message": self.message, "context": self.context}


class ConfigurationError(ForecastError, ValueError):
    code = "configuration_error"
    exit_code = 2


class SizeError(ForecastError, ValueError):
    code = "size_error"
    exit_code = 3


class DomainError(ForecastError, ValueError):
    code = "domain_error"
    exit_code = 4


class DegenerateRangeError(ForecastError, ValueError):
    code = "degenerate_range"
    exit_code = 5


class InfeasibleAlphabetError(ForecastError, ValueError):
    code = "infeasible_alphabet"
    exit_code = 6


class ContractError(ForecastError, ValueError):
    code = "contract_error"
    exit_code = 7


class InputNotFoundError(ForecastError):
    code = "input_not_found"
    exit_code = 8


class InputParseError(ForecastError, ValueError):
    code = "parse_error"
    exit_code = 9
