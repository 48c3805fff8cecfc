"""Custom classes for Shrinker Lab reports.

These classes define the data structures used to collect results from
checks and experiments. Every report can be rendered as a 'dict' (for
JSON output) or as a 'namedtuple' (for quick access in tests and in the
CLI summary).

Dependencies:
    - numpy - only to normalize numpy scalars and arrays for JSON output
"""

import json
import math

from collections import namedtuple

import numpy as np

__all__ = [
    'LabReport',
    'InequalityReport',
    'BoundFitReport',
    'LabData',
    'ReportUnit',
    'to_jsonable',
    'dump_json',
]


# =========================================================
#              H E L P E R   F U N C T I O N S
# =========================================================
def to_jsonable(obj):
    """Convert nested report content into plain JSON types.

    Non-finite floats become the strings 'inf', '-inf' and 'nan' so that
    the output stays strict JSON.
    """
    if isinstance(obj, dict):
        return {str(key): to_jsonable(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(val) for val in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(val) for val in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        val = float(obj)
        if math.isnan(val):
            return 'nan'
        if math.isinf(val):
            return 'inf' if val > 0 else '-inf'
        return val
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, 'as_dict'):
        return to_jsonable(obj.as_dict())
    return str(obj)


def dump_json(obj):
    """Serialize to UTF-8 JSON text with sorted keys."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + '\n'


# =========================================================
#                     M A I N   C L A S S
# =========================================================
# Common report structure
ReportUnit = namedtuple('ReportUnit', 'name passed values params provenance')


class LabReport:
    """Data structure for a single check or experiment result.

    Attributes:
        name:       'str' report name (e.g. "entropy")
        passed:     'bool' verdict, or 'None' when the report only records data
        values:     'dict' with computed values
        params:     'dict' with parameters used
        provenance: 'list' of closed-form oracles used for comparison

    Methods:
        as_dict: return report attributes as 'dict'
        as_tuple: return report attributes as 'namedtuple' 'ReportUnit'
    """

    def __init__(self, name, passed=None, values=None, params=None, provenance=None):
        self.name = name
        self.passed = passed
        self.values = dict(values or {})
        self.params = dict(params or {})
        self.provenance = list(provenance or [])

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def as_dict(self):
        """Return report as 'dict' with each attribute as key."""
        return {
            'name': self.name,
            'pass': self.passed,
            'values': self.values,
            'params': self.params,
            'provenance': self.provenance,
        }

    def as_tuple(self):
        """Return report as 'namedtuple' 'ReportUnit'."""
        return ReportUnit(self.name, self.passed, self.values, self.params, self.provenance)


class InequalityReport(LabReport):
    """Report for a single empirical inequality check.

    Attributes:
        lhs:             'float' left-hand side
        rhs_core:        'float' right-hand side without the fitted constant
        fitted_constant: 'float' smallest constant that makes the inequality hold
    """

    def __init__(self, name, lhs, rhsCore, fittedConstant, passed=True, **kwargs):
        super().__init__(name, passed, **kwargs)
        self.lhs = float(lhs)
        self.rhsCore = float(rhsCore)
        self.fittedConstant = float(fittedConstant)

    def holds(self, constant=None):
        """Re-check the inequality with given (or fitted) constant."""
        const = self.fittedConstant if constant is None else constant
        return self.lhs <= const * self.rhsCore * (1 + 1e-12) + 1e-300

    def as_dict(self):
        return {
            'inequality': self.name,
            'params': self.params,
            'lhs': self.lhs,
            'rhs_core': self.rhsCore,
            'fitted_constant': self.fittedConstant,
            'pass': self.passed,
            'values': self.values,
            'provenance': self.provenance,
        }


class BoundFitReport(LabReport):
    """Report for fitted coefficient bounds and criterion checks.

    Attributes:
        A1, A2, A3, A4: fitted constants ('None' when not part of the fit)
        mu:             entropy used in the weight
        feasible:       'bool' whether the bound holds with finite constants
        residuals:      'list' of dicts with keys 'j', 'x', 'lhs', 'rhs'
        constants:      'dict' with other empirical constants (e.g. 'C(n)')
    """

    def __init__(
        self,
        name,
        A3,
        feasible,
        mu=0.0,
        A1=None,
        A2=None,
        A4=None,
        residuals=None,
        constants=None,
        **kwargs,
    ):
        super().__init__(name, feasible, **kwargs)
        self.A1 = A1
        self.A2 = A2
        self.A3 = A3
        self.A4 = A4
        self.mu = mu
        self.feasible = bool(feasible)
        self.residuals = list(residuals or [])
        self.constants = dict(constants or {})

    def as_dict(self):
        return {
            'name': self.name,
            'A1': self.A1,
            'A2': self.A2,
            'A3': self.A3,
            'A4': self.A4,
            'mu': self.mu,
            'feasible': self.feasible,
            'residuals': self.residuals,
            'constants': self.constants,
            'values': self.values,
            'params': self.params,
            'provenance': self.provenance,
        }


class LabData:
    """Data structure for holding all reports of one lab run.

    Attributes:
        reports: 'list' of reports in insertion order

    Methods:
        add: append a report
        passed: 'True' if no report failed
        as_list: returns a 'list' with each report as 'dict'
        as_dict: returns a 'dict' keyed by report name
    """

    def __init__(self, reports=None):
        self.reports = list(reports or [])

    def add(self, report):
        self.reports.append(report)
        return report

    def __len__(self):
        return len(self.reports)

    def __iter__(self):
        return iter(self.reports)

    @property
    def passed(self):
        return all(rpt.passed is not False for rpt in self.reports)

    def failed(self):
        return [rpt.name for rpt in self.reports if rpt.passed is False]

    def as_list(self):
        return [rpt.as_dict() for rpt in self.reports]

    def as_dict(self):
        out = {}
        for idx, rpt in enumerate(self.reports):
            key = rpt.name if rpt.name not in out else f'{rpt.name}#{idx}'
            out[key] = rpt.as_dict()
        return out
