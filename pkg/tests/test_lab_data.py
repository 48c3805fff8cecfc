"""Test cases for Shrinker Lab report containers."""

import json
import math

import numpy as np
import pytest

from src.shrinker_lab.lab_data import BoundFitReport, InequalityReport, LabData, LabReport, dump_json


# =========================================================
#          F I X T U R E S   A N D   H E L P E R S
# =========================================================
@pytest.fixture
def reports():
    return [
        LabReport('entropy', True, values={'mu': 0.0}),
        InequalityReport('meanvalue', 0.5, 8.0, 0.0625, params={'r': 1.0}),
        BoundFitReport('criterion', math.inf, False, A4=20.0),
        LabReport('radius', None, values={'rho': 1.0}),
    ]


# =========================================================
#                    T E S T   C A S E S
# =========================================================
@pytest.mark.smoke
def test_lab_report(reports):
    rpt = reports[0]

    assert rpt['mu'] == 0.0
    assert rpt.get('missing', 3) == 3
    assert rpt.as_tuple().name == 'entropy'
    assert rpt.as_dict()['pass'] is True


def test_inequality_report_holds(reports):
    rpt = reports[1]

    assert rpt.holds()
    assert not rpt.holds(0.01)
    assert rpt.as_dict()['fitted_constant'] == 0.0625
    assert rpt.as_dict()['inequality'] == 'meanvalue'


def test_bound_fit_report(reports):
    rpt = reports[2]

    assert rpt.passed is False
    assert not rpt.feasible
    assert rpt.as_dict()['A4'] == 20.0


def test_lab_data_verdict(reports):
    data = LabData(reports)

    assert len(data) == 4
    assert not data.passed
    assert data.failed() == ['criterion']
    assert set(data.as_dict()) == {'entropy', 'meanvalue', 'criterion', 'radius'}


def test_lab_data_informational_only():
    data = LabData()
    data.add(LabReport('taylor'))
    assert data.passed
    assert data.failed() == []


def test_dump_json_strict(reports):
    text = dump_json(LabData(reports).as_list())
    back = json.loads(text)

    assert back[2]['A3'] == 'inf'
    assert back[1]['params'] == {'r': 1.0}


def test_dump_json_numpy_and_sorted():
    text = dump_json({'b': np.float64(math.nan), 'a': np.arange(3), 'c': np.bool_(True)})

    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {'a': [0, 1, 2], 'b': 'nan', 'c': True}
