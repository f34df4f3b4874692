import numpy as np
import pytest

from orfh.analysis import (StructureAnalyzer, coefficient_list, count_pauli_terms,
                           induced_p_norm, loglog_slope, structure_report)
from orfh.models import HubbardParams, build_hubbard, orfh_tensors
from orfh.operators import CoefficientTensors, jordan_wigner


def test_golden_term_counts():
    assert count_pauli_terms(jordan_wigner(build_hubbard(HubbardParams(2)))) == 6
    for seed in (0, 1, 7):
        t, _ = orfh_tensors(HubbardParams(4), seed)
        assert count_pauli_terms(jordan_wigner(t)) == 1940


def test_fh_counts_grow_linearly():
    counts = [count_pauli_terms(jordan_wigner(build_hubbard(HubbardParams(n))))
              for n in (3, 4, 5, 6)]
    # per site: two hopping bonds x (XX + YY) x 2 spins, plus Z and ZZ terms
    assert np.diff(counts).tolist() == [counts[1] - counts[0]] * 3


def test_fh_norms_closed_form():
    # FH at N=4: 16 unit hopping entries, 8 mu = 1/2 entries, 8 two-body entries of 1/2
    r = structure_report(build_hubbard(HubbardParams(4)), "FH")
    assert r.one_norm == pytest.approx(16 + 4 + 4)
    assert r.two_norm == pytest.approx(np.sqrt(16 + 2 + 2 * 2))


def test_coefficient_list_halves_two_body():
    t = CoefficientTensors.from_dict(2, {(0, 0): -3.0}, {(0, 0, 1, 1): 4.0, (1, 1, 0, 0): 4.0})
    assert sorted(coefficient_list(t)) == [2.0, 2.0, 3.0]
    assert induced_p_norm(t, 1) == pytest.approx(7.0)
    assert induced_p_norm(t, 2) == pytest.approx(np.sqrt(17.0))
    with pytest.raises(ValueError):
        induced_p_norm(t, 3)


def test_norm_ordering_and_zero():
    t = CoefficientTensors.from_dict(3)
    assert induced_p_norm(t, 1) == 0.0
    rng = np.random.default_rng(0)
    for seed in range(3):
        t, _ = orfh_tensors(HubbardParams(3, u=float(rng.uniform(0.5, 3))), seed)
        assert induced_p_norm(t, 2) <= induced_p_norm(t, 1)


def test_loglog_slope():
    x = np.array([4, 6, 8, 10])
    assert loglog_slope(x, 3 * x**4.0) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        loglog_slope([1], [1])


def test_report_validates_source():
    with pytest.raises(ValueError):
        structure_report(build_hubbard(HubbardParams(2)), "XYZ")


def test_transformer_rows():
    ts = [orfh_tensors(HubbardParams(n), 0)[0] for n in (2, 3)]
    est = StructureAnalyzer()
    out = est.fit().transform(ts)
    assert out.shape == (2, 4)
    assert out[:, 0].tolist() == [4, 6]
    assert out[1, 1] == count_pauli_terms(jordan_wigner(ts[1]))
    assert est.get_params() == {"source": "ORFH"}
    assert est.reports_[0].row()["source"] == "ORFH"
