import pytest
from scipy import stats as scipy_stats

from stylenlg.errors import DataError, ZeroVariance
from stylenlg.metrics import pearson

XS = [0.5, 1.0, 2.5, 4.0, 7.5]


def test_affine_relationships():
    assert pearson(XS, [3 * x + 1 for x in XS]).r == pytest.approx(1.0, abs=1e-12)
    assert pearson(XS, [-2 * x + 5 for x in XS]).r == pytest.approx(-1.0, abs=1e-12)


def test_matches_reference_implementation():
    ys = [1.0, 0.0, 2.0, 2.5, 1.5]
    expected = scipy_stats.pearsonr(XS, ys)

    result = pearson(XS, ys)

    assert result.r == pytest.approx(expected[0], abs=1e-6)
    assert result.p_value == pytest.approx(expected[1], abs=1e-6)
    assert result.n == 5


def test_textbook_value():
    # heights and weights; r computed by hand from the sums of products
    heights = [63, 64, 66, 69, 69, 71, 71, 72, 73, 75]
    weights = [127, 121, 142, 157, 162, 156, 169, 165, 181, 208]
    assert pearson(heights, weights).r == pytest.approx(0.9471, abs=1e-4)


def test_constant_series():
    with pytest.raises(ZeroVariance):
        pearson(XS, [2.0] * len(XS))


def test_bad_shapes():
    with pytest.raises(DataError):
        pearson(XS, XS[:-1])
    with pytest.raises(DataError):
        pearson([1.0], [2.0])
