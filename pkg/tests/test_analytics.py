import math

import numpy as np
import pytest

from dnacodec.analytics import (
    RHO_CONV, LongevityModel, alphabet_ceiling, decomposition, density, effective_r, fbl_rate, h2, longevity_years,
    qinv,
)
from oracles import qinv_bisection


def test_density_examples():
    assert density(19456, 4508, 126, 0.2) == pytest.approx(155.8, abs=0.05)
    assert density(19456, 2077, 126, 0.5) == pytest.approx(135.2, abs=0.1)
    assert density(19456, 2077, 126, 1.0) == pytest.approx(density(19456, 2077, 126, 0.5) / 2)
    with pytest.raises(ValueError):
        density(19456, 0, 126, 0.5)
    with pytest.raises(ValueError):
        density(19456, 100, 126, 0.0)


@pytest.mark.parametrize("r,expect", [(0.02, 225.1), (1, 143.7), (5, 45.2), (10, 22.7), (0.5, 178.9)])
def test_alphabet_ceiling_table(r, expect):
    assert alphabet_ceiling(r) == pytest.approx(expect, abs=0.1)


def test_alphabet_ceiling_limit_and_identity():
    assert alphabet_ceiling(1e-9) == pytest.approx(2 * RHO_CONV, rel=1e-8)
    # a 2 bit/base code with n = k / (1 - e^-r) oligos sits exactly on the ceiling
    B = 126
    for r in (0.1, 0.5, 1.0, 3.0):
        k = 1000
        n = k / (1 - math.exp(-r))
        L = k * B * 2 / 8
        assert density(L, n, B, r) == pytest.approx(alphabet_ceiling(r), rel=1e-12)
    with pytest.raises(ValueError):
        alphabet_ceiling(0)


def test_qinv_against_bisection():
    for eps in (0.5, 0.1, 1e-3, 1e-6, 1e-9, 0.9):
        assert qinv(eps) == pytest.approx(qinv_bisection(eps), abs=1e-8)
    assert qinv(1e-6) == pytest.approx(4.753424, abs=1e-6)
    with pytest.raises(ValueError):
        qinv(0)


def test_fbl_examples():
    R, C = fbl_rate(1.3e-3, 252, 1e-6)
    assert R == pytest.approx(0.898, abs=0.002) and C == pytest.approx(0.986, abs=0.001)
    R, C = fbl_rate(8e-3, 252, 1e-6)
    assert R == pytest.approx(0.763, abs=0.002) and C == pytest.approx(0.933, abs=0.001)
    assert fbl_rate(0.0) == (1.0, 1.0)
    assert fbl_rate(1e-15)[0] == 1.0
    assert h2(0.5) == 1.0 and h2(0) == 0.0


def test_fbl_monotone():
    ps = np.geomspace(1e-4, 0.1, 12)
    ns = [64, 128, 252, 512, 2048]
    for n in ns:
        rs = [fbl_rate(p, n)[0] for p in ps]
        assert all(a >= b for a, b in zip(rs, rs[1:]))
    for p in ps:
        rs = [fbl_rate(p, n)[0] for n in ns]
        assert all(a <= b for a, b in zip(rs, rs[1:]))


def test_decomposition():
    d = decomposition("hifi", 0.680)
    assert d.eta_code == pytest.approx(0.764, abs=0.002)
    assert d.eta_ch == pytest.approx(0.98, abs=0.02)
    assert decomposition("lofi", 0.515).eta_code == pytest.approx(0.647, abs=0.002)
    base = decomposition("hifi", 0.5)
    unit = decomposition("hifi", base.eta_code * base.eta_fbl)
    assert unit.eta_ch == pytest.approx(1.0, abs=1e-12)
    assert d.product == pytest.approx(0.680)


def test_longevity():
    m = LongevityModel.calibrated(5, 3.25, 133)
    assert m.lambda_strand == pytest.approx(3.24e-3, rel=0.01)
    assert longevity_years(5, 3.25, m) == pytest.approx(133, abs=1e-9)
    assert longevity_years(10, 4, m) == pytest.approx(282, abs=6)
    assert longevity_years(5, 5 - 1e-9, m) == pytest.approx(0, abs=1e-3)
    for r0, t in ((5, 10.0), (10, 300.0), (2, 0.5)):
        assert longevity_years(r0, effective_r(r0, t, m), m) == pytest.approx(t, abs=1e-9)
    with pytest.raises(ValueError):
        longevity_years(4, 4, m)
    with pytest.raises(ValueError):
        longevity_years(4, 5, m)


def test_chemistry_chain():
    m = LongevityModel.from_chemistry()
    assert m.lambda_strand > 0 and m.suppression == 300
    # Arrhenius: hotter reference at fixed k_ref means a slower rate at 25 C
    hot = LongevityModel.from_chemistry(T_ref=363.15)
    assert hot.lambda_strand < m.lambda_strand
    assert LongevityModel.from_chemistry(suppression=600).lambda_strand == pytest.approx(m.lambda_strand / 2)
