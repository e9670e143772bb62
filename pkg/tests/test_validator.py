import csv
import io
from dataclasses import replace

import pytest

from virialnsf import laws
from virialnsf import statelaw as sl
from virialnsf.statelaw import CoefficientFn as C
from virialnsf.validator import (
    CHECK_IDS, ScanGrid, check_concavity, check_cv_and_entropy, check_growth, check_phi_gap,
    check_radiative, detect_nonmonotone, validate, validate_structure,
)

GRID = ScanGrid(points=96)


def status(results, cid):
    return next(r for r in results if r.check_id == cid).status


def test_structure_examples():
    assert all(r.status == "pass" for r in validate_structure(laws.reference_law(), 2))
    assert status(validate_structure(laws.reference_law(gamma=4.0), 2), "gamma-floor") == "fail"
    assert status(validate_structure(laws.reference_law(lam=-1.2), 2), "lame") == "fail"


def test_radiative_examples():
    r = check_radiative(laws.reference_law(), GRID)
    assert status(r, "P2-radiative") == "pass"
    cube = laws.reference_law(b=(C.power(1.0, 3.0), C.constant(0.0), C.constant(0.0)))
    bad = [x for x in check_radiative(cube, GRID) if x.status == "fail"]
    assert bad and min(x.witness_theta for x in bad) < 1.0
    zero = laws.reference_law(b=(C.constant(0.0),) * 3)
    assert "fail" in {x.status for x in check_radiative(zero, GRID)}


def test_concavity_examples():
    assert status(check_concavity(laws.concave_law(), GRID), "P5-concavity") == "pass"
    assert status(check_concavity(laws.constant_b2_law(), GRID), "P5-concavity") == "pass"
    bad = next(r for r in check_concavity(laws.nonconcave_law(), GRID))
    assert bad.status == "fail" and 1.0 < bad.witness_theta < 3.0


def test_growth_examples():
    assert status(check_growth(laws.reference_law(), GRID), "P6-growth") == "pass"
    assert status(check_growth(laws.reference_law(), GRID), "P6bis-growth") == "pass"
    assert status(check_growth(laws.constant_b2_law(), GRID), "P6bis-growth") == "fail"


def test_cv_examples():
    assert status(check_cv_and_entropy(laws.reference_law(), GRID), "cv-positive") == "pass"
    strong = laws.reference_law(b=(C.power(1.0, 1.0), C.constant(0.0), C.rational(-5.0, 1.0, 2.0, 1.0)))
    r = next(x for x in check_cv_and_entropy(strong, GRID) if x.check_id == "cv-positive")
    assert r.status == "fail" and r.witness_rho > 1.0


def test_maxwell_and_p7_for_nonmonotone():
    rep = validate(laws.nonmonotone_law(), GRID)
    assert rep.get("maxwell").status == "pass"
    # concavity of the entropy needs dP/drho > 0, so it fails wherever P is non-monotone
    assert rep.get("P7-entropy-concavity").status == "fail"
    assert rep.failed("structural") == []


def test_phi_gap():
    assert check_phi_gap(laws.reference_law(), GRID)[0].status == "pass"
    zero = laws.reference_law(b=(C.constant(0.0),) * 3)
    r = check_phi_gap(zero, GRID)[0]
    assert r.status == "pass" and r.fitted_c == 0.0


def test_detect_nonmonotone_examples():
    assert detect_nonmonotone(laws.reference_law(), GRID) is None
    assert detect_nonmonotone(laws.reference_law(b=(C.constant(0.0),) * 3), GRID) is None
    assert detect_nonmonotone(laws.demo_law(), GRID) is not None
    fine = ScanGrid(theta_lo=0.5, theta_hi=2.0, rho_lo=0.05, rho_hi=0.2, points=41, spacing="linear")
    rho, th = detect_nonmonotone(laws.demo_law(), fine)
    assert sl.pressure_drho(laws.demo_law(), rho, th) < 0
    near = detect_nonmonotone(laws.demo_law(), ScanGrid(0.999, 1.001, 0.099, 0.101, 16, "linear"))
    assert near is not None
    assert sl.pressure_drho(laws.demo_law(), *near) == pytest.approx(-0.0495, rel=0.05)


def test_report_formats():
    rep = validate(laws.reference_law(), GRID)
    assert [c.check_id for c in rep.checks] == list(CHECK_IDS)
    assert rep.ok
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["check_id", "status", "witness_rho", "witness_theta", "margin", "fitted_C"]
    assert len(rows) == 1 + len(CHECK_IDS)
    assert "gamma-floor" in rep.to_text()


def test_validation_is_deterministic():
    a = validate(laws.demo_law(), GRID).to_csv()
    b = validate(laws.demo_law(), GRID).to_csv()
    assert a == b


def test_scan_grid_rejects_bad_ranges():
    with pytest.raises(ValueError):
        ScanGrid(theta_lo=0.0)
    with pytest.raises(ValueError):
        replace(GRID, spacing="cubic")
