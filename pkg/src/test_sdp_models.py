import numpy as np
import pytest

from src import channels
from src.errors import ModelError
from src.linalg_core import partial_transpose
from src.sdp_models import (
    CodeClass,
    cb_norm_pt,
    check_fidelity_witness,
    deviation,
    deviation_scan,
    fidelity,
    gamma,
    kappa,
    kappa_activated,
    lemma1_check,
    one_shot_zero_error,
    superactivation_bound,
    upsilon,
    werner_holevo_witness,
)


@pytest.mark.parametrize("code", list(CodeClass))
def test_fidelity_at_unit_code_dimension(identity2, code):
    res = fidelity(identity2, 1.0, code, side="both")
    assert res.value == 1.0
    assert res.dual_value == 1.0
    assert np.trace(res.rho).real == pytest.approx(1.0)


def test_identity_fidelity_is_perfect_up_to_its_dimension(identity2):
    assert fidelity(identity2, 2.0, CodeClass.PPTP).value == pytest.approx(1.0, abs=1e-6)
    assert fidelity(identity2, 3.0, CodeClass.PPTP).value < 1 - 1e-3


@pytest.mark.parametrize("code", [CodeClass.PPTP, CodeClass.NS, CodeClass.NS_PPTP])
def test_fidelity_strong_duality(random_qubit, code):
    res = fidelity(random_qubit, 1.5, code, side="both")
    assert res.value == pytest.approx(res.dual_value, abs=1e-6)
    assert 0 < res.value <= 1 + 1e-7


def test_complex_channel_matches_reference_values(random_qubit):
    res = fidelity(random_qubit, 1.5, CodeClass.PPTP, side="both")
    assert res.value == pytest.approx(0.790641, abs=1e-5)
    assert res.dual_value == pytest.approx(0.790641, abs=1e-5)
    g = gamma(random_qubit, side="both")
    assert g.gamma == pytest.approx(1.274926, abs=1e-5)
    assert g.dual_mu == pytest.approx(1.274926, abs=1e-5)
    theta = cb_norm_pt(random_qubit)
    assert theta.q_theta >= g.q_gamma - 1e-6


def test_fidelity_dual_variables_satisfy_the_dual_constraint(random_qubit):
    res = fidelity(random_qubit, 1.5, CodeClass.PPTP, side="both")
    j = channels.choi(random_qubit).matrix
    dv = res.dual_vars
    slack = dv.x - j - partial_transpose(dv.y - dv.v, random_qubit.shape, "B")
    assert np.linalg.eigvalsh((slack + slack.conj().T) / 2)[0] >= -1e-6


def test_fidelity_argument_checks(identity2):
    with pytest.raises(ModelError):
        fidelity(identity2, 0.5)
    with pytest.raises(ModelError):
        fidelity(identity2, 2.0, side="sideways")


def test_werner_holevo_witness(werner3):
    rho, w = werner_holevo_witness(3)
    violation, objective = check_fidelity_witness(werner3, 5 / 3, rho, w, CodeClass.PPTP)
    assert violation <= 1e-9
    assert objective == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ModelError):
        werner_holevo_witness(1)


def test_deviation_sign(identity2):
    ks = channels.kraus_support(identity2)
    assert deviation(ks, 1.0) == 0.0
    assert deviation(ks, 1.5) >= -1e-7
    assert deviation(ks, 2.5) < -1e-4
    scan = deviation_scan(ks, CodeClass.PPTP, [1.0, 2.5])
    assert [k for k, _ in scan] == [1.0, 2.5]


def test_gamma_of_identity(identity2):
    res = gamma(identity2)
    assert res.gamma == pytest.approx(2.0, abs=1e-6)
    assert res.dual_mu == pytest.approx(2.0, abs=1e-6)
    assert res.q_gamma == pytest.approx(1.0, abs=1e-6)
    assert np.trace(res.rho).real == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("d", [2, 3])
def test_gamma_of_half_erasure(d):
    res = gamma(channels.erasure_channel(d, 0.5))
    assert res.gamma == pytest.approx((d + 1) / 2, abs=1e-5)


def test_gamma_primal_dual_agree(werner3):
    res = gamma(werner3, side="both")
    assert res.gamma == pytest.approx(res.dual_mu, abs=1e-6)
    assert res.gamma >= 5 / 3 - 1e-6


def test_cb_norm_of_identity(identity2):
    res = cb_norm_pt(identity2)
    assert res.value == pytest.approx(2.0, abs=1e-6)
    assert res.q_theta == pytest.approx(1.0, abs=1e-6)


def test_cb_norm_sandwiches_restricted_value():
    ch = channels.nr_channel(0.2)
    g = gamma(ch, side="primal").gamma
    restricted = cb_norm_pt(ch, restricted=True).value
    full = cb_norm_pt(ch).value
    assert g <= restricted + 1e-6
    assert restricted <= full + 1e-6


def test_kappa_of_identity(identity2):
    res = kappa(identity2, CodeClass.PPTP, tol_k=1e-5)
    assert res.kappa == pytest.approx(2.0, rel=1e-5)
    assert res.one_shot_zero_error == 2
    lo, hi = res.bracket
    assert hi - lo <= 1e-5


def test_kappa_ns_of_identity_reaches_input_dimension(identity2):
    res = kappa(identity2, CodeClass.NS)
    assert res.kappa == pytest.approx(2.0, abs=1e-3)


def test_upsilon_of_identity(identity2):
    res = upsilon(channels.kraus_support(identity2))
    assert res.upsilon == pytest.approx(4.0, abs=1e-5)
    assert res.kappa_ns == pytest.approx(2.0, abs=1e-5)
    assert res.support_residual <= 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("d", [3, 4, 5])
def test_kappa_pptp_of_werner_holevo(d):
    res = kappa(channels.werner_holevo(d), CodeClass.PPTP)
    assert res.kappa == pytest.approx((d + 2) / d, abs=1e-3)
    assert res.one_shot_zero_error == 1


@pytest.mark.parametrize("d", [2, 3])
def test_identity_anchors(d):
    ch = channels.identity_channel(d)
    assert gamma(ch).gamma == pytest.approx(d, rel=1e-5)
    assert cb_norm_pt(ch).value == pytest.approx(d, rel=1e-5)
    assert upsilon(channels.kraus_support(ch)).upsilon == pytest.approx(d * d, rel=1e-5)


@pytest.mark.slow
@pytest.mark.parametrize("code", list(CodeClass))
def test_kappa_of_identity3(code):
    assert kappa(channels.identity_channel(3), code, tol_k=1e-5).kappa == pytest.approx(3.0, rel=1e-5)


def test_one_shot_zero_error(identity2, werner3):
    assert one_shot_zero_error(identity2) == 2
    assert one_shot_zero_error(werner3, upper=2) == 1


def test_superactivation_bound_of_identities(identity2):
    assert superactivation_bound(identity2, identity2) == pytest.approx(2.0, abs=1e-6)


def test_product_fidelity_chain():
    lhs, mid, rhs = lemma1_check(channels.nr_channel(0.1), channels.identity_channel(2), 1.5)
    assert lhs <= mid + 1e-6
    assert mid <= rhs + 1e-6


def test_size_guards(werner3):
    with pytest.raises(ModelError):
        lemma1_check(werner3, werner3, 1.5)
    with pytest.raises(ModelError):
        kappa_activated(werner3, 5)
    with pytest.raises(ModelError):
        kappa_activated(werner3, 1)


@pytest.mark.slow
def test_kappa_activated_of_werner_holevo(werner3):
    act = kappa_activated(werner3, 3)
    assert act == pytest.approx(5 / 3, abs=1e-6)
    assert act == pytest.approx(kappa(werner3, CodeClass.PPTP).kappa, abs=1e-3)


@pytest.mark.slow
def test_kappa_activated_of_identity(identity2):
    assert kappa_activated(identity2, 3) == pytest.approx(2.0, abs=1e-9)
