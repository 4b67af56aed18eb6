"""Norms eta_k, expansion coefficients, Gram matrices, decay diagnostics."""

import json

import pytest
from mpmath import mp, mpf

from qfb import (BasisFunction, LatticeFunction, ModeCache, PrecisionContext,
                 QParams, coefficient, eta_k, expand, gram_matrix, jnu3,
                 partial_sum, qintegral_01, riemann_lebesgue_rate)

CTX = PrecisionContext(digits=50)
P = QParams("0.5", "0")


@pytest.fixture(scope="module")
def records():
    from qfb import zero_table
    return {r.k: r for r in zero_table(P, 4, CTX)}


@pytest.fixture(scope="module")
def cache(records):
    return ModeCache(P, records, CTX)


class TestEta:
    def test_positive(self, records, cache):
        for k in records:
            assert eta_k(P, records[k], CTX, cache=cache) > 0

    def test_three_methods_agree(self, records, cache):
        with mp.workdps(70):
            for k in (1, 2, 3):
                vals = [eta_k(P, records[k], CTX, m, cache)
                        for m in ("integral", "closed_form_nu_plus_1",
                                  "closed_form_nu")]
                # agreement is limited by the gap-relative zero refinement,
                # ~10^(-digits/2); the 1e-40 claim is acceptance-tested at
                # 120 digits
                base = vals[0]
                for v in vals[1:]:
                    assert abs(v - base) <= abs(base) * mpf(10) ** -20

    def test_unknown_method_rejected(self, records):
        with pytest.raises(ValueError):
            eta_k(P, records[1], CTX, "nope")


class TestCoefficient:
    def test_orthogonality_delta(self, records, cache):
        # expanding the n-th basis function must give the n-th unit vector
        f = BasisFunction(2)
        with mp.workdps(60):
            for k in (1, 2, 3):
                e = eta_k(P, records[k], CTX, cache=cache)
                a = coefficient(P, f, records[k], e, CTX, cache=cache)
                # resolution is set by the gap-relative zero refinement
                if k == 2:
                    assert abs(a - 1) < mpf(10) ** -20
                else:
                    assert abs(a) < mpf(10) ** -20

    def test_zero_function_gives_zero(self, records, cache):
        e = eta_k(P, records[1], CTX, cache=cache)
        a = coefficient(P, lambda t: mpf(0), records[1], e, CTX, cache=cache)
        assert a == 0

    def test_weighted_regroups_half_power(self, records, cache):
        # b_k(f) moves t^(1/2) from the integrand into f: b_k(1) = a_k(t^-1/2)
        with mp.workdps(60):
            e = eta_k(P, records[1], CTX, cache=cache)
            b = coefficient(P, lambda t: mpf(1), records[1], e, CTX,
                            cache=cache, weighted=True)
            a = coefficient(P, lambda t: 1 / mp.sqrt(t), records[1], e, CTX,
                            cache=cache)
            assert abs(b - a) <= abs(a) * mpf(10) ** -40

    def test_nonpositive_eta_rejected(self, records):
        with pytest.raises(ValueError):
            coefficient(P, lambda t: mpf(1), records[1], 0, CTX)

    def test_lattice_function_input(self, records, cache):
        lf = LatticeFunction(values=("1",) * 40, base="0.5")
        with mp.workdps(60):
            e = eta_k(P, records[1], CTX, cache=cache)
            a_lat = coefficient(P, lf, records[1], e, CTX, cache=cache)
            a_call = coefficient(P, lambda t: mpf(1), records[1], e, CTX,
                                 cache=cache)
            # truncation at j=40: tail is below q^40 ~ 1e-12 of the value
            assert abs(a_lat - a_call) <= abs(a_call) * mpf(10) ** -10


class TestBesselInequality:
    def test_sum_of_squares_below_norm(self, records, cache):
        with mp.workdps(60):
            f = lambda t: mpf(1)
            total = mpf(0)
            for k in sorted(records):
                e = eta_k(P, records[k], CTX, cache=cache)
                a = coefficient(P, f, records[k], e, CTX, cache=cache)
                total += a * a * e
            norm2 = qintegral_01(lambda t: t * f(t) ** 2, CTX, q=P.q)
            assert total <= norm2 * (1 + mpf(10) ** -40)


class TestPartialSum:
    def test_single_mode_reproduced_on_lattice(self, records, cache):
        # S_K for f = mode 2 reproduces the mode at the lattice points
        with mp.workdps(60):
            coeffs = []
            for k in sorted(records):
                e = eta_k(P, records[k], CTX, cache=cache)
                coeffs.append(coefficient(P, BasisFunction(2), records[k], e,
                                          CTX, cache=cache))
            q = P.q_mp()
            xs = [q ** j for j in range(5)]
            vals = partial_sum(P, coeffs, records, xs, 3, CTX)
            for j, v in enumerate(vals):
                want = cache.value(2, j)
                assert abs(v - want) <= max(abs(want), mpf(1)) * mpf(10) ** -18

    def test_k_zero_is_identically_zero(self, records):
        vals = partial_sum(P, [], records, [mpf(1), mpf("0.5")], 0, CTX)
        assert all(v == 0 for v in vals)

    def test_k_exceeding_coeffs_rejected(self, records):
        with pytest.raises(ValueError):
            partial_sum(P, [mpf(1)], records, [mpf(1)], 2, CTX)


class TestExpansionIdempotence:
    def test_finite_combination_recovers_coefficients(self, records):
        # f = 2*mode1 - 0.5*mode3, evaluated through a callable that forms
        # the arguments q*j_n*t at the precision the zeros carry
        def f(t):
            total = mpf(0)
            for c, n in ((mpf(2), 1), (mpf("-0.5"), 3)):
                with mp.workdps(max(CTX.digits + 10, records[n].arg_dps)):
                    z = P.q_mp() * records[n].j * t
                total += c * jnu3(P, z, CTX).value
            return total

        result = expand(P, f, records, 4, CTX)
        with mp.workdps(60):
            want = [mpf(2), mpf(0), mpf("-0.5"), mpf(0)]
            for got, w in zip(result.coeffs, want):
                assert abs(got - w) < mpf(10) ** -18


class TestGram:
    def test_identity_symmetric(self, records, cache):
        g = gram_matrix(P, records, 3, CTX, cache)
        with mp.workdps(60):
            for i in range(3):
                for j in range(3):
                    assert g[i][j] == g[j][i]
                    target = 1 if i == j else 0
                    assert abs(g[i][j] - target) < mpf(10) ** -14

    def test_missing_record_rejected(self, records):
        with pytest.raises(ValueError):
            gram_matrix(P, records, 9, CTX)


class TestRiemannLebesgue:
    def test_constant_function_decay(self, records, cache):
        rep = riemann_lebesgue_rate(P, lambda t: mpf(1), records,
                                    range(1, 5), CTX, cache)
        assert rep["hypothesis_ok"]
        assert mp.isfinite(rep["sup_rate"])
        assert all(r["cs_holds"] for r in rep["rows"])
        mags = [abs(r["integral"]) for r in rep["rows"]]
        assert all(a > b for a, b in zip(mags, mags[1:]))

    def test_basis_function_input(self, records, cache):
        rep = riemann_lebesgue_rate(P, BasisFunction(1), records,
                                    range(1, 4), CTX, cache)
        assert rep["hypothesis_ok"]
        assert all(r["cs_holds"] for r in rep["rows"])


class TestExpandResult:
    def test_json_payload(self, records):
        result = expand(P, lambda t: mpf(1), records, 2, CTX)
        payload = json.loads(result.to_json())
        assert payload["q"] == "0.5"
        assert payload["K"] == 2
        assert len(payload["coeffs"]) == 2
        assert len(payload["eta"]) == 2
        assert len(payload["lattice_points"]) == \
            len(payload["partial_sum_values"])

    def test_k_exceeding_records_rejected(self, records):
        with pytest.raises(ValueError):
            expand(P, lambda t: mpf(1), records, 9, CTX)

    def test_basis_function_index_validated(self):
        with pytest.raises(ValueError):
            BasisFunction(0)
