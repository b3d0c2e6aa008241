#include "mrtau/model.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <random>

using namespace mrtau;
using namespace mrtau::testing;

namespace {

LoopMat random_member(const HierarchyModel &m, std::mt19937 &rng, int dmin = -7, int dmax = 7)
{
	std::uniform_int_distribution<int> deg(dmin, dmax);
	std::uniform_int_distribution<int> nsl(1, 4);
	LoopMat x(m.dim);
	const int slices = nsl(rng);
	for (int s = 0; s < slices; ++s) {
		const int d = deg(rng);
		const auto &atoms = m.atoms(d);
		std::vector<DiffPoly> coords(atoms.size());
		for (auto &c : coords)
			c = DiffPoly::constant(random_rational(rng));
		x += m.assemble_slice(d, coords);
	}
	return x;
}

} // namespace

TEST_CASE("catalog loads with all invariants")
{
	const auto &cat = model_catalog();
	REQUIRE(cat.size() == 3);
	const auto &sk = model_by_name("sk");
	CHECK(sk.h == 3);
	CHECK(sk.N == 4);
	CHECK(sk.exponents == std::vector<int>{1, 5});
	CHECK(model_by_name("kk").N == 2);
	CHECK(model_by_name("kdv").N == 1);
	CHECK_THROWS_AS(model_by_name("nope"), ModelError);
}

TEST_CASE("pairing on the Heisenberg basis")
{
	const auto &sk = model_by_name("sk");
	LaurentP p15 = pair_form(sk.heisenberg[0], sk.heisenberg[1]);
	CHECK(p15 == LaurentP::monomial(4, dp("3")));
	CHECK(pair_form(sk.heisenberg[0], sk.heisenberg[0]).stored_empty());

	std::mt19937 rng(71);
	for (int i = 0; i < 20; ++i) {
		LoopMat x = random_member(sk, rng), y = random_member(sk, rng);
		CHECK(pair_form(x, y) == pair_form(y, x));
	}
}

TEST_CASE("kappa form")
{
	const auto &sk = model_by_name("sk");
	// kappa pairs degree d with degree -d: (Lambda_1 | Lambda_5 lambda^{-4}) has a lambda^0 term
	LoopMat shifted = sk.heisenberg[1].shifted(-4);
	CHECK(kappa_form(sk.heisenberg[0], shifted) == dp("3"));
	CHECK(kappa_form(sk.heisenberg[0], sk.heisenberg[1]).is_zero());
	std::mt19937 rng(73);
	for (int i = 0; i < 20; ++i) {
		LoopMat x = random_member(sk, rng), y = random_member(sk, rng);
		CHECK(kappa_form(x, y) == kappa_form(y, x));
	}
}

TEST_CASE("principal degree")
{
	const auto &sk = model_by_name("sk");
	CHECK(sk.principal_degree(sk.lambda) == 1);
	CHECK(sk.principal_degree(sk.heisenberg[1]) == 5);
	LoopMat mixed = sk.chevalley_e[1] + sk.chevalley_f[1];
	CHECK(!sk.principal_degree(mixed).has_value());
	const auto &kk = model_by_name("kk");
	CHECK(kk.principal_degree(kk.lambda) == 1);
	CHECK(kk.principal_degree(kk.heisenberg[1]) == 5);
}

TEST_CASE("twist membership is enforced")
{
	const auto &sk = model_by_name("sk");
	// lambda^2 in the (1,3) entry breaks the residue pattern
	LoopMat bad(3);
	bad.at(0, 2).set(2, dp("1"));
	CHECK(!sk.is_member(bad));
	// equal-residue entries must satisfy the linear relations: (1,2) and
	// (2,3) at residue 3 share the b1 coefficient
	LoopMat bad2(3);
	bad2.at(0, 1).set(3, dp("1"));
	CHECK(!sk.is_member(bad2));
	LoopMat good(3);
	good.at(0, 1).set(3, dp("1"));
	good.at(1, 2).set(3, dp("1"));
	CHECK(sk.is_member(good));
}

TEST_CASE("project_heisenberg")
{
	for (const char *name : {"sk", "kk", "kdv"}) {
		const auto &m = model_by_name(name);
		// x = Lambda_{m_a}: coordinates {m_a: 1}, image part zero
		for (std::size_t a = 0; a < m.exponents.size(); ++a) {
			HeisenbergPart h = m.project_heisenberg(m.heisenberg[a]);
			REQUIRE(h.coords.size() == 1);
			CHECK(h.coords.at(m.exponents[a]) == dp("1"));
			CHECK(h.image_part.stored_all_zero());
		}
		// x = [Lambda, z]: zero Heisenberg coordinates, and the image part
		// reproduces the bracket
		std::mt19937 rng(79);
		for (int i = 0; i < 10; ++i) {
			LoopMat z = random_member(m, rng);
			LoopMat x = LoopMat::bracket(m.lambda, z);
			HeisenbergPart h = m.project_heisenberg(x);
			CHECK(h.coords.empty());
			CHECK(LoopMat::bracket(m.lambda, h.image_part) == x);
		}
		// lambda d/dlambda of Lambda_{m_a} projects onto (m_a N / r h) Lambda_{m_a}
		for (std::size_t a = 0; a < m.exponents.size(); ++a) {
			LoopMat ldl = m.heisenberg[a].d_lambda().shifted(1);
			HeisenbergPart h = m.project_heisenberg(ldl);
			REQUIRE(h.coords.count(m.exponents[a]));
			CHECK(h.coords.at(m.exponents[a]).constant_term() ==
			      Rational(m.exponents[a] * m.N, m.rh));
		}
	}
}

TEST_CASE("general decomposition round trip")
{
	std::mt19937 rng(83);
	for (const char *name : {"sk", "kk", "kdv"}) {
		const auto &m = model_by_name(name);
		for (int i = 0; i < 15; ++i) {
			LoopMat x = random_member(m, rng);
			HeisenbergPart h = m.project_heisenberg(x);
			LoopMat rebuilt = LoopMat::bracket(m.lambda, h.image_part);
			for (const auto &[d, c] : h.coords)
				rebuilt += m.heisenberg_element(d).scaled(c);
			CHECK(rebuilt == x);
		}
	}
}

TEST_CASE("b_form basics")
{
	const auto &sk = model_by_name("sk");
	std::mt19937 rng(89);
	// B(x, y) = 2 h_g^dual (x|y), here 6 tr(xy), on random elements
	for (int i = 0; i < 20; ++i) {
		LoopMat x = random_member(sk, rng), y = random_member(sk, rng);
		BiSeries b2 = sk.b_form2(x, y);
		LaurentP p = pair_form(x, y);
		std::map<int, DiffPoly> diag;
		for (const auto &[k, v] : b2.terms())
			diag[k[0] + k[1]] += v;
		for (auto &[e, v] : diag)
			CHECK(v == p.coeff(e).scaled(Rational(6)));
		for (const auto &[e, v] : p.terms())
			CHECK(diag[e] == v.scaled(Rational(6)));
	}
	// cyclic symmetry of the 3-form
	for (int i = 0; i < 6; ++i) {
		LoopMat x = random_member(sk, rng, -3, 3), y = random_member(sk, rng, -3, 3),
		        z = random_member(sk, rng, -3, 3);
		TriSeries xyz = sk.b_form3(x, y, z);
		TriSeries yzx = sk.b_form3(y, z, x);
		for (const auto &[k, v] : xyz.terms()) {
			TriSeries::Key rot{k[1], k[2], k[0]};
			CHECK(yzx.coeff_checked(rot) == v);
		}
	}
	// any zero argument kills the form
	LoopMat zero(3);
	CHECK(sk.b_form2(zero, random_member(sk, rng)).stored_all_zero());
}

TEST_CASE("canonical gauge")
{
	for (const char *name : {"sk", "kk"}) {
		const auto &m = model_by_name(name);
		// q already in V stays fixed
		LoopMat q = m.canonical_q(dp("u"));
		auto [n0, q0] = m.canonical_gauge(q);
		CHECK(n0.stored_all_zero());
		CHECK(q0 == q);
	}

	// SK with q = alpha h1: brute-force check via matrix exponentials
	const auto &sk = model_by_name("sk");
	DiffPoly alpha = dp("u^2 + 3*u_x");
	LoopMat q = LoopMat::from_const(sk.brack_h, 0, alpha);
	auto [ncan, qcan] = sk.canonical_gauge(q);
	// verify by re-applying the gauge transformation on raw matrices:
	// exp(ad N)(d + Lambda + q) = d + Lambda + qcan means
	// exp(N)(Lambda + q)exp(-N) - dN/dx-corrections... use apply_gauge itself
	// plus an independent finite-sum evaluation of the conjugation series.
	LoopMat lhs = sk.apply_gauge(q, ncan);
	CHECK(lhs == qcan);
	{
		// independent route: exp(N)(Lambda+q)exp(-N) - (d/dx exp(N)) exp(-N)
		LoopMat expp(3), expm(3), dexp(3);
		for (int i = 0; i < 3; ++i) {
			expp.at(i, i).set(0, dp("1"));
			expm.at(i, i).set(0, dp("1"));
		}
		LoopMat power = ncan;
		Rational fact(1);
		for (int k = 1; !power.stored_all_zero(); ++k) {
			fact /= Rational(k);
			expp += power.scaled(fact);
			expm += power.scaled(k % 2 ? -fact : fact);
			power = power * ncan;
			REQUIRE(k < 9);
		}
		dexp = expp.x_derivative();
		LoopMat conj = expp * (sk.lambda + q) * expm - dexp * expm;
		LoopMat expect = sk.lambda + qcan;
		CHECK(conj == expect);
	}
	// the canonical charge for q = alpha h1 is alpha^2 - alpha_x on f1
	DiffPoly predicted = alpha * alpha - total_x_derivative(alpha);
	LoopMat qpred = sk.canonical_q(predicted);
	CHECK(qcan == qpred);
}
