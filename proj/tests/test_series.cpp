#include "mrtau/laurent.hpp"
#include "mrtau/multiseries.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <random>

using namespace mrtau;
using namespace mrtau::testing;

namespace {

LaurentQ lq(std::initializer_list<std::pair<int, long long>> terms)
{
	LaurentQ s;
	for (auto [e, c] : terms)
		s.set(e, Rational(c));
	return s;
}

LaurentQ random_laurent(std::mt19937 &rng, int lo = -8, int hi = 4, int nterms = 5)
{
	std::uniform_int_distribution<int> exp(lo, hi);
	std::uniform_int_distribution<int> coeff(-5, 5);
	LaurentQ s;
	for (int i = 0; i < nterms; ++i)
		s.set(exp(rng), Rational(coeff(rng)));
	return s;
}

// Root-of-unity form of the projection, evaluated in Q[i] (test oracle,
// independent of the exponent-filter implementation).
struct GaussianQ {
	Rational re, im;
};
GaussianQ gmul(const GaussianQ &a, const GaussianQ &b)
{
	return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
GaussianQ unit_root_pow(int n, int k)
{
	// primitive n-th root for n in {1,2,4}
	k = ((k % n) + n) % n;
	if (n == 1)
		return {Rational(1), Rational(0)};
	if (n == 2)
		return {Rational(k == 0 ? 1 : -1), Rational(0)};
	switch (k) {
	case 0: return {Rational(1), Rational(0)};
	case 1: return {Rational(0), Rational(1)};
	case 2: return {Rational(-1), Rational(0)};
	default: return {Rational(0), Rational(-1)};
	}
}

LaurentQ project_pi_by_average(const LaurentQ &f, int n)
{
	LaurentQ out;
	for (const auto &[e, c] : f.terms()) {
		if (e >= 0)
			continue; // singular part only
		GaussianQ acc{Rational(0), Rational(0)};
		for (int k = 0; k < n; ++k) {
			// eps^k * f(eps^k lambda): coefficient of lambda^e picks eps^{k(e+1)}
			GaussianQ w = gmul(unit_root_pow(n, k), unit_root_pow(n, k * e));
			acc.re += w.re * c;
			acc.im += w.im * c;
		}
		REQUIRE(is_zero(acc.im));
		acc.re /= n;
		if (!is_zero(acc.re))
			out.set(e, acc.re);
	}
	return out;
}

} // namespace

TEST_CASE("project_pi definition")
{
	LaurentQ f = lq({{-1, 1}, {-2, 1}, {-5, 1}, {3, 1}});
	CHECK(f.project_pi(4) == lq({{-1, 1}, {-5, 1}}));
	CHECK(lq({{0, 2}, {4, 1}}).project_pi(4) == LaurentQ::zero());
	CHECK(lq({{-1, 1}, {-3, 1}}).project_pi(2) == lq({{-1, 1}, {-3, 1}}));
}

TEST_CASE("project_pi idempotent and equal to root-of-unity average")
{
	std::mt19937 rng(23);
	for (int n : {2, 4})
		for (int i = 0; i < 60; ++i) {
			LaurentQ f = random_laurent(rng);
			LaurentQ p = f.project_pi(n);
			CHECK(p.project_pi(n) == p);
			CHECK(p == project_pi_by_average(f, n));
		}
}

TEST_CASE("residue")
{
	CHECK(lq({{-1, 3}, {-2, 1}}).residue() == rat(3));
	CHECK(lq({{2, 1}}).residue() == rat(0));
	std::mt19937 rng(29);
	for (int i = 0; i < 60; ++i) {
		LaurentQ f = random_laurent(rng);
		CHECK(is_zero(f.d_lambda().residue()));
	}
}

TEST_CASE("plus minus split")
{
	auto [p, m] = lq({{1, 1}, {0, 1}, {-1, 1}}).split_plus_minus();
	CHECK(p == lq({{1, 1}, {0, 1}}));
	CHECK(m == lq({{-1, 1}}));
	auto [p2, m2] = lq({{-2, 1}}).split_plus_minus();
	CHECK(p2.known_zero());
	CHECK(m2 == lq({{-2, 1}}));
	auto [p3, m3] = lq({{3, 1}}).split_plus_minus();
	CHECK(p3 == lq({{3, 1}}));
	CHECK(m3.known_zero());
}

TEST_CASE("window propagation in univariate products")
{
	std::mt19937 rng(31);
	for (int i = 0; i < 80; ++i) {
		LaurentQ a = random_laurent(rng), b = random_laurent(rng);
		LaurentQ exact = a * b;
		LaurentQ ta = a, tb = b;
		std::uniform_int_distribution<int> fl(-6, 0);
		ta.truncate_floor(fl(rng));
		tb.truncate_floor(fl(rng));
		LaurentQ prod = ta * tb;
		// every coefficient the window claims must agree with the exact result
		for (const auto &[e, c] : prod.terms())
			CHECK(c == exact.coeff(e));
		for (const auto &[e, c] : exact.terms())
			if (prod.known(e))
				CHECK(prod.coeff(e) == c);
	}
}

TEST_CASE("coeff refuses the unknown tail")
{
	LaurentQ a = lq({{-1, 1}, {0, 2}});
	a.truncate_floor(-1);
	CHECK(a.coeff(-1) == rat(1));
	CHECK_THROWS_AS((void)a.coeff(-2), WindowError);
}

namespace {

DiffPoly c(long long n) { return DiffPoly::constant(Rational(n)); }

BiSeries bi_from(std::initializer_list<std::tuple<int, int, long long>> terms)
{
	BiSeries s = BiSeries::zero();
	for (auto [e1, e2, v] : terms)
		s = s + BiSeries::monomial({e1, e2}, c(v));
	return s;
}

} // namespace

TEST_CASE("exact diagonal division")
{
	// (lambda - mu)^2 / (lambda-mu)^2 = 1
	BiSeries f = bi_from({{2, 0, 1}, {1, 1, -2}, {0, 2, 1}});
	BiSeries q = divide_by_diff_power(f, 0, 1, 2);
	CHECK(q.terms().size() == 1);
	CHECK(q.coeff_checked({0, 0}) == c(1));

	// (lambda^2 - mu^2)/(lambda - mu) = lambda + mu
	BiSeries g = bi_from({{2, 0, 1}, {0, 2, -1}});
	BiSeries qg = g.divide_diff(0, 1);
	CHECK(qg.coeff_checked({1, 0}) == c(1));
	CHECK(qg.coeff_checked({0, 1}) == c(1));
	CHECK(qg.terms().size() == 2);

	// lambda^2 + mu^2 is not divisible by (lambda-mu)^2
	BiSeries h = bi_from({{2, 0, 1}, {0, 2, 1}});
	CHECK_THROWS_AS(divide_by_diff_power(h, 0, 1, 2), NotDivisibleError);
}

TEST_CASE("division reconstructs the dividend")
{
	std::mt19937 rng(37);
	std::uniform_int_distribution<int> exp(-4, 4), coeff(-4, 4);
	for (int i = 0; i < 60; ++i) {
		// build q, multiply by (lambda - mu), divide back
		BiSeries q = BiSeries::zero();
		for (int t = 0; t < 5; ++t)
			q = q + BiSeries::monomial({exp(rng), exp(rng)}, c(coeff(rng)));
		BiSeries lm = bi_from({{1, 0, 1}, {0, 1, -1}});
		BiSeries f = q * lm;
		BiSeries back = f.divide_diff(0, 1);
		CHECK(agree_on_common_window(back, q));
		CHECK(back.terms() == q.terms());
	}
}

TEST_CASE("windowed division trust region is sound")
{
	// Randomized soundness check: divide a truncated multiple of (l - m),
	// then verify every trusted coefficient matches the exact quotient.
	std::mt19937 rng(41);
	std::uniform_int_distribution<int> exp(-6, 3), coeff(-4, 4), fl(-5, -1);
	for (int i = 0; i < 120; ++i) {
		BiSeries q = BiSeries::zero();
		for (int t = 0; t < 6; ++t)
			q = q + BiSeries::monomial({exp(rng), exp(rng)}, c(coeff(rng)));
		BiSeries lm = bi_from({{1, 0, 1}, {0, 1, -1}});
		BiSeries f = q * lm;
		// truncate f to a window in each variable
		const int f0 = fl(rng), f1 = fl(rng);
		BiSeries fw = f;
		fw.declare_tail(0, f0);
		fw.declare_tail(1, f1);
		BiSeries back = fw.divide_diff(0, 1);
		for (const auto &[k, v] : back.terms()) {
			INFO("exps ", k[0], ",", k[1]);
			CHECK(v == q.coeff_checked(k));
		}
	}
}

TEST_CASE("division region independence")
{
	// Dividing in lambda and in mu must agree wherever both are trusted.
	std::mt19937 rng(43);
	std::uniform_int_distribution<int> exp(-5, 3), coeff(-4, 4);
	for (int i = 0; i < 60; ++i) {
		BiSeries q = BiSeries::zero();
		for (int t = 0; t < 5; ++t)
			q = q + BiSeries::monomial({exp(rng), exp(rng)}, c(coeff(rng)));
		BiSeries lm = bi_from({{1, 0, 1}, {0, 1, -1}});
		BiSeries f = q * lm;
		BiSeries fw = f;
		fw.declare_tail(0, -4);
		fw.declare_tail(1, -4);
		BiSeries via_l = fw.divide_diff(0, 1);
		BiSeries via_m = fw.divide_diff(1, 0).negated(); // (mu - lambda) = -(lambda - mu)
		CHECK(agree_on_common_window(via_l, via_m));
	}
}

TEST_CASE("windowed product trust is sound")
{
	std::mt19937 rng(47);
	std::uniform_int_distribution<int> exp(-6, 3), coeff(-4, 4), fl(-5, -1);
	for (int i = 0; i < 120; ++i) {
		BiSeries a = BiSeries::zero(), b = BiSeries::zero();
		for (int t = 0; t < 5; ++t) {
			a = a + BiSeries::monomial({exp(rng), exp(rng)}, c(coeff(rng)));
			b = b + BiSeries::monomial({exp(rng), exp(rng)}, c(coeff(rng)));
		}
		BiSeries exact = a * b;
		BiSeries aw = a, bw = b;
		aw.declare_tail(0, fl(rng));
		bw.declare_tail(1, fl(rng));
		BiSeries prod = aw * bw;
		for (const auto &[k, v] : prod.terms())
			CHECK(v == exact.coeff_checked(k));
	}
}

TEST_CASE("trivariate pairwise-difference division")
{
	// D = (l1-l2)(l2-l3)(l3-l1); D / D = 1
	TriSeries d = TriSeries::monomial({1, 0, 0}, c(1)) - TriSeries::monomial({0, 1, 0}, c(1));
	TriSeries e = TriSeries::monomial({0, 1, 0}, c(1)) - TriSeries::monomial({0, 0, 1}, c(1));
	TriSeries g = TriSeries::monomial({0, 0, 1}, c(1)) - TriSeries::monomial({1, 0, 0}, c(1));
	TriSeries prod = d * e * g;
	TriSeries quot = prod.divide_diff(0, 1).divide_diff(1, 2).divide_diff(2, 0);
	CHECK(quot.terms().size() == 1);
	CHECK(quot.coeff_checked({0, 0, 0}) == c(1));

	// symmetric non-divisible input
	TriSeries sym = TriSeries::monomial({2, 0, 0}, c(1)) + TriSeries::monomial({0, 2, 0}, c(1)) +
	                TriSeries::monomial({0, 0, 2}, c(1));
	CHECK_THROWS_AS(sym.divide_diff(0, 1), NotDivisibleError);
}

TEST_CASE("residue slice of a bivariate series")
{
	BiSeries f = bi_from({{-1, -1, 7}, {-1, 2, 3}, {0, -1, 5}});
	LaurentP r0 = f.residue_in(0); // slice lambda^{-1}, leaves mu-series
	CHECK(r0.coeff(-1) == c(7));
	CHECK(r0.coeff(2) == c(3));
	LaurentP r1 = f.residue_in(1);
	CHECK(r1.coeff(-1) == c(7));
	CHECK(r1.coeff(0) == c(5));
}
