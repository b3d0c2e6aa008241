#pragma once

#include "mrtau/rational.hpp"

#include <compare>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mrtau {

// One jet coordinate u_{s,k}: dependent variable index s, x-derivative order k.
struct JetVar {
	int var = 0;
	int order = 0;

	friend auto operator<=>(const JetVar &, const JetVar &) = default;
};

// Product of jet variables with positive exponents, kept sorted by (var, order).
class Monomial {
public:
	using Factors = std::vector<std::pair<JetVar, int>>;

	Monomial() = default;
	explicit Monomial(Factors f);

	static Monomial one() { return Monomial{}; }
	static Monomial jet(JetVar v, int exp = 1);

	bool is_one() const { return f_.empty(); }
	const Factors &factors() const { return f_; }
	int exponent_of(JetVar v) const;
	int total_degree() const;
	// Ordering weight: sum of exp*(2 + order). Fixes the canonical term order
	// (and matches the grading of the shipped models, where u has weight 2).
	long order_weight() const { return w_; }

	Monomial times(JetVar v, int exp = 1) const;
	Monomial times(const Monomial &o) const;
	// Divide by v^exp; throws if the monomial does not contain it.
	Monomial without(JetVar v, int exp = 1) const;

	friend bool operator==(const Monomial &a, const Monomial &b) { return a.f_ == b.f_; }

private:
	void recompute_weight();

	Factors f_;
	long w_ = 0;
};

// Graded-lexicographic monomial order: by order_weight, then by the exploded
// jet-variable sequence. Total, and fixes canonical printed output.
struct MonomialLess {
	bool operator()(const Monomial &a, const Monomial &b) const;
};

class WindowError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

// Element of the differential polynomial ring Q[u_{s,k}].
class DiffPoly {
public:
	using TermMap = std::map<Monomial, Rational, MonomialLess>;

	DiffPoly() = default;

	static DiffPoly zero() { return DiffPoly{}; }
	static DiffPoly constant(Rational c);
	static DiffPoly jet(int var, int order, Rational coeff = Rational(1));
	static DiffPoly term(Monomial m, Rational c);

	bool is_zero() const { return t_.empty(); }
	bool is_constant() const;
	const TermMap &terms() const { return t_; }
	Rational coeff(const Monomial &m) const;
	Rational constant_term() const { return coeff(Monomial::one()); }
	int num_terms() const { return static_cast<int>(t_.size()); }
	// Highest jet variable present, by (order, var); nullopt for constants.
	std::optional<JetVar> top_jet() const;

	void add_term(const Monomial &m, const Rational &c);

	DiffPoly &operator+=(const DiffPoly &o);
	DiffPoly &operator-=(const DiffPoly &o);
	// *this += a * b, without building the product as a temporary
	void add_product(const DiffPoly &a, const DiffPoly &b);
	friend DiffPoly operator+(DiffPoly a, const DiffPoly &b) { return a += b; }
	friend DiffPoly operator-(DiffPoly a, const DiffPoly &b) { return a -= b; }
	friend DiffPoly operator*(const DiffPoly &a, const DiffPoly &b);
	DiffPoly operator-() const;
	DiffPoly scaled(const Rational &c) const;
	DiffPoly pow(int n) const;

	friend bool operator==(const DiffPoly &, const DiffPoly &) = default;

private:
	TermMap t_;
};

inline DiffPoly operator*(const DiffPoly &a, const Rational &c) { return a.scaled(c); }
inline DiffPoly operator*(const Rational &c, const DiffPoly &a) { return a.scaled(c); }

// d/du_{s,k}, as a polynomial partial derivative.
DiffPoly partial(const DiffPoly &f, JetVar v);

// Total x-derivative: Leibniz derivation with u_{s,k} -> u_{s,k+1}.
DiffPoly total_x_derivative(const DiffPoly &f);
DiffPoly total_x_derivative(const DiffPoly &f, int times);

// Euler operator sum_k (-d/dx)^k d/du_{s,k}.
DiffPoly variational_derivative(const DiffPoly &f, int var);

// Exact antiderivative: g with dg/dx = f, normalized to zero constant term.
// nullopt iff f is not a total derivative (Euler-operator test).
std::optional<DiffPoly> integrate_x(const DiffPoly &f);

// Per-variable base weights w_s; weight(u_{s,k}) = w_s + k.
struct WeightScheme {
	std::map<int, Rational> base;

	Rational of(JetVar v) const;
	static WeightScheme uniform(Rational w) { return WeightScheme{{{-1, std::move(w)}}}; }
};

// Common weight of all monomials of f, or nullopt when inhomogeneous.
// Precondition: f != 0.
std::optional<Rational> weight_of(const DiffPoly &f, const WeightScheme &w);

// Evolutionary derivation: sum_{s,k} (df/du_{s,k}) d_x^k(rhs_s).
// Throws std::out_of_range when rhs lacks a variable f depends on.
DiffPoly apply_flow_derivation(const DiffPoly &f, const std::map<int, DiffPoly> &rhs);

// Differential-algebra substitution u_{s,0} -> subs[s], extended through d_x.
DiffPoly substitute(const DiffPoly &f, const std::map<int, DiffPoly> &subs);

// Canonical text form, e.g. "-2/3*u + 1/9*u_5x".
std::string to_string(const DiffPoly &f);
// Parses exactly the canonical text form (plus harmless whitespace).
DiffPoly diffpoly_from_string(std::string_view s);

} // namespace mrtau
