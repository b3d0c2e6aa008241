#pragma once

#include "mrtau/laurent.hpp"
#include "mrtau/multiseries.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mrtau {

class ModelError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

// Constant dim x dim rational matrix.
class RatMat {
public:
	RatMat() = default;
	explicit RatMat(int n) : n_(n), a_(n * n) {}

	static RatMat unit(int n, int i, int j, Rational c = Rational(1))
	{
		RatMat m(n);
		m.at(i, j) = std::move(c);
		return m;
	}

	int dim() const { return n_; }
	Rational &at(int i, int j) { return a_[i * n_ + j]; }
	const Rational &at(int i, int j) const { return a_[i * n_ + j]; }

	RatMat &operator+=(const RatMat &o);
	friend RatMat operator+(RatMat a, const RatMat &o) { return a += o; }
	RatMat scaled(const Rational &c) const;
	friend RatMat operator*(const RatMat &a, const RatMat &b);
	static RatMat bracket(const RatMat &a, const RatMat &b);
	bool is_zero() const;
	Rational trace() const;

	friend bool operator==(const RatMat &, const RatMat &) = default;

private:
	int n_ = 0;
	std::vector<Rational> a_;
};

// Matrix over truncated Laurent series with DiffPoly entries: the working
// representation of elements of the twisted loop algebra.
class LoopMat {
public:
	LoopMat() = default;
	explicit LoopMat(int n) : n_(n), e_(n * n) {}

	static LoopMat from_const(const RatMat &m, int lambda_exp = 0,
	                          const DiffPoly &scale = DiffPoly::constant(Rational(1)));

	int dim() const { return n_; }
	LaurentP &at(int i, int j) { return e_[i * n_ + j]; }
	const LaurentP &at(int i, int j) const { return e_[i * n_ + j]; }

	LoopMat &operator+=(const LoopMat &o);
	LoopMat &operator-=(const LoopMat &o);
	friend LoopMat operator+(LoopMat a, const LoopMat &b) { return a += b; }
	friend LoopMat operator-(LoopMat a, const LoopMat &b) { return a -= b; }
	LoopMat operator-() const;
	friend LoopMat operator*(const LoopMat &a, const LoopMat &b);
	static LoopMat bracket(const LoopMat &a, const LoopMat &b)
	{
		return a * b - b * a;
	}
	LoopMat scaled(const DiffPoly &c) const;
	LoopMat scaled(const Rational &c) const;
	LoopMat shifted(int dexp) const;        // multiply by lambda^dexp
	LoopMat x_derivative() const;           // entrywise d/dx on coefficients
	LoopMat d_lambda() const;               // entrywise d/dlambda
	LoopMat truncated_floor(int floor) const;
	LaurentP trace() const;
	bool stored_all_zero() const;

	friend bool operator==(const LoopMat &, const LoopMat &) = default;

private:
	int n_ = 0;
	std::vector<LaurentP> e_;
};

// Trace-form pairing (x|y) = tr(x y), the normalized invariant bilinear form
// for the shipped matrix realizations (verified at model load).
LaurentP pair_form(const LoopMat &x, const LoopMat &y);
// Two-variable pairing: x carries the first spectral variable, y the second.
BiSeries pair_form_bivariate(const LoopMat &x, const LoopMat &y);
// kappa(x,y) = Res_lambda (x|y) lambda^{-1}, the constant-coordinated form.
DiffPoly kappa_form(const LoopMat &x, const LoopMat &y);

// One basis element m (x) lambda^{base_exp + N k} of a principal-degree slice.
struct GradedAtom {
	RatMat m;
	int base_exp;
};

// Coordinates of a loop element on the graded atoms: per principal degree,
// one DiffPoly per atom of that degree's residue class.
using GradedCoords = std::map<int, std::vector<DiffPoly>>;

struct HeisenbergPart {
	// coefficient of Lambda_d per exponent d (only d in E appear)
	std::map<int, DiffPoly> coords;
	LoopMat image_part; // y with [Lambda, y] = x - pi_H(x)
};

class HierarchyModel {
public:
	std::string name;
	int dim;          // matrix size of the realization
	int r;            // twist order
	int h;            // Coxeter number
	int h_dual;       // dual Coxeter number of the loop algebra
	int h_dual_g;     // dual Coxeter number of the underlying simple g
	int m_vertex;     // chosen Dynkin vertex
	int a_m;          // mark of the vertex, N = r * a_m
	int N;            // order of the twist / lambda-period
	int rh;           // r * h, the exponent period
	std::vector<int> exponents; // m_1 < ... < m_n in [1, rh-1]
	std::vector<std::vector<int>> cartan;

	std::vector<LoopMat> chevalley_e, chevalley_h, chevalley_f;
	LoopMat lambda;        // cyclic element Lambda(lambda)
	RatMat e_nilpotent;    // e = degree-1 part at lambda^0 shape (principal nilpotent of a)
	RatMat e_tilde;        // tilde e_m with Lambda = e + tilde e * lambda
	std::vector<Rational> rho; // diagonal of rho^vee (ad-eigenvalues delta via rho_i - rho_j)
	std::vector<LoopMat> heisenberg; // Lambda_{m_a} for each exponent index

	RatMat gauge_v1;       // basis of the DS gauge V; q_can = u * gauge_v1
	RatMat nilp_f;         // basis of the nilpotent subalgebra n
	RatMat brack_h;        // [e, nilp_f], basis of [e, n]

	std::vector<std::pair<int, DiffPoly>> hamiltonian_P; // P(d) = sum c_i d^i
	std::vector<std::pair<int, DiffPoly>> lax_scalar;    // scalar Lax operator
	int lax_root_order;     // n with L of order n
	int lax_residue_factor; // Omega_{a,k;1,0} = factor * Res L^{(m_a+rhk)/h'...}
	WeightScheme weights;   // grading with all printed tables homogeneous

	// ---- gradation machinery ----
	const std::vector<GradedAtom> &atoms(int degree_residue) const;
	int degree_of_exponent(int entry_i, int entry_j, int lambda_exp,
	                       int *atom_index = nullptr) const;
	GradedCoords decompose(const LoopMat &x) const; // throws ModelError if not a member
	bool is_member(const LoopMat &x) const;
	LoopMat assemble(const GradedCoords &coords) const;
	LoopMat assemble_slice(int degree, const std::vector<DiffPoly> &coords) const;

	// Lambda_d for any exponent d in E (shift of a stored basis element).
	LoopMat heisenberg_element(int degree) const;
	bool is_exponent(int degree) const;
	// index a with degree == m_a (mod rh); -1 if none
	int exponent_class(int degree) const;

	// Unique splitting x = sum c_d Lambda_d + [Lambda, y] per degree slice.
	HeisenbergPart project_heisenberg(const LoopMat &x) const;
	std::optional<int> principal_degree(const LoopMat &x) const;

	// ---- multilinear forms via the adjoint representation of g ----
	BiSeries b_form2(const LoopMat &x, const LoopMat &y) const;
	TriSeries b_form3(const LoopMat &x, const LoopMat &y, const LoopMat &z) const;

	// ---- Drinfeld-Sokolov gauge ----
	LoopMat canonical_q(const DiffPoly &u) const; // u * gauge_v1
	// gauge transformation of q by N in n: exp(ad N)(d + Lambda + q) = d + Lambda + q~
	LoopMat apply_gauge(const LoopMat &q, const LoopMat &ncan) const;
	// unique N in n with the transform landing in V; returns (N, q_can)
	std::pair<LoopMat, LoopMat> canonical_gauge(const LoopMat &q) const;
	// conjugation of a resolvent by the same gauge element
	LoopMat conjugate_by_gauge(const LoopMat &r, const LoopMat &ncan) const;

	void validate() const; // all load-time invariants; throws ModelError

	// internal, filled by the builders
	struct Grading;
	std::shared_ptr<const Grading> grading;
};

const std::vector<const HierarchyModel *> &model_catalog();
const HierarchyModel &model_by_name(const std::string &name);

} // namespace mrtau
