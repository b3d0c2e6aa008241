#pragma once

#include "mrtau/diffpoly.hpp"
#include "mrtau/laurent.hpp"

#include <map>

namespace mrtau {

// Truncated pseudodifferential operator sum_{i<=M} a_i d^i with DiffPoly
// coefficients. Orders >= floor() are exactly known; composition uses the
// generalized Leibniz rule with binomial coefficients C(i,k) extended to
// negative i, truncated at the guaranteed window.
class PsiDO {
public:
	PsiDO() = default;

	static PsiDO zero() { return PsiDO{}; }
	static PsiDO d(int order, DiffPoly coeff = DiffPoly::constant(Rational(1)));
	static PsiDO with_floor(int floor)
	{
		PsiDO p;
		p.floor_ = floor;
		return p;
	}

	bool exact() const { return floor_ == kNoFloor; }
	int floor() const { return floor_; }
	const std::map<int, DiffPoly> &terms() const { return c_; }
	std::optional<int> top_bound() const;
	bool known(int order) const { return exact() || order >= floor_; }
	const DiffPoly &coeff(int order) const;
	void set(int order, DiffPoly c);
	void add_to(int order, const DiffPoly &c);
	PsiDO &truncate_floor(int floor);

	PsiDO &operator+=(const PsiDO &o);
	PsiDO &operator-=(const PsiDO &o);
	friend PsiDO operator+(PsiDO a, const PsiDO &b) { return a += b; }
	friend PsiDO operator-(PsiDO a, const PsiDO &b) { return a -= b; }
	PsiDO operator-() const;
	PsiDO scaled(const Rational &k) const;

	// Coefficient of d^{-1}.
	const DiffPoly &residue() const { return coeff(-1); }

	friend bool operator==(const PsiDO &, const PsiDO &) = default;

private:
	std::map<int, DiffPoly> c_;
	int floor_ = kNoFloor;
};

// Composition A o B on the guaranteed window. When both operands are exact
// and the result support is finite (A purely differential), the result is
// exact; otherwise a window must be present or supplied via `floor`.
PsiDO compose(const PsiDO &a, const PsiDO &b);
PsiDO compose(const PsiDO &a, const PsiDO &b, int floor);

// Monic n-th root: r with r^n = L on the window, r = d + lower orders.
// Newton-style order-by-order matching; no x-integration involved.
PsiDO nth_root(const PsiDO &L, int n, int result_floor);

// L^{p/n} for integer p >= 1, known down to result_floor.
PsiDO fractional_power(const PsiDO &L, int p, int n, int result_floor);

// Residue of L^{p/n} with enough internal depth for an exact answer.
DiffPoly fractional_power_residue(const PsiDO &L, int p, int n);

} // namespace mrtau
