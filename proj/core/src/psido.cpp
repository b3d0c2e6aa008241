#include "mrtau/psido.hpp"
#include <limits>

#include <stdexcept>

namespace mrtau {

PsiDO PsiDO::d(int order, DiffPoly coeff)
{
	PsiDO p;
	p.set(order, std::move(coeff));
	return p;
}

std::optional<int> PsiDO::top_bound() const
{
	if (!c_.empty())
		return std::max(c_.rbegin()->first, exact() ? kNoFloor : floor_ - 1);
	if (exact())
		return std::nullopt;
	return floor_ - 1;
}

const DiffPoly &PsiDO::coeff(int order) const
{
	if (!known(order))
		throw WindowError("PsiDO::coeff: order " + std::to_string(order) +
		                  " below validity floor");
	static const DiffPoly zero{};
	auto it = c_.find(order);
	return it == c_.end() ? zero : it->second;
}

void PsiDO::set(int order, DiffPoly c)
{
	if (!exact() && order < floor_)
		return;
	if (c.is_zero())
		c_.erase(order);
	else
		c_[order] = std::move(c);
}

void PsiDO::add_to(int order, const DiffPoly &c)
{
	if (!exact() && order < floor_)
		return;
	auto it = c_.find(order);
	if (it == c_.end()) {
		if (!c.is_zero())
			c_.emplace(order, c);
	} else {
		it->second += c;
		if (it->second.is_zero())
			c_.erase(it);
	}
}

PsiDO &PsiDO::truncate_floor(int floor)
{
	if (exact() || floor > floor_)
		floor_ = floor;
	c_.erase(c_.begin(), c_.lower_bound(floor_));
	return *this;
}

PsiDO &PsiDO::operator+=(const PsiDO &o)
{
	if (!o.exact())
		truncate_floor(o.floor_);
	for (const auto &[k, c] : o.c_)
		add_to(k, c);
	return *this;
}

PsiDO &PsiDO::operator-=(const PsiDO &o)
{
	if (!o.exact())
		truncate_floor(o.floor_);
	for (const auto &[k, c] : o.c_)
		add_to(k, -c);
	return *this;
}

PsiDO PsiDO::operator-() const
{
	PsiDO r = *this;
	for (auto &[k, c] : r.c_)
		c = -c;
	return r;
}

PsiDO PsiDO::scaled(const Rational &k) const
{
	PsiDO r;
	r.floor_ = floor_;
	for (const auto &[o, c] : c_)
		r.set(o, c.scaled(k));
	return r;
}

namespace {

// Generalized binomial C(i, k) for integer i (possibly negative), k >= 0.
Rational gen_binomial(int i, int k)
{
	Rational r(1);
	for (int t = 0; t < k; ++t) {
		r *= Rational(i - t);
		r /= Rational(t + 1);
	}
	return r;
}

} // namespace

PsiDO compose(const PsiDO &a, const PsiDO &b)
{
	constexpr long kNoBound = std::numeric_limits<long>::min() / 4;
	long target = kNoBound;
	if (!a.exact()) {
		auto tb = b.top_bound();
		if (!tb) // b identically zero
			return PsiDO::zero();
		target = std::max(target, static_cast<long>(a.floor()) + *tb);
	}
	if (!b.exact()) {
		auto ta = a.top_bound();
		if (!ta)
			return PsiDO::zero();
		target = std::max(target, static_cast<long>(b.floor()) + *ta);
	}
	if (target == kNoBound) {
		// both exact: fine only if a is purely differential (finite Leibniz sum)
		if (!a.terms().empty() && a.terms().begin()->first < 0)
			throw std::logic_error(
			    "PsiDO compose: exact operands with negative orders need an explicit floor");
		PsiDO r;
		for (const auto &[i, ai] : a.terms())
			for (const auto &[j, bj] : b.terms()) {
				DiffPoly deriv = bj;
				for (int k = 0; k <= i; ++k) {
					const Rational bin = gen_binomial(i, k);
					if (!is_zero(bin))
						r.add_to(i - k + j, ai * deriv.scaled(bin));
					if (k < i)
						deriv = total_x_derivative(deriv);
				}
			}
		return r;
	}
	return compose(a, b, static_cast<int>(target));
}

PsiDO compose(const PsiDO &a, const PsiDO &b, int floor)
{
	if (!a.exact())
		floor = std::max(floor, [&] {
			auto tb = b.top_bound();
			return tb ? a.floor() + *tb : floor;
		}());
	if (!b.exact())
		floor = std::max(floor, [&] {
			auto ta = a.top_bound();
			return ta ? b.floor() + *ta : floor;
		}());
	PsiDO r = PsiDO::with_floor(floor);
	for (const auto &[i, ai] : a.terms())
		for (const auto &[j, bj] : b.terms()) {
			DiffPoly deriv = bj;
			const int kmax = (i >= 0) ? i : (i + j - floor);
			for (int k = 0; k <= kmax; ++k) {
				const Rational bin = gen_binomial(i, k);
				if (!is_zero(bin))
					r.add_to(i - k + j, ai * deriv.scaled(bin));
				if (k < kmax)
					deriv = total_x_derivative(deriv);
			}
		}
	return r;
}

PsiDO nth_root(const PsiDO &L, int n, int result_floor)
{
	if (n < 1)
		throw std::invalid_argument("nth_root: n must be positive");
	auto top = L.top_bound();
	if (!top || *top != n || !(L.coeff(n) == DiffPoly::constant(Rational(1))))
		throw std::invalid_argument("nth_root: operator must be monic of order n");

	PsiDO r = PsiDO::with_floor(result_floor);
	r.set(1, DiffPoly::constant(Rational(1)));
	const Rational inv_n = Rational(1) / Rational(n);
	while (true) {
		PsiDO p = r;
		for (int t = 1; t < n; ++t)
			p = compose(p, r);
		PsiDO err = L - p;
		// highest known nonzero order of the error
		if (err.terms().empty())
			break;
		const int e = err.terms().rbegin()->first;
		const int corr_order = e - n + 1;
		if (corr_order < result_floor)
			break; // below the guaranteed window
		r.add_to(corr_order, err.terms().rbegin()->second.scaled(inv_n));
	}
	return r;
}

PsiDO fractional_power(const PsiDO &L, int p, int n, int result_floor)
{
	if (p < 1)
		throw std::invalid_argument("fractional_power: p must be positive");
	// r^p loses (p-1) orders of window relative to r (top(r) = 1)
	const int root_floor = result_floor - p + 1;
	PsiDO r = nth_root(L, n, root_floor);
	PsiDO acc = r;
	for (int t = 1; t < p; ++t)
		acc = compose(acc, r);
	return acc;
}

DiffPoly fractional_power_residue(const PsiDO &L, int p, int n)
{
	return fractional_power(L, p, n, -2).residue();
}

} // namespace mrtau
