#pragma once

#include "mrtau/laurent.hpp"

#include <array>
#include <limits>
#include <map>
#include <stdexcept>

namespace mrtau {

class NotDivisibleError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

inline constexpr long kNoBound = std::numeric_limits<long>::min() / 4;
inline constexpr int kTopUnknown = std::numeric_limits<int>::max() / 4;

// Laurent object in A spectral variables with DiffPoly coefficients and a
// first-class validity region. The trusted region is an intersection of
// half-spaces sum_{i in mask} v_i >= bound[mask]; outside it coefficients are
// treated as unknown and never emitted. top[i] is a hard upper bound on the
// true support in variable i (tails included), needed to propagate trust
// through products. Exact objects carry no tail and no constraints.
template <int A>
class MultiSeries {
public:
	using Key = std::array<int, A>;
	static constexpr int kMasks = 1 << A;

	MultiSeries()
	{
		bound_.fill(kNoBound);
		top_.fill(kTopUnknown);
	}

	static MultiSeries zero()
	{
		MultiSeries s;
		s.top_.fill(0); // support empty; any finite bound works
		return s;
	}

	static MultiSeries monomial(Key k, DiffPoly c)
	{
		MultiSeries s = zero();
		if (!c.is_zero()) {
			for (int i = 0; i < A; ++i)
				s.top_[i] = k[i];
			s.c_.emplace(k, std::move(c));
		}
		return s;
	}

	// Embed a univariate series into variable slot `var`.
	static MultiSeries from_laurent(int var, const Laurent<DiffPoly> &s)
	{
		MultiSeries r = zero();
		if (s.known_zero())
			return r;
		r.top_[var] = *s.top_bound();
		if (!s.exact()) {
			r.exact_ = false;
			r.bound_[1 << var] = s.floor();
		}
		for (const auto &[e, c] : s.terms()) {
			Key k{};
			k[var] = e;
			r.c_.emplace(k, c);
		}
		return r;
	}

	bool exact() const { return exact_; }
	const std::map<Key, DiffPoly> &terms() const { return c_; }
	long bound(int mask) const { return bound_[mask]; }
	int top(int var) const { return top_[var]; }

	bool trusted(const Key &k) const
	{
		for (int m = 1; m < kMasks; ++m) {
			if (bound_[m] == kNoBound)
				continue;
			long s = 0;
			for (int i = 0; i < A; ++i)
				if (m & (1 << i))
					s += k[i];
			if (s < bound_[m])
				return false;
		}
		return true;
	}

	const DiffPoly &coeff_checked(const Key &k) const
	{
		if (!trusted(k))
			throw WindowError("MultiSeries: coefficient outside the validity window");
		static const DiffPoly zero{};
		auto it = c_.find(k);
		return it == c_.end() ? zero : it->second;
	}

	// Declare an unknown tail in `var` below `floor` (tightens the window).
	MultiSeries &declare_tail(int var, int floor)
	{
		exact_ = false;
		long &b = bound_[1 << var];
		b = (b == kNoBound) ? floor : std::max(b, static_cast<long>(floor));
		prune();
		return *this;
	}

	MultiSeries &set_top(int var, int t)
	{
		top_[var] = t;
		return *this;
	}

	friend MultiSeries operator+(const MultiSeries &a, const MultiSeries &b)
	{
		MultiSeries r;
		r.exact_ = a.exact_ && b.exact_;
		for (int m = 1; m < kMasks; ++m)
			r.bound_[m] = std::max(a.bound_[m], b.bound_[m]);
		for (int i = 0; i < A; ++i)
			r.top_[i] = top_max(a.top_[i], b.top_[i]);
		r.c_ = a.c_;
		for (const auto &[k, c] : b.c_)
			r.add_to(k, c);
		r.prune();
		return r;
	}

	friend MultiSeries operator-(const MultiSeries &a, const MultiSeries &b)
	{
		return a + b.negated();
	}

	MultiSeries negated() const
	{
		MultiSeries r = *this;
		for (auto &[k, c] : r.c_)
			c = -c;
		return r;
	}

	MultiSeries scaled(const Rational &s) const
	{
		MultiSeries r = *this;
		if (is_zero(s))
			r.c_.clear();
		else
			for (auto &[k, c] : r.c_)
				c = c.scaled(s);
		return r;
	}

	MultiSeries scaled(const DiffPoly &s) const
	{
		MultiSeries r = *this;
		std::map<Key, DiffPoly> out;
		for (auto &[k, c] : r.c_) {
			DiffPoly p = c * s;
			if (!p.is_zero())
				out.emplace(k, std::move(p));
		}
		r.c_ = std::move(out);
		return r;
	}

	friend MultiSeries operator*(const MultiSeries &a, const MultiSeries &b)
	{
		if ((a.exact_ && a.c_.empty()) || (b.exact_ && b.c_.empty()))
			return zero();
		MultiSeries r;
		r.exact_ = a.exact_ && b.exact_;
		// Pollution from either factor's unknown tail, constraint by constraint.
		for (int m = 1; m < kMasks; ++m) {
			long bnd = kNoBound;
			if (!a.exact_ && a.bound_[m] != kNoBound)
				bnd = std::max(bnd, a.bound_[m] + mask_top_sum(b, m));
			if (!b.exact_ && b.bound_[m] != kNoBound)
				bnd = std::max(bnd, b.bound_[m] + mask_top_sum(a, m));
			r.bound_[m] = bnd;
		}
		for (int i = 0; i < A; ++i) {
			if (a.top_[i] == kTopUnknown || b.top_[i] == kTopUnknown)
				throw std::logic_error("MultiSeries: product requires known support tops");
			r.top_[i] = a.top_[i] + b.top_[i];
		}
		for (const auto &[ka, ca] : a.c_)
			for (const auto &[kb, cb] : b.c_) {
				Key k;
				for (int i = 0; i < A; ++i)
					k[i] = ka[i] + kb[i];
				r.add_to(k, ca * cb);
			}
		r.prune();
		return r;
	}

	// Exact synthetic division by (x_i - x_j), from the top in x_i.
	// Divisibility failures are detected for exact inputs; for windowed
	// inputs the unknown tail absorbs the remainder and the returned trust
	// region marks exactly which coefficients are guaranteed.
	MultiSeries divide_diff(int i, int j) const
	{
		MultiSeries r;
		r.exact_ = exact_;
		// Trust update: constraints containing i drop by one; constraints with
		// j but not i become (mask | i) constraints shifted by top_i - 1.
		for (int m = 1; m < kMasks; ++m) {
			if (bound_[m] == kNoBound)
				continue;
			const bool has_i = m & (1 << i), has_j = m & (1 << j);
			if (has_i)
				r.bound_[m] = std::max(r.bound_[m], bound_[m] - 1);
			else if (has_j) {
				if (top_[i] == kTopUnknown)
					throw std::logic_error("MultiSeries::divide_diff: unknown top");
				r.bound_[m | (1 << i)] =
				    std::max(r.bound_[m | (1 << i)], bound_[m] + top_[i] - 1);
			} else
				r.bound_[m] = std::max(r.bound_[m], bound_[m]);
		}
		// The true quotient loses one degree in both x_i and x_j: the top
		// x_j-slice of x_j*Q cannot cancel inside x_i*Q - x_j*Q.
		for (int v = 0; v < A; ++v)
			r.top_[v] = top_[v];
		if (top_[i] != kTopUnknown)
			r.top_[i] = top_[i] - 1;
		if (top_[j] != kTopUnknown)
			r.top_[j] = top_[j] - 1;

		// Group stored coefficients by x_i exponent.
		std::map<int, std::map<Key, DiffPoly>> slices;
		for (const auto &[k, c] : c_)
			slices[k[i]].emplace(k, c);
		if (!slices.empty()) {
			const int e_top = slices.rbegin()->first;
			const int e_min = slices.begin()->first;
			const long floor_i = r.bound_[1 << i]; // kNoBound when unconstrained
			const int cascade_cap = e_min - 256;

			std::map<Key, DiffPoly> cur; // holds Q_{e-1} after each step
			for (int e = e_top;; --e) {
				std::map<Key, DiffPoly> next;
				if (auto fit = slices.find(e); fit != slices.end())
					for (const auto &[k, c] : fit->second) {
						Key kk = k;
						kk[i] = e - 1;
						next.emplace(kk, c);
					}
				for (const auto &[k, c] : cur) {
					Key kk = k;
					kk[i] = e - 1;
					kk[j] += 1;
					auto [it, ins] = next.try_emplace(kk, c);
					if (!ins) {
						it->second += c;
						if (it->second.is_zero())
							next.erase(it);
					}
				}
				cur = std::move(next);
				if (exact_) {
					if (e == e_min) {
						if (!cur.empty())
							throw NotDivisibleError("nonzero remainder in exact division");
						break;
					}
				} else if (floor_i != kNoBound) {
					if (e < floor_i)
						break; // everything below the new floor is untrusted
				} else {
					if (e < e_min && cur.empty())
						break;
					if (e < cascade_cap)
						throw NotDivisibleError(
						    "division cascade did not terminate within the window");
				}
				for (const auto &[k, c] : cur)
					if (!c.is_zero())
						r.c_.emplace(k, c);
			}
		}
		r.prune();
		return r;
	}

	// pi projection in one variable: keep exponents < 0 congruent to -1 mod N.
	MultiSeries project_pi(int var, int modulus) const
	{
		MultiSeries r = *this;
		std::map<Key, DiffPoly> kept;
		for (auto &[k, c] : r.c_)
			if (k[var] < 0 && ((k[var] + 1) % modulus) == 0)
				kept.emplace(k, std::move(c));
		r.c_ = std::move(kept);
		r.top_[var] = std::min(top_max(r.top_[var], -1), -1);
		return r;
	}

	// Residue slice x_var = -1, returned over the remaining variable (A == 2).
	Laurent<DiffPoly> residue_in(int var) const
	    requires(A == 2)
	{
		const int other = 1 - var;
		if (bound_[1 << var] != kNoBound && -1 < bound_[1 << var])
			throw WindowError("MultiSeries::residue_in: residue slice not in window");
		Laurent<DiffPoly> out;
		long floor = kNoBound;
		if (bound_[1 << other] != kNoBound)
			floor = std::max(floor, bound_[1 << other]);
		if (bound_[3] != kNoBound)
			floor = std::max(floor, bound_[3] + 1);
		if (floor != kNoBound)
			out = Laurent<DiffPoly>::with_floor(static_cast<int>(floor));
		for (const auto &[k, c] : c_)
			if (k[var] == -1)
				out.add_to(k[other], c);
		return out;
	}

	bool stored_all_zero() const { return c_.empty(); }

private:
	static int top_max(int a, int b)
	{
		if (a == kTopUnknown || b == kTopUnknown)
			return kTopUnknown;
		return std::max(a, b);
	}

	static long mask_top_sum(const MultiSeries &x, int mask)
	{
		long s = 0;
		for (int i = 0; i < A; ++i)
			if (mask & (1 << i)) {
				if (x.top_[i] == kTopUnknown)
					throw std::logic_error("MultiSeries: product requires known support tops");
				s += x.top_[i];
			}
		return s;
	}

	void add_to(const Key &k, const DiffPoly &c)
	{
		if (c.is_zero())
			return;
		auto [it, ins] = c_.try_emplace(k, c);
		if (!ins) {
			it->second += c;
			if (it->second.is_zero())
				c_.erase(it);
		}
	}

	void prune()
	{
		for (auto it = c_.begin(); it != c_.end();)
			it = trusted(it->first) ? std::next(it) : c_.erase(it);
	}

	static void prune_into(MultiSeries &r) { r.prune(); }

	std::map<Key, DiffPoly> c_;
	std::array<long, kMasks> bound_;
	std::array<int, A> top_;
	bool exact_ = true;
};

using BiSeries = MultiSeries<2>;
using TriSeries = MultiSeries<3>;

template <int A>
MultiSeries<A> divide_by_diff_power(MultiSeries<A> f, int i, int j, int power)
{
	for (int p = 0; p < power; ++p)
		f = f.divide_diff(i, j);
	return f;
}

// Product embedding of two univariate series into slots 0 and 1.
inline BiSeries bi_product(const Laurent<DiffPoly> &a, const Laurent<DiffPoly> &b)
{
	return BiSeries::from_laurent(0, a) * BiSeries::from_laurent(1, b);
}

inline TriSeries tri_product(const Laurent<DiffPoly> &a, const Laurent<DiffPoly> &b,
                             const Laurent<DiffPoly> &c)
{
	return TriSeries::from_laurent(0, a) * TriSeries::from_laurent(1, b) *
	       TriSeries::from_laurent(2, c);
}

template <int A>
bool agree_on_common_window(const MultiSeries<A> &a, const MultiSeries<A> &b)
{
	for (const auto &[k, c] : a.terms())
		if (b.trusted(k) && !(b.coeff_checked(k) == c))
			return false;
	for (const auto &[k, c] : b.terms())
		if (a.trusted(k) && !(a.coeff_checked(k) == c))
			return false;
	return true;
}

} // namespace mrtau
