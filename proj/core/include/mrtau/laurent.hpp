#pragma once

#include "mrtau/diffpoly.hpp"
#include "mrtau/rational.hpp"

#include <limits>
#include <map>
#include <optional>

namespace mrtau {

inline bool is_zero(const DiffPoly &p) { return p.is_zero(); }

// Sentinel floor meaning "no unknown tail": the series is exactly known.
inline constexpr int kNoFloor = std::numeric_limits<int>::min() / 4;

// Truncated Laurent series in one spectral variable. Coefficients for
// exponents >= floor() are exactly known; below that lies an unknown tail.
// Exact series (kNoFloor) have no tail at all. Arithmetic propagates the
// window conservatively; coeff() refuses to answer inside the tail.
template <class T>
class Laurent {
public:
	Laurent() = default;

	static Laurent zero() { return Laurent{}; }
	static Laurent monomial(int exp, T c)
	{
		Laurent s;
		s.set(exp, std::move(c));
		return s;
	}
	static Laurent with_floor(int floor)
	{
		Laurent s;
		s.floor_ = floor;
		return s;
	}

	bool exact() const { return floor_ == kNoFloor; }
	int floor() const { return floor_; }
	const std::map<int, T> &terms() const { return c_; }
	bool stored_empty() const { return c_.empty(); }
	bool known_zero() const { return exact() && c_.empty(); }

	// Largest exponent that may carry a nonzero coefficient.
	// nullopt for the identically-zero exact series.
	std::optional<int> top_bound() const
	{
		if (!c_.empty())
			return std::max(c_.rbegin()->first, exact() ? kNoFloor : floor_ - 1);
		if (exact())
			return std::nullopt;
		return floor_ - 1;
	}

	bool known(int exp) const { return exact() || exp >= floor_; }

	const T &coeff(int exp) const
	{
		if (!known(exp))
			throw WindowError("Laurent::coeff: exponent " + std::to_string(exp) +
			                  " below validity floor " + std::to_string(floor_));
		static const T zero{};
		auto it = c_.find(exp);
		return it == c_.end() ? zero : it->second;
	}

	void set(int exp, T c)
	{
		if (!exact() && exp < floor_)
			return; // below the window: unknown, nothing to store
		if (is_zero(c))
			c_.erase(exp);
		else
			c_[exp] = std::move(c);
	}

	void add_to(int exp, const T &c)
	{
		if (!exact() && exp < floor_)
			return;
		auto it = c_.find(exp);
		if (it == c_.end()) {
			if (!is_zero(c))
				c_.emplace(exp, c);
		} else {
			it->second += c;
			if (is_zero(it->second))
				c_.erase(it);
		}
	}

	// Raise the validity floor (forget everything below it).
	Laurent &truncate_floor(int floor)
	{
		if (exact() || floor > floor_)
			floor_ = floor;
		c_.erase(c_.begin(), c_.lower_bound(floor_));
		return *this;
	}
	Laurent truncated_floor_copy(int floor) const
	{
		Laurent r = *this;
		if (floor != kNoFloor)
			r.truncate_floor(floor);
		return r;
	}

	Laurent &operator+=(const Laurent &o)
	{
		merge_floor(o.floor_);
		for (const auto &[e, c] : o.c_)
			add_to(e, c);
		return *this;
	}
	Laurent &operator-=(const Laurent &o)
	{
		merge_floor(o.floor_);
		for (const auto &[e, c] : o.c_) {
			T neg = T{};
			neg -= c;
			add_to(e, neg);
		}
		return *this;
	}
	friend Laurent operator+(Laurent a, const Laurent &b) { return a += b; }
	friend Laurent operator-(Laurent a, const Laurent &b) { return a -= b; }
	Laurent operator-() const
	{
		Laurent r = *this;
		for (auto &[e, c] : r.c_) {
			T neg = T{};
			neg -= c;
			c = std::move(neg);
		}
		return r;
	}

	friend Laurent operator*(const Laurent &a, const Laurent &b)
	{
		if (a.known_zero() || b.known_zero())
			return zero();
		Laurent r;
		if (!a.exact() || !b.exact()) {
			long f = std::numeric_limits<long>::min();
			if (!a.exact())
				f = std::max(f, static_cast<long>(a.floor_) + *b.top_bound());
			if (!b.exact())
				f = std::max(f, static_cast<long>(b.floor_) + *a.top_bound());
			r.floor_ = static_cast<int>(f);
		}
		for (const auto &[ea, ca] : a.c_)
			for (const auto &[eb, cb] : b.c_) {
				const int e = ea + eb;
				if (!r.exact() && e < r.floor_)
					continue;
				if constexpr (requires(T t) { t.add_product(ca, cb); })
					r.c_[e].add_product(ca, cb);
				else
					r.add_to(e, ca * cb);
			}
		if constexpr (requires(T t) { t.is_zero(); }) {
			for (auto it = r.c_.begin(); it != r.c_.end();)
				it = it->second.is_zero() ? r.c_.erase(it) : std::next(it);
		} else {
			for (auto it = r.c_.begin(); it != r.c_.end();)
				it = is_zero(it->second) ? r.c_.erase(it) : std::next(it);
		}
		return r;
	}

	template <class S>
	Laurent scaled(const S &k) const
	{
		Laurent r;
		r.floor_ = floor_;
		for (const auto &[e, c] : c_)
			r.set(e, c * k);
		return r;
	}

	Laurent shifted(int dexp) const
	{
		Laurent r;
		r.floor_ = exact() ? kNoFloor : floor_ + dexp;
		for (const auto &[e, c] : c_)
			r.c_.emplace(e + dexp, c);
		return r;
	}

	// d/d lambda; the window shrinks by one.
	Laurent d_lambda() const
	{
		Laurent r;
		r.floor_ = exact() ? kNoFloor : floor_ - 1;
		for (const auto &[e, c] : c_)
			if (e != 0)
				r.set(e - 1, c * Rational(e));
		return r;
	}

	// pi projection: keep exponents e < 0 with e == -1 (mod modulus).
	Laurent project_pi(int modulus) const
	{
		Laurent r;
		r.floor_ = floor_;
		for (const auto &[e, c] : c_)
			if (e < 0 && ((e + 1) % modulus) == 0)
				r.c_.emplace(e, c);
		return r;
	}

	const T &residue() const { return coeff(-1); }

	// (polynomial part, strictly negative part); requires an exact series
	// on the negative side only when the tail could interfere.
	std::pair<Laurent, Laurent> split_plus_minus() const
	{
		Laurent plus, minus;
		minus.floor_ = floor_;
		for (const auto &[e, c] : c_)
			(e >= 0 ? plus : minus).c_.emplace(e, c);
		return {plus, minus};
	}

	friend bool operator==(const Laurent &, const Laurent &) = default;

private:
	void merge_floor(int of)
	{
		if (of == kNoFloor)
			return;
		if (exact() || of > floor_)
			floor_ = of;
		truncate_floor(floor_);
	}

	std::map<int, T> c_;
	int floor_ = kNoFloor;
};

using LaurentQ = Laurent<Rational>;
using LaurentP = Laurent<DiffPoly>;

// True when every coefficient known to both sides agrees exactly.
template <class T>
bool agree_on_common_window(const Laurent<T> &a, const Laurent<T> &b)
{
	for (const auto &[e, c] : a.terms())
		if (b.known(e) && !(b.coeff(e) == c))
			return false;
	for (const auto &[e, c] : b.terms())
		if (a.known(e) && !(a.coeff(e) == c))
			return false;
	return true;
}

} // namespace mrtau
