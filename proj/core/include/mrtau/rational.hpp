#pragma once

#include <gmpxx.h>

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace mrtau {

using BigInt = mpz_class;

// Exact rational coefficients over GMP. Values are always canonical:
// denominator > 0 and gcd(|num|, den) = 1. There is no floating point
// anywhere in the engine.
class Rational {
public:
	Rational() : v_(0) {}
	Rational(int n) : v_(n) {}
	Rational(long n) : v_(static_cast<long>(n)) {}
	Rational(long long n) : v_(BigInt(std::to_string(n))) {}
	explicit Rational(const BigInt &n) : v_(n) {}

	Rational(long long num, long long den)
	    : Rational(BigInt(std::to_string(num)), BigInt(std::to_string(den)))
	{
	}
	Rational(const BigInt &num, const BigInt &den) : v_(num, den)
	{
		if (den == 0)
			throw std::invalid_argument("Rational: zero denominator");
		v_.canonicalize();
	}

	bool is_zero() const { return sgn(v_) == 0; }

	Rational &operator+=(const Rational &o)
	{
		v_ += o.v_;
		return *this;
	}
	Rational &operator-=(const Rational &o)
	{
		v_ -= o.v_;
		return *this;
	}
	Rational &operator*=(const Rational &o)
	{
		v_ *= o.v_;
		return *this;
	}
	Rational &operator/=(const Rational &o)
	{
		if (o.is_zero())
			throw std::invalid_argument("Rational: division by zero");
		v_ /= o.v_;
		return *this;
	}

	friend Rational operator+(Rational a, const Rational &b) { return a += b; }
	friend Rational operator-(Rational a, const Rational &b) { return a -= b; }
	friend Rational operator*(Rational a, const Rational &b) { return a *= b; }
	friend Rational operator/(Rational a, const Rational &b) { return a /= b; }
	Rational operator-() const
	{
		Rational r;
		r.v_ = -v_;
		return r;
	}

	friend bool operator==(const Rational &a, const Rational &b) { return a.v_ == b.v_; }
	friend bool operator!=(const Rational &a, const Rational &b) { return a.v_ != b.v_; }
	friend bool operator<(const Rational &a, const Rational &b) { return a.v_ < b.v_; }
	friend bool operator>(const Rational &a, const Rational &b) { return a.v_ > b.v_; }
	friend bool operator<=(const Rational &a, const Rational &b) { return a.v_ <= b.v_; }
	friend bool operator>=(const Rational &a, const Rational &b) { return a.v_ >= b.v_; }

	friend BigInt numerator(const Rational &r) { return r.v_.get_num(); }
	friend BigInt denominator(const Rational &r) { return r.v_.get_den(); }

private:
	mpq_class v_;
};

inline Rational rat(long long num, long long den = 1)
{
	if (den == 0)
		throw std::invalid_argument("rat: zero denominator");
	return Rational(num, den);
}

inline bool is_zero(const Rational &r) { return r.is_zero(); }

inline std::string to_string(const Rational &r)
{
	const BigInt num = numerator(r);
	const BigInt den = denominator(r);
	if (den == 1)
		return num.get_str();
	return num.get_str() + "/" + den.get_str();
}

inline Rational rational_from_string(std::string_view s)
{
	const auto slash = s.find('/');
	try {
		if (slash == std::string_view::npos)
			return Rational(BigInt(std::string(s)));
		BigInt num{std::string(s.substr(0, slash))};
		BigInt den{std::string(s.substr(slash + 1))};
		return Rational(num, den);
	} catch (const std::exception &) {
		throw std::invalid_argument("rational_from_string: cannot parse '" + std::string(s) +
		                            "'");
	}
}

} // namespace mrtau
