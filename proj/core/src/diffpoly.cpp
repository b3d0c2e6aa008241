#include "mrtau/diffpoly.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace mrtau {

Monomial::Monomial(Factors f) : f_(std::move(f))
{
	std::sort(f_.begin(), f_.end(),
	          [](const auto &a, const auto &b) { return a.first < b.first; });
	for (std::size_t i = 0; i < f_.size(); ++i) {
		if (f_[i].second <= 0)
			throw std::invalid_argument("Monomial: exponents must be positive");
		if (i > 0 && f_[i - 1].first == f_[i].first)
			throw std::invalid_argument("Monomial: duplicate jet variable");
	}
	recompute_weight();
}

void Monomial::recompute_weight()
{
	w_ = 0;
	for (const auto &[jv, e] : f_)
		w_ += static_cast<long>(e) * (2 + jv.order);
}

Monomial Monomial::jet(JetVar v, int exp)
{
	return Monomial{Factors{{v, exp}}};
}

int Monomial::exponent_of(JetVar v) const
{
	for (const auto &[jv, e] : f_)
		if (jv == v)
			return e;
	return 0;
}

int Monomial::total_degree() const
{
	int d = 0;
	for (const auto &[jv, e] : f_)
		d += e;
	return d;
}

Monomial Monomial::times(JetVar v, int exp) const
{
	if (exp == 0)
		return *this;
	Factors f = f_;
	auto it = std::lower_bound(f.begin(), f.end(), v,
	                           [](const auto &p, JetVar x) { return p.first < x; });
	if (it != f.end() && it->first == v)
		it->second += exp;
	else
		f.insert(it, {v, exp});
	Monomial r;
	r.f_ = std::move(f);
	r.w_ = w_ + static_cast<long>(exp) * (2 + v.order);
	return r;
}

Monomial Monomial::times(const Monomial &o) const
{
	Monomial r;
	r.f_.reserve(f_.size() + o.f_.size());
	auto a = f_.begin(), b = o.f_.begin();
	while (a != f_.end() && b != o.f_.end()) {
		if (a->first < b->first)
			r.f_.push_back(*a++);
		else if (b->first < a->first)
			r.f_.push_back(*b++);
		else {
			r.f_.emplace_back(a->first, a->second + b->second);
			++a;
			++b;
		}
	}
	r.f_.insert(r.f_.end(), a, f_.end());
	r.f_.insert(r.f_.end(), b, o.f_.end());
	r.w_ = w_ + o.w_;
	return r;
}

Monomial Monomial::without(JetVar v, int exp) const
{
	Factors f = f_;
	auto it = std::find_if(f.begin(), f.end(), [&](const auto &p) { return p.first == v; });
	if (it == f.end() || it->second < exp)
		throw std::invalid_argument("Monomial::without: variable not present");
	it->second -= exp;
	if (it->second == 0)
		f.erase(it);
	Monomial r;
	r.f_ = std::move(f);
	r.w_ = w_ - static_cast<long>(exp) * (2 + v.order);
	return r;
}

bool MonomialLess::operator()(const Monomial &a, const Monomial &b) const
{
	const long wa = a.order_weight(), wb = b.order_weight();
	if (wa != wb)
		return wa < wb;
	// Lexicographic on the exploded (var, order) sequence.
	auto ia = a.factors().begin(), ib = b.factors().begin();
	int ra = 0, rb = 0; // repetitions consumed within the current factor
	while (true) {
		const bool ea = ia == a.factors().end();
		const bool eb = ib == b.factors().end();
		if (ea || eb)
			return ea && !eb;
		if (ia->first != ib->first)
			return ia->first < ib->first;
		const int na = ia->second - ra, nb = ib->second - rb;
		const int step = std::min(na, nb);
		ra += step;
		rb += step;
		if (ra == ia->second) {
			++ia;
			ra = 0;
		}
		if (rb == ib->second) {
			++ib;
			rb = 0;
		}
	}
}

DiffPoly DiffPoly::constant(Rational c)
{
	DiffPoly p;
	p.add_term(Monomial::one(), c);
	return p;
}

DiffPoly DiffPoly::jet(int var, int order, Rational coeff)
{
	DiffPoly p;
	p.add_term(Monomial::jet({var, order}), coeff);
	return p;
}

DiffPoly DiffPoly::term(Monomial m, Rational c)
{
	DiffPoly p;
	p.add_term(m, c);
	return p;
}

bool DiffPoly::is_constant() const
{
	return t_.empty() || (t_.size() == 1 && t_.begin()->first.is_one());
}

Rational DiffPoly::coeff(const Monomial &m) const
{
	auto it = t_.find(m);
	return it == t_.end() ? Rational(0) : it->second;
}

std::optional<JetVar> DiffPoly::top_jet() const
{
	std::optional<JetVar> best;
	for (const auto &[m, c] : t_)
		for (const auto &[jv, e] : m.factors()) {
			// rank by (order, var)
			if (!best || std::pair(best->order, best->var) < std::pair(jv.order, jv.var))
				best = jv;
		}
	return best;
}

void DiffPoly::add_term(const Monomial &m, const Rational &c)
{
	if (mrtau::is_zero(c))
		return;
	auto [it, inserted] = t_.try_emplace(m, c);
	if (!inserted) {
		it->second += c;
		if (mrtau::is_zero(it->second))
			t_.erase(it);
	}
}

DiffPoly &DiffPoly::operator+=(const DiffPoly &o)
{
	for (const auto &[m, c] : o.t_)
		add_term(m, c);
	return *this;
}

DiffPoly &DiffPoly::operator-=(const DiffPoly &o)
{
	for (const auto &[m, c] : o.t_)
		add_term(m, -c);
	return *this;
}

void DiffPoly::add_product(const DiffPoly &a, const DiffPoly &b)
{
	for (const auto &[ma, ca] : a.t_)
		for (const auto &[mb, cb] : b.t_)
			add_term(ma.times(mb), ca * cb);
}

DiffPoly operator*(const DiffPoly &a, const DiffPoly &b)
{
	DiffPoly r;
	r.add_product(a, b);
	return r;
}

DiffPoly DiffPoly::operator-() const
{
	DiffPoly r;
	for (const auto &[m, c] : t_)
		r.t_.emplace(m, -c);
	return r;
}

DiffPoly DiffPoly::scaled(const Rational &c) const
{
	if (mrtau::is_zero(c))
		return {};
	DiffPoly r;
	for (const auto &[m, k] : t_)
		r.t_.emplace(m, k * c);
	return r;
}

DiffPoly DiffPoly::pow(int n) const
{
	if (n < 0)
		throw std::invalid_argument("DiffPoly::pow: negative exponent");
	DiffPoly r = constant(Rational(1));
	for (int i = 0; i < n; ++i)
		r = r * *this;
	return r;
}

DiffPoly partial(const DiffPoly &f, JetVar v)
{
	DiffPoly r;
	for (const auto &[m, c] : f.terms()) {
		const int e = m.exponent_of(v);
		if (e == 0)
			continue;
		r.add_term(m.without(v), c * e);
	}
	return r;
}

DiffPoly total_x_derivative(const DiffPoly &f)
{
	DiffPoly r;
	for (const auto &[m, c] : f.terms())
		for (const auto &[jv, e] : m.factors()) {
			Monomial shifted = m.without(jv).times(JetVar{jv.var, jv.order + 1});
			r.add_term(shifted, c * e);
		}
	return r;
}

DiffPoly total_x_derivative(const DiffPoly &f, int times)
{
	DiffPoly r = f;
	for (int i = 0; i < times; ++i)
		r = total_x_derivative(r);
	return r;
}

DiffPoly variational_derivative(const DiffPoly &f, int var)
{
	DiffPoly r;
	int max_order = -1;
	for (const auto &[m, c] : f.terms())
		for (const auto &[jv, e] : m.factors())
			if (jv.var == var)
				max_order = std::max(max_order, jv.order);
	for (int k = 0; k <= max_order; ++k) {
		DiffPoly dk = partial(f, JetVar{var, k});
		dk = total_x_derivative(dk, k);
		if (k % 2 == 0)
			r += dk;
		else
			r -= dk;
	}
	return r;
}

std::optional<DiffPoly> integrate_x(const DiffPoly &f)
{
	if (!mrtau::is_zero(f.constant_term()))
		return std::nullopt;
	// Euler-operator gate: f is exact iff delta f / delta u_s = 0 for all s.
	{
		std::vector<int> vars;
		for (const auto &[m, c] : f.terms())
			for (const auto &[jv, e] : m.factors())
				vars.push_back(jv.var);
		std::sort(vars.begin(), vars.end());
		vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
		for (int s : vars)
			if (!variational_derivative(f, s).is_zero())
				return std::nullopt;
	}
	// Peel the top jet variable. An exact nonzero f is linear in its top jet
	// u_{s,K}; subtracting d_x of the formal antiderivative of df/du_{s,K}
	// with respect to u_{s,K-1} strictly lowers the top variable.
	DiffPoly rest = f;
	DiffPoly result;
	while (!rest.is_zero()) {
		const auto top = rest.top_jet();
		if (!top || top->order == 0)
			return std::nullopt; // cannot happen after the Euler gate
		const JetVar v = *top;
		const JetVar w{v.var, v.order - 1};
		DiffPoly a = partial(rest, v);
		if (!partial(a, v).is_zero())
			return std::nullopt; // nonlinear in the top jet: not exact
		// Formal antiderivative of a with respect to the polynomial variable w.
		DiffPoly piece;
		for (const auto &[m, c] : a.terms()) {
			const int e = m.exponent_of(w);
			piece.add_term(m.times(w), c / (e + 1));
		}
		rest -= total_x_derivative(piece);
		result += piece;
	}
	// Normalization: zero constant term (the peeling never introduces one).
	return result;
}

Rational WeightScheme::of(JetVar v) const
{
	auto it = base.find(v.var);
	if (it == base.end())
		it = base.find(-1); // uniform default slot
	if (it == base.end())
		throw std::out_of_range("WeightScheme: no weight for variable");
	return it->second + v.order;
}

std::optional<Rational> weight_of(const DiffPoly &f, const WeightScheme &w)
{
	if (f.is_zero())
		throw std::invalid_argument("weight_of: zero polynomial");
	std::optional<Rational> common;
	for (const auto &[m, c] : f.terms()) {
		Rational mw(0);
		for (const auto &[jv, e] : m.factors())
			mw += w.of(jv) * e;
		if (!common)
			common = mw;
		else if (*common != mw)
			return std::nullopt;
	}
	return common;
}

DiffPoly apply_flow_derivation(const DiffPoly &f, const std::map<int, DiffPoly> &rhs)
{
	// Cache d_x^k(rhs_s) as needed.
	std::map<int, std::vector<DiffPoly>> dcache;
	auto rhs_deriv = [&](int var, int order) -> const DiffPoly & {
		auto rit = rhs.find(var);
		if (rit == rhs.end())
			throw std::out_of_range("apply_flow_derivation: missing rhs for variable " +
			                        std::to_string(var));
		auto &vec = dcache[var];
		if (vec.empty())
			vec.push_back(rit->second);
		while (static_cast<int>(vec.size()) <= order)
			vec.push_back(total_x_derivative(vec.back()));
		return vec[order];
	};
	DiffPoly r;
	std::vector<JetVar> used;
	for (const auto &[m, c] : f.terms())
		for (const auto &[jv, e] : m.factors())
			used.push_back(jv);
	std::sort(used.begin(), used.end());
	used.erase(std::unique(used.begin(), used.end()), used.end());
	for (JetVar jv : used)
		r += partial(f, jv) * rhs_deriv(jv.var, jv.order);
	return r;
}

DiffPoly substitute(const DiffPoly &f, const std::map<int, DiffPoly> &subs)
{
	std::map<int, std::vector<DiffPoly>> dcache;
	auto jet_image = [&](int var, int order) -> const DiffPoly & {
		auto sit = subs.find(var);
		if (sit == subs.end())
			throw std::out_of_range("substitute: missing image for variable " +
			                        std::to_string(var));
		auto &vec = dcache[var];
		if (vec.empty())
			vec.push_back(sit->second);
		while (static_cast<int>(vec.size()) <= order)
			vec.push_back(total_x_derivative(vec.back()));
		return vec[order];
	};
	DiffPoly r;
	for (const auto &[m, c] : f.terms()) {
		DiffPoly t = DiffPoly::constant(c);
		for (const auto &[jv, e] : m.factors())
			t = t * jet_image(jv.var, jv.order).pow(e);
		r += t;
	}
	return r;
}

namespace {

std::string var_name(int var)
{
	switch (var) {
	case 0: return "u";
	case 1: return "v";
	case 2: return "w";
	default: return "q" + std::to_string(var);
	}
}

std::string jet_name(JetVar v)
{
	std::string n = var_name(v.var);
	if (v.order == 1)
		n += "_x";
	else if (v.order > 1)
		n += "_" + std::to_string(v.order) + "x";
	return n;
}

} // namespace

std::string to_string(const DiffPoly &f)
{
	if (f.is_zero())
		return "0";
	std::ostringstream os;
	bool first = true;
	for (const auto &[m, c] : f.terms()) {
		const bool neg = c < 0;
		const Rational mag = neg ? Rational(-c) : c;
		if (first)
			os << (neg ? "-" : "");
		else
			os << (neg ? " - " : " + ");
		first = false;
		const bool unit = mag == 1;
		if (!unit || m.is_one())
			os << to_string(mag);
		bool star = !unit && !m.is_one();
		for (const auto &[jv, e] : m.factors()) {
			if (star)
				os << "*";
			os << jet_name(jv);
			if (e > 1)
				os << "^" << e;
			star = true;
		}
	}
	return os.str();
}

namespace {

struct Parser {
	std::string_view s;
	std::size_t i = 0;

	void skip_ws()
	{
		while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])))
			++i;
	}
	bool eof()
	{
		skip_ws();
		return i >= s.size();
	}
	char peek()
	{
		skip_ws();
		return i < s.size() ? s[i] : '\0';
	}
	[[noreturn]] void fail(const std::string &what)
	{
		throw std::invalid_argument("diffpoly_from_string: " + what + " at position " +
		                            std::to_string(i));
	}
	std::string parse_digits()
	{
		skip_ws();
		std::size_t start = i;
		while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])))
			++i;
		if (start == i)
			fail("expected integer");
		return std::string(s.substr(start, i - start));
	}
	int parse_uint()
	{
		return std::stoi(parse_digits());
	}
	Rational parse_rational()
	{
		BigInt num{parse_digits()};
		if (peek() == '/') {
			++i;
			BigInt den{parse_digits()};
			return Rational(num, den);
		}
		return Rational(num);
	}
	int parse_var()
	{
		skip_ws();
		char c = s[i];
		int var;
		if (c == 'u')
			var = 0;
		else if (c == 'v')
			var = 1;
		else if (c == 'w')
			var = 2;
		else if (c == 'q') {
			++i;
			return static_cast<int>(parse_uint());
		} else
			fail("expected variable name");
		++i;
		return var;
	}
	JetVar parse_jet()
	{
		const int var = parse_var();
		int order = 0;
		if (i < s.size() && s[i] == '_') {
			++i;
			if (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
				order = static_cast<int>(parse_uint());
				if (i >= s.size() || s[i] != 'x')
					fail("expected 'x' after derivative order");
				++i;
			} else if (i < s.size() && s[i] == 'x') {
				order = 1;
				++i;
			} else
				fail("bad derivative suffix");
		}
		return {var, order};
	}
	DiffPoly parse_term(bool negated)
	{
		Rational coeff(1);
		Monomial m = Monomial::one();
		bool have_coeff = false;
		if (std::isdigit(static_cast<unsigned char>(peek()))) {
			coeff = parse_rational();
			have_coeff = true;
		}
		bool expect_factor = !have_coeff;
		while (true) {
			skip_ws();
			if (i < s.size() && s[i] == '*') {
				++i;
				expect_factor = true;
				continue;
			}
			if (i < s.size() && (s[i] == 'u' || s[i] == 'v' || s[i] == 'w' || s[i] == 'q')) {
				JetVar jv = parse_jet();
				int exp = 1;
				skip_ws();
				if (i < s.size() && s[i] == '^') {
					++i;
					exp = static_cast<int>(parse_uint());
				}
				m = m.times(jv, exp);
				expect_factor = false;
				continue;
			}
			break;
		}
		if (expect_factor && !have_coeff)
			fail("empty term");
		return DiffPoly::term(m, negated ? Rational(-coeff) : coeff);
	}
	DiffPoly parse_poly()
	{
		DiffPoly r;
		bool neg = false;
		if (peek() == '-') {
			neg = true;
			++i;
		} else if (peek() == '+')
			++i;
		if (eof())
			fail("empty input");
		if (peek() == '0') {
			std::size_t save = i;
			++i;
			if (eof())
				return DiffPoly::zero();
			i = save;
		}
		r += parse_term(neg);
		while (!eof()) {
			char c = peek();
			if (c == '+')
				neg = false;
			else if (c == '-')
				neg = true;
			else
				fail("expected '+' or '-'");
			++i;
			r += parse_term(neg);
		}
		return r;
	}
};

} // namespace

DiffPoly diffpoly_from_string(std::string_view s)
{
	Parser p{s};
	return p.parse_poly();
}

} // namespace mrtau
