#include "mrtau/resolvent.hpp"

#include <algorithm>

namespace mrtau {

namespace {

int ceil_div(int a, int b) // b > 0
{
	int q = a / b, r = a % b;
	return (r != 0 && r > 0) ? q + 1 : q;
}

} // namespace

int resolvent_floor_degree(const HierarchyModel &m, int a_index, int depth)
{
	return m.exponents[a_index] - m.rh * (depth + 1);
}

void apply_entry_floors(const HierarchyModel &m, LoopMat &x, int dmin)
{
	for (int i = 0; i < m.dim; ++i)
		for (int j = 0; j < m.dim; ++j) {
			int floor = kNoFloor;
			bool any = false;
			for (int rho = 0; rho < m.rh; ++rho)
				for (const auto &atom : m.atoms(rho)) {
					if (is_zero(atom.m.at(i, j)))
						continue;
					any = true;
					const int kmin = ceil_div(dmin - rho, m.rh);
					floor = std::max(floor, atom.base_exp + m.N * kmin);
				}
			if (any)
				x.at(i, j).truncate_floor(floor);
		}
}

LoopMat truncate_below_degree(const HierarchyModel &m, const LoopMat &x, int dmin)
{
	LoopMat out(m.dim);
	for (int i = 0; i < m.dim; ++i)
		for (int j = 0; j < m.dim; ++j) {
			LaurentP &dst = out.at(i, j);
			if (!x.at(i, j).exact())
				dst = LaurentP::with_floor(x.at(i, j).floor());
			for (const auto &[e, c] : x.at(i, j).terms())
				if (m.degree_of_exponent(i, j, e) >= dmin)
					dst.set(e, c);
		}
	return out;
}

namespace {

// incremental defect E = dR/dx + [Lambda + q, R]
void accumulate_defect(const LaxOperator &L, const LoopMat &delta, LoopMat &e)
{
	e += delta.x_derivative();
	e += LoopMat::bracket(L.model->lambda + L.q, delta);
}

} // namespace

LoopMat lax_commutator(const LaxOperator &L, const LoopMat &r)
{
	return r.x_derivative() + LoopMat::bracket(L.model->lambda + L.q, r);
}

Resolvent basic_resolvent(const LaxOperator &L, int a_index, int depth)
{
	const HierarchyModel &m = *L.model;
	if (depth < 1)
		throw SolveError("basic_resolvent: depth must be at least 1");
	if (a_index < 0 || a_index >= static_cast<int>(m.exponents.size()))
		throw SolveError("basic_resolvent: exponent index out of range");
	const int ma = m.exponents[a_index];
	const int dmin = resolvent_floor_degree(m, a_index, depth);

	LoopMat r = m.heisenberg[a_index];
	LoopMat e(m.dim);
	accumulate_defect(L, r, e);

	for (int s = ma; s > dmin; --s) {
		GradedCoords coords = m.decompose(e);
		auto it = coords.find(s);
		LoopMat delta(m.dim);
		if (it != coords.end()) {
			HeisenbergPart hp = m.project_heisenberg(m.assemble_slice(s, it->second));
			if (!hp.coords.empty()) {
				if (s == ma || !m.is_exponent(s))
					throw SolveError("basic_resolvent: unexpected Heisenberg defect at degree " +
					                 std::to_string(s));
				auto alpha = integrate_x(hp.coords.at(s));
				if (!alpha)
					throw SolveError(
					    "basic_resolvent: Heisenberg coefficient is not a total derivative");
				delta += m.heisenberg_element(s).scaled(-*alpha);
			}
			delta += -hp.image_part;
		}
		if (!delta.stored_all_zero()) {
			r += delta;
			accumulate_defect(L, delta, e);
		}
	}

	// everything at degrees > dmin must have cancelled
	for (const auto &[d, vec] : m.decompose(e))
		if (d > dmin &&
		    std::any_of(vec.begin(), vec.end(), [](const DiffPoly &p) { return !p.is_zero(); }))
			throw SolveError("basic_resolvent: defect remains at degree " + std::to_string(d));

	apply_entry_floors(m, r, dmin);
	return Resolvent{&m, a_index, depth, std::move(r)};
}

// ------------------------------------------------------------ scalar oracle

namespace {

LaurentP xder(const LaurentP &s, int times = 1)
{
	LaurentP out = s.exact() ? LaurentP::zero() : LaurentP::with_floor(s.floor());
	for (const auto &[e, c] : s.terms())
		out.set(e, total_x_derivative(c, times));
	return out;
}

DiffPoly integrate_or_throw(const DiffPoly &f)
{
	auto g = integrate_x(f);
	if (!g)
		throw SolveError("scalar recursion: integrand is not a total derivative");
	return *g;
}

// the shared SK step: b1_k from p_k, then p_{k+1} from b1_k
DiffPoly sk_b1_from_p(const DiffPoly &p)
{
	// 6 b1' = p''' - 2 u_x p - 4 u p'
	DiffPoly rhs = total_x_derivative(p, 3) - DiffPoly::jet(0, 1).scaled(rat(2)) * p -
	               DiffPoly::jet(0, 0).scaled(rat(4)) * total_x_derivative(p);
	return integrate_or_throw(rhs.scaled(rat(1, 6)));
}

DiffPoly sk_p_from_b1(const DiffPoly &b1)
{
	// 9 p' = -(2(u u' - u''') b1 + 2(u^2 - 3 u'') b1' - 6 u' b1'' - 4 u b1''' + 2 b1''''')
	const DiffPoly u = DiffPoly::jet(0, 0), ux = DiffPoly::jet(0, 1),
	               u3 = DiffPoly::jet(0, 3), u2 = DiffPoly::jet(0, 2);
	DiffPoly rhs = (u * ux - u3).scaled(rat(2)) * b1 +
	               (u * u - u2.scaled(rat(3))).scaled(rat(2)) * total_x_derivative(b1) -
	               ux.scaled(rat(6)) * total_x_derivative(b1, 2) -
	               u.scaled(rat(4)) * total_x_derivative(b1, 3) +
	               total_x_derivative(b1, 5).scaled(rat(2));
	return integrate_or_throw(rhs.scaled(rat(-1, 9)));
}

// the shared KK steps
DiffPoly kk_p_from_b1(const DiffPoly &b1)
{
	// 3 p' = -(2 u' b1 + 4 u b1' - 2 b1''')
	const DiffPoly u = DiffPoly::jet(0, 0), ux = DiffPoly::jet(0, 1);
	DiffPoly rhs = ux.scaled(rat(2)) * b1 + u.scaled(rat(4)) * total_x_derivative(b1) -
	               total_x_derivative(b1, 3).scaled(rat(2));
	return integrate_or_throw(rhs.scaled(rat(-1, 3)));
}

DiffPoly kk_b1_from_p(const DiffPoly &p)
{
	// 18 b1' = -(2(8uu' - u''') p + (16u^2 - 9u'') p' - 15 u' p'' - 10 u p''' + p''''')
	const DiffPoly u = DiffPoly::jet(0, 0), ux = DiffPoly::jet(0, 1),
	               u2 = DiffPoly::jet(0, 2), u3 = DiffPoly::jet(0, 3);
	DiffPoly rhs = (u * ux.scaled(rat(8)) - u3).scaled(rat(2)) * p +
	               (u * u * DiffPoly::constant(rat(16)) - u2.scaled(rat(9))) *
	                   total_x_derivative(p) -
	               ux.scaled(rat(15)) * total_x_derivative(p, 2) -
	               u.scaled(rat(10)) * total_x_derivative(p, 3) +
	               total_x_derivative(p, 5);
	return integrate_or_throw(rhs.scaled(rat(-1, 18)));
}

} // namespace

Resolvent model_specific_oracle(const HierarchyModel &m, int a_index, int depth)
{
	if (m.name != "sk" && m.name != "kk")
		throw SolveError("model_specific_oracle: only the A2(2) models have scalar recursions");
	if (depth < 1)
		throw SolveError("model_specific_oracle: depth must be at least 1");
	const int K = depth + 3; // margin so that all windowed entries are covered
	LaurentP b1, p;

	if (m.name == "sk") {
		// b1 in R((l^-4)) l^3, p in R((l^-4))
		if (a_index == 0) {
			DiffPoly pk = diffpoly_from_string("1");
			p.set(0, pk);
			for (int k = 0; k <= K; ++k) {
				DiffPoly b1k = sk_b1_from_p(pk);
				b1.set(-4 * k - 1, b1k);
				pk = sk_p_from_b1(b1k);
				p.set(-4 * (k + 1), pk);
			}
		} else {
			b1.set(3, diffpoly_from_string("1"));
			DiffPoly pk = sk_p_from_b1(diffpoly_from_string("1"));
			p.set(0, pk);
			for (int k = 0; k <= K; ++k) {
				DiffPoly b1k = sk_b1_from_p(pk);
				b1.set(-4 * k - 1, b1k);
				pk = sk_p_from_b1(b1k);
				p.set(-4 * (k + 1), pk);
			}
		}
		// remaining slots from the eliminated variables
		LaurentP a1 = xder(p).scaled(DiffPoly::constant(rat(1, 2)));
		const DiffPoly u = DiffPoly::jet(0, 0), ux = DiffPoly::jet(0, 1),
		               u2 = DiffPoly::jet(0, 2);
		LaurentP a2 = (b1.scaled(u) - xder(b1, 2)).scaled(DiffPoly::constant(rat(1, 3))).shifted(-1);
		LaurentP b2 = (xder(b1).scaled(u) + b1.scaled(ux) - xder(b1, 3))
		                  .scaled(DiffPoly::constant(rat(1, 3)))
		                  .shifted(-2);
		LaurentP c1 = p.shifted(1) - (xder(b1).scaled(ux.scaled(rat(2))) +
		                              xder(b1, 2).scaled(u) + b1.scaled(u2) - xder(b1, 4))
		                                 .scaled(DiffPoly::constant(rat(1, 3)))
		                                 .shifted(-2);
		LaurentP c2 = xder(b1);
		LaurentP rr = b1.shifted(1) + p.scaled(u) - xder(p, 2).scaled(DiffPoly::constant(rat(1, 2)));

		LoopMat R(3);
		R.at(0, 0) = a1 + a2;
		R.at(0, 1) = b1 + b2;
		R.at(0, 2) = p;
		R.at(1, 0) = c1 + c2;
		R.at(1, 1) = a2.scaled(rat(-2));
		R.at(1, 2) = b1 - b2;
		R.at(2, 0) = rr;
		R.at(2, 1) = c1 - c2;
		R.at(2, 2) = a2 - a1;
		apply_entry_floors(m, R, resolvent_floor_degree(m, a_index, depth));
		return Resolvent{&m, a_index, depth, std::move(R)};
	}

	// kk: b1 in R((l^-2)), p in R((l^-2)) l
	if (a_index == 0) {
		DiffPoly b1k = diffpoly_from_string("1");
		b1.set(0, b1k);
		for (int k = 0; k <= K; ++k) {
			DiffPoly pk = kk_p_from_b1(b1k);
			p.set(-2 * k - 1, pk);
			b1k = kk_b1_from_p(pk);
			b1.set(-2 * (k + 1), b1k);
		}
	} else {
		p.set(1, diffpoly_from_string("1"));
		DiffPoly b1k = kk_b1_from_p(diffpoly_from_string("1"));
		b1.set(0, b1k);
		for (int k = 0; k <= K; ++k) {
			DiffPoly pk = kk_p_from_b1(b1k);
			p.set(-2 * k - 1, pk);
			b1k = kk_b1_from_p(pk);
			b1.set(-2 * (k + 1), b1k);
		}
	}
	const DiffPoly u = DiffPoly::jet(0, 0), ux = DiffPoly::jet(0, 1), u2 = DiffPoly::jet(0, 2);
	LaurentP a1 = xder(b1);
	LaurentP a2 = xder(p, 2).scaled(DiffPoly::constant(rat(1, 6))) -
	              p.scaled(u.scaled(rat(1, 3)));
	LaurentP b2 = xder(p).scaled(DiffPoly::constant(rat(1, 2)));
	LaurentP c1 = b1.scaled(u) + p.shifted(1) - xder(b1, 2);
	LaurentP c2 = p.scaled(ux.scaled(rat(1, 3))) + xder(p).scaled(u.scaled(rat(5, 6))) -
	              xder(p, 3).scaled(DiffPoly::constant(rat(1, 6)));
	LaurentP rr = b1.shifted(1) + p.scaled(u * u - u2.scaled(rat(1, 3))) -
	              xder(p).scaled(ux.scaled(rat(7, 6))) - xder(p, 2).scaled(u.scaled(rat(4, 3))) +
	              xder(p, 4).scaled(DiffPoly::constant(rat(1, 6)));

	LoopMat R(3);
	R.at(0, 0) = a1 + a2;
	R.at(0, 1) = b1 + b2;
	R.at(0, 2) = p;
	R.at(1, 0) = c1 + c2;
	R.at(1, 1) = a2.scaled(rat(-2));
	R.at(1, 2) = b1 - b2;
	R.at(2, 0) = rr;
	R.at(2, 1) = c1 - c2;
	R.at(2, 2) = a2 - a1;
	apply_entry_floors(m, R, resolvent_floor_degree(m, a_index, depth));
	return Resolvent{&m, a_index, depth, std::move(R)};
}

// ---------------------------------------------------------------- dressing

namespace {

// gauge-style defect q~ with all slices below cutoff dropped
LoopMat dressing_defect(const LaxOperator &L, const LoopMat &u, int cutoff)
{
	const HierarchyModel &m = *L.model;
	LoopMat ql = truncate_below_degree(m, L.q + m.lambda, cutoff);
	LoopMat out = L.q;
	LoopMat term_dn = u.x_derivative();
	LoopMat term_ql = ql;
	Rational fact(1);
	// ad u lowers degree by at least one per application, so the series ends
	for (int k = 1; k <= 2 - cutoff; ++k) {
		fact /= Rational(k);
		term_ql = truncate_below_degree(m, LoopMat::bracket(u, term_ql), cutoff);
		out -= term_dn.scaled(fact);
		out += term_ql.scaled(fact);
		if (term_ql.stored_all_zero() && term_dn.stored_all_zero())
			break;
		term_dn = truncate_below_degree(m, LoopMat::bracket(u, term_dn), cutoff);
	}
	return out;
}

} // namespace

DressingPair dressing(const LaxOperator &L, int depth)
{
	const HierarchyModel &m = *L.model;
	if (depth < 1)
		throw SolveError("dressing: depth must be at least 1");
	const int dmin = -m.rh * (depth + 1);
	const int cutoff = dmin - 1;

	LoopMat u(m.dim);
	for (int d = 0; d > dmin; --d) {
		// only the degree-d slice matters at this step; deepen progressively
		LoopMat defect = dressing_defect(L, u, d);
		GradedCoords coords = m.decompose(defect);
		auto it = coords.find(d);
		if (it == coords.end())
			continue;
		HeisenbergPart hp = m.project_heisenberg(m.assemble_slice(d, it->second));
		u += hp.image_part;
	}

	DressingPair out;
	out.model = &m;
	out.depth = depth;
	out.u = u;
	out.h_mat = LoopMat(m.dim);

	LoopMat final_defect = dressing_defect(L, u, cutoff);
	for (const auto &[d, vec] : m.decompose(final_defect)) {
		if (d <= dmin)
			continue;
		if (d >= 0) {
			const bool nz = std::any_of(vec.begin(), vec.end(),
			                            [](const DiffPoly &p) { return !p.is_zero(); });
			if (nz)
				throw SolveError("dressing: defect not removed at degree " + std::to_string(d));
			continue;
		}
		HeisenbergPart hp = m.project_heisenberg(m.assemble_slice(d, vec));
		if (!hp.image_part.stored_all_zero())
			throw SolveError("dressing: non-Heisenberg defect at degree " + std::to_string(d));
		if (hp.coords.empty())
			continue;
		const int a = m.exponent_class(d);
		const int l = (m.exponents[a] - d) / m.rh - 1;
		out.h[{a, l}] = hp.coords.at(d);
		out.h_mat += m.heisenberg_element(d).scaled(hp.coords.at(d));
	}
	apply_entry_floors(m, out.h_mat, dmin + 1);
	apply_entry_floors(m, out.u, dmin + 1);
	return out;
}

LaurentP hamiltonian_density_series(const DressingPair &d, int a_index)
{
	return pair_form(d.model->heisenberg[a_index], d.h_mat);
}

} // namespace mrtau
