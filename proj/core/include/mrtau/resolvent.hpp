#pragma once

#include "mrtau/model.hpp"

namespace mrtau {

class SolveError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

// L = d + Lambda + q with q Borel-valued. The default q is canonical: u v_1.
struct LaxOperator {
	const HierarchyModel *model;
	LoopMat q;

	static LaxOperator canonical(const HierarchyModel &m)
	{
		return {&m, m.canonical_q(DiffPoly::jet(0, 0))};
	}
};

// Basic resolvent R_{m_a}: [L, R] = 0 with leading term Lambda_{m_a}.
// depth K guarantees all principal degrees >= m_a - rh (K + 1); the
// per-entry lambda windows are derived from that and stored in `series`.
struct Resolvent {
	const HierarchyModel *model = nullptr;
	int a_index = 0;
	int depth = 0;
	LoopMat series;
};

// exp(ad U) L = d + Lambda + H with U in (im ad Lambda)^{<0} and H in the
// negative Heisenberg part; H_{b,l} multiplies Lambda_{m_b} lambda^{-(l+1)N}.
struct DressingPair {
	const HierarchyModel *model = nullptr;
	int depth = 0;
	LoopMat u;
	LoopMat h_mat;
	std::map<std::pair<int, int>, DiffPoly> h; // (b index, l) -> H_{b,l}
};

// Degree-by-degree graded solver for [L, R] = 0. Heisenberg coefficients
// come from exact x-integration (integration constants vanish by weight
// homogeneity), image components from inverting ad Lambda on graded slices.
Resolvent basic_resolvent(const LaxOperator &L, int a_index, int depth);

// The explicit two-unknown triangular recursions of the A2(2) models,
// solved directly; must agree with basic_resolvent. Canonical q only.
Resolvent model_specific_oracle(const HierarchyModel &m, int a_index, int depth);

// d R + [Lambda + q, R], for commutator checks.
LoopMat lax_commutator(const LaxOperator &L, const LoopMat &r);

DressingPair dressing(const LaxOperator &L, int depth);

// g_a(lambda) = (Lambda_{m_a}(lambda) | H(lambda)) = sum_k h_{a,k} lambda^{-kN}.
LaurentP hamiltonian_density_series(const DressingPair &d, int a_index);

// Lowest guaranteed principal degree for a resolvent of the given depth.
int resolvent_floor_degree(const HierarchyModel &m, int a_index, int depth);

// Restrict every entry to the lambda-window implied by "all principal
// degrees >= dmin are known".
void apply_entry_floors(const HierarchyModel &m, LoopMat &x, int dmin);

// Drop all graded slices of an exact element below dmin.
LoopMat truncate_below_degree(const HierarchyModel &m, const LoopMat &x, int dmin);

} // namespace mrtau
