#pragma once

#include "lensr/cnf.hpp"
#include "lensr/nnf.hpp"

namespace lensr {

/// Top-down d-DNNF compilation of a CNF by an exhaustive DPLL trace: unit
/// propagation, connected components become And nodes, and a decision on the
/// lowest free variable becomes an Or node with decision_var set. Residual
/// components are cached on their sorted clause lists. The DAG is declared
/// over 1..c.num_vars.
NnfDag compile_ddnnf(const Cnf& c);

/// Tseytin-encodes `f`, compiles, and forgets the gate variables, giving a
/// d-DNNF over inputs 1..max(num_inputs, max_var(f)). Branching always reaches
/// an input before any gate, so the forgotten DAG keeps its decision nodes.
NnfDag compile_formula(const Formula& f, int num_inputs = 0);

}  // namespace lensr
