#pragma once

#include "rcomp/expr.hpp"

namespace rcomp {

struct GridSpec {
    int coarse_points = 0;          // per axis; 0 picks by search dimension
    int refine_points = 9;          // per axis at every zoom level (odd)
    double half_width = 0.0;        // initial box half-width; 0 picks from the query
    double final_cell = 1e-11;      // stop zooming below this (relative to 1 + |theta|)
    double accept_tol = 1e-7;       // residual accepted as a solution (relative to 1 + |x|)
    double distinct_tol = 1e-5;     // two accepted solutions farther apart than this are a tie
    int max_candidates = 4;         // coarse local minima refined
    int max_expand = 12;            // box doublings when the minimum sits on the boundary
};

struct OracleResult {
    Vector point;
    double residual = 0.0;
    std::size_t search_dim = 0;
    std::size_t evaluations = 0;
};

// Solves x in p + gamma*A(p) by brute-force search over the defining graph relations
// (atom inclusion residuals pushed through the composition definitions). Never calls a resolvent.
OracleResult inclusion_oracle_detailed(const Expr& e, double gamma, const Vector& x, const GridSpec& spec = {});
Vector inclusion_oracle(const Expr& e, double gamma, const Vector& x, const GridSpec& spec = {});

// Number of auxiliary variables the definitional description of e needs.
std::size_t definitional_aux_dim(const Expr& e);

}  // namespace rcomp
