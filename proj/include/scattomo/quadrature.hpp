#pragma once

#include <vector>

namespace scattomo {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Hermite rule: integrates f against exp(-x^2) on the real line.
/// Nodes/weights from the Golub-Welsch eigenproblem; cached per order.
const QuadratureRule& gauss_hermite(int n);

/// Gauss-Legendre rule on [-1, 1]; cached per order.
const QuadratureRule& gauss_legendre(int n);

}  // namespace scattomo
