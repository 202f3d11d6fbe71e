#pragma once

// Brute-force reference for exterior algebra on R^7: forms are stored as
// full antisymmetric tensors with 7^k entries and every operation is a
// direct sum over index tuples and permutations.

#include "g2lab/forms7.hpp"

#include <vector>

namespace oracle {

struct Tensor {
  int rank = 0;
  std::vector<double> data;  // index (i_1, .., i_k) at sum i_j 7^{k-j}

  explicit Tensor(int k = 0);
  double& at(const std::vector<int>& idx);
  double at(const std::vector<int>& idx) const;
};

/// Sign of a permutation of distinct integers; 0 on repeats.
int permutation_sign(const std::vector<int>& p);

Tensor from_form(const g2lab::KForm& a);
/// Reads back the strictly increasing components.
g2lab::KForm to_form(const Tensor& t);

/// (a ^ b)_{I} = 1/(k! l!) sum over permutations s of sign(s) a_{s(I)_1..k} b_{s(I)_{k+1..}}.
Tensor wedge(const Tensor& a, const Tensor& b);

/// (*a)_{j_1..j_{7-k}} = sqrt(det g) / k! a^{i_1..i_k} eps_{i_1..i_k j_1..j_{7-k}}.
Tensor hodge(const Eigen::Matrix<double, 7, 7>& g, const Tensor& a);

/// (M^* a)_{i_1..i_k} = a_{j_1..j_k} M_{j_1 i_1} .. M_{j_k i_k}.
Tensor pullback(const Eigen::Matrix<double, 7, 7>& m, const Tensor& a);

}  // namespace oracle
