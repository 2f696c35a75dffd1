#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include "kaczmarz/dense.hpp"

namespace kaczmarz {

enum class Family { gaussian, power_spectrum };

const char* family_name(Family f);
Family family_from_name(const std::string& name);

// A generated consistent system together with its planted solution and
// Frobenius-weighted condition number. Self-describing: save/load round-trips
// everything through an instance directory.
struct ProblemInstance {
  DenseMatrix a;
  Vector b;
  Vector x_true;
  double kappa_frob = 0.0;
  Family family = Family::gaussian;
  std::uint64_t seed = 0;
  std::optional<double> spectrum_alpha;
};

// m x n matrix of independent standard normal entries.
DenseMatrix gen_gaussian(std::size_t m, std::size_t n, std::uint64_t seed);

// n x n Gaussian matrix whose singular values are replaced by i^-alpha
// (i = 1..n) through a full SVD and recomposition.
DenseMatrix gen_power_spectrum(std::size_t n, double alpha,
                               std::uint64_t seed);

// Standard normal planted solution x_true and b = A x_true.
std::pair<Vector, Vector> gen_consistent(const DenseMatrix& a,
                                         std::uint64_t seed);

// ||A||_F / sigma_min(A) via full SVD. Throws RankDeficientError when
// sigma_min < 1e-12 * sigma_max.
double kappa_frobenius(const DenseMatrix& a);

// Full pipeline: matrix, consistent right-hand side (sub-seeded from seed),
// and the measured condition number.
ProblemInstance make_instance(Family family, std::size_t m, std::size_t n,
                              std::optional<double> alpha, std::uint64_t seed);

// Directory layout: A.mtx (Matrix Market), b.txt / x_true.txt (plain text),
// meta.json.
void save_instance(const ProblemInstance& inst,
                   const std::filesystem::path& dir);
ProblemInstance load_instance(const std::filesystem::path& dir);

}  // namespace kaczmarz
