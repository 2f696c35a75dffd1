#include "kaczmarz/probgen.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "kaczmarz/kernels.hpp"
#include "kaczmarz/matrix_market.hpp"
#include "kaczmarz/rng.hpp"
#include "kaczmarz/svd.hpp"

namespace kaczmarz {

const char* family_name(Family f) {
  return f == Family::gaussian ? "gaussian" : "power_spectrum";
}

Family family_from_name(const std::string& name) {
  if (name == "gaussian") return Family::gaussian;
  if (name == "power_spectrum") return Family::power_spectrum;
  throw InstanceLoadError("unknown instance family: " + name);
}

DenseMatrix gen_gaussian(std::size_t m, std::size_t n, std::uint64_t seed) {
  if (m < 1 || n < 1 || m < n) {
    throw BadShapeError("gen_gaussian requires m >= n >= 1");
  }
  Xoshiro256pp rng(seed);
  std::vector<double> entries(m * n);
  for (double& e : entries) e = rng.next_gaussian();
  return DenseMatrix(m, n, std::move(entries));
}

DenseMatrix gen_power_spectrum(std::size_t n, double alpha,
                               std::uint64_t seed) {
  if (n < 1) throw BadShapeError("gen_power_spectrum requires n >= 1");
  if (alpha < 0.0) throw BadShapeError("spectrum exponent must be >= 0");
  // The Jacobi SVD can in principle run out of sweeps; retry on fresh
  // Gaussian draws before giving up.
  for (int attempt = 0;; ++attempt) {
    const std::uint64_t draw_seed =
        attempt == 0 ? seed : SplitMix64(seed + 0x9e37u * attempt).next();
    DenseMatrix g = gen_gaussian(n, n, draw_seed);
    SvdResult dec;
    try {
      dec = svd(g);
    } catch (const SvdFailureError&) {
      if (attempt >= 2) throw;
      continue;
    }
    // Recompose with sigma_i = i^-alpha: B = U diag(s) Vt, row by row.
    std::vector<double> out(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double* row = &out[i * n];
      for (std::size_t k = 0; k < n; ++k) {
        const double coef =
            dec.u[i * n + k] * std::pow(static_cast<double>(k + 1), -alpha);
        kernels::axpy(row, coef, &dec.vt[k * n], n);
      }
    }
    return DenseMatrix(n, n, std::move(out));
  }
}

std::pair<Vector, Vector> gen_consistent(const DenseMatrix& a,
                                         std::uint64_t seed) {
  Xoshiro256pp rng(seed);
  Vector x(a.cols());
  for (double& e : x) e = rng.next_gaussian();
  return {x, a.multiply(x)};
}

double kappa_frobenius(const DenseMatrix& a) {
  const SvdResult dec = svd(a);
  const double smax = dec.sigma.front();
  const double smin = dec.sigma.back();
  if (smin < 1e-12 * smax) {
    throw RankDeficientError("matrix is numerically rank deficient");
  }
  return std::sqrt(a.frob_sq()) / smin;
}

ProblemInstance make_instance(Family family, std::size_t m, std::size_t n,
                              std::optional<double> alpha,
                              std::uint64_t seed) {
  SplitMix64 sub(seed);
  const std::uint64_t matrix_seed = sub.next();
  const std::uint64_t rhs_seed = sub.next();
  DenseMatrix a = family == Family::gaussian
                      ? gen_gaussian(m, n, matrix_seed)
                      : gen_power_spectrum(n, alpha.value_or(0.75), matrix_seed);
  auto [x_true, b] = gen_consistent(a, rhs_seed);
  const double kappa = kappa_frobenius(a);
  ProblemInstance inst{std::move(a), std::move(b), std::move(x_true),
                       kappa,        family,       seed,
                       std::nullopt};
  if (family == Family::power_spectrum) {
    inst.spectrum_alpha = alpha.value_or(0.75);
  }
  return inst;
}

void save_instance(const ProblemInstance& inst,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  mm::write_matrix(dir / "A.mtx", inst.a);
  mm::write_vector_plain(dir / "b.txt", inst.b);
  mm::write_vector_plain(dir / "x_true.txt", inst.x_true);
  nlohmann::json meta;
  meta["format_version"] = 1;
  meta["family"] = family_name(inst.family);
  meta["m"] = inst.a.rows();
  meta["n"] = inst.a.cols();
  meta["seed"] = inst.seed;
  meta["kappa_frob"] = inst.kappa_frob;
  if (inst.spectrum_alpha) meta["alpha"] = *inst.spectrum_alpha;
  std::ofstream out(dir / "meta.json");
  if (!out) throw IoError("cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << "\n";
}

ProblemInstance load_instance(const std::filesystem::path& dir) {
  try {
    std::ifstream meta_in(dir / "meta.json");
    if (!meta_in) {
      throw InstanceLoadError("missing meta.json in " + dir.string());
    }
    const auto meta = nlohmann::json::parse(meta_in);
    DenseMatrix a = mm::read_matrix(dir / "A.mtx");
    Vector b = mm::read_vector_plain(dir / "b.txt");
    Vector x_true = mm::read_vector_plain(dir / "x_true.txt");
    if (b.size() != a.rows() || x_true.size() != a.cols()) {
      throw InstanceLoadError("instance vectors do not match matrix shape");
    }
    ProblemInstance inst{std::move(a),
                         std::move(b),
                         std::move(x_true),
                         meta.at("kappa_frob").get<double>(),
                         family_from_name(meta.at("family").get<std::string>()),
                         meta.at("seed").get<std::uint64_t>(),
                         std::nullopt};
    if (meta.contains("alpha")) {
      inst.spectrum_alpha = meta["alpha"].get<double>();
    }
    return inst;
  } catch (const InstanceLoadError&) {
    throw;
  } catch (const std::exception& e) {
    throw InstanceLoadError("failed to load instance from " + dir.string() +
                            ": " + e.what());
  }
}

}  // namespace kaczmarz
