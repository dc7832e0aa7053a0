#pragma once

#include <Eigen/Dense>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sinest {

using cxd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// numerical failure inside an estimator (as opposed to a bad argument,
// which is std::invalid_argument)
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ill_conditioned : numerical_error {
  using numerical_error::numerical_error;
};

enum class Branch { Esprit, EspritAc, EspritAcRemoveReestimate };

inline const char* branch_name(Branch b) {
  switch (b) {
    case Branch::Esprit: return "esprit";
    case Branch::EspritAc: return "esprit_ac";
    case Branch::EspritAcRemoveReestimate: return "esprit_ac_rr";
  }
  return "?";
}

struct FrequencyEstimate {
  RVec freqs;                        // ascending, in [0,1)
  std::optional<double> cost;        // likelihood cost when evaluated
  Branch branch = Branch::Esprit;
};

struct GammaBetaReport {
  double gamma_db = -kInf;
  double sigma2_hat = 0.0;
  double lambda_p = 0.0;
  double beta = 0.0;
  int M = 0;
  bool degenerate = false;           // sigma2 floored (noiseless-like data)
};

struct Scenario {
  int p = 0;
  int n = 0;
  RVec amplitudes;
  RVec phases;
  RVec frequencies;                  // strictly ascending, in [0,1)
  double snr_db = kInf;

  void validate() const {
    if (p < 1) throw std::invalid_argument("scenario: p must be >= 1");
    if (n < 1) throw std::invalid_argument("scenario: n must be >= 1");
    if (amplitudes.size() != p || phases.size() != p || frequencies.size() != p)
      throw std::invalid_argument("scenario: parameter vectors must have length p");
    for (int i = 0; i < p; ++i) {
      if (!(amplitudes[i] > 0)) throw std::invalid_argument("scenario: amplitudes must be > 0");
      if (frequencies[i] < 0 || frequencies[i] >= 1)
        throw std::invalid_argument("scenario: frequencies must lie in [0,1)");
      if (i > 0 && !(frequencies[i] > frequencies[i - 1]))
        throw std::invalid_argument("scenario: frequencies must be strictly ascending");
    }
  }

  double noise_sigma2() const {
    return std::isinf(snr_db) ? 0.0 : std::pow(10.0, -snr_db / 10.0);
  }
};

}  // namespace sinest
