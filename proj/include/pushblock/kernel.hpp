#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "pushblock/interlacing.hpp"
#include "pushblock/measures.hpp"
#include "pushblock/orthopoly.hpp"

namespace pushblock {

// Site x on pattern level `level`.
struct KernelPoint {
  LevelLabel level;
  long x = 0;
  bool operator==(const KernelPoint&) const = default;
};

enum class KernelMethod {
  Auto,     // contour when its integrand stays moderate and the sum settles, residue form otherwise
  Contour,  // double integral over a circle about the origin
  Residue,  // the u = x residue taken in closed form, a single real integral
};

struct KernelMetadata {
  double upper_edge = 0;  // I⁺
  double radius = 0;      // contour radius, centred at 0
  double margin = 0;      // distance from the support and from the zeros of ψ
  int spectral_nodes = 0;
  int max_contour_nodes = 0;  // largest trapezoid size any entry needed so far
};

// Correlation kernel of the multilevel process started fully packed and evolved by ψ.
// The row level picks the polynomial π_iQ_i or π̂_iQ̂_i and the measure 𝔴 or 𝔴̂;
// the column level picks Q_j or Q̂_j.
class CorrelationKernel {
 public:
  CorrelationKernel(const OrthoSystem& sys, PsiSpec psi, KernelMethod method = KernelMethod::Auto);

  double operator()(const KernelPoint& row, const KernelPoint& col) const;
  double contour_value(const KernelPoint& row, const KernelPoint& col) const;
  double residue_value(const KernelPoint& row, const KernelPoint& col) const;
  // ⟨P̄_i, x^{n2−m2} P̃_j⟩ over the row measure (requires n2 >= m2).
  double gram(const KernelPoint& row, const KernelPoint& col) const;
  // Method Auto would use for this pair.
  KernelMethod chosen_method(const KernelPoint& row, const KernelPoint& col) const;

  Eigen::MatrixXd matrix(const std::vector<KernelPoint>& points, int threads = 1) const;
  // det of the kernel matrix; repeated points give 0.
  double correlation(const std::vector<KernelPoint>& points) const;

  struct Trace {
    double value = 0;
    int index_cap = 0;  // last site included
  };
  // Σ_i K((level,i),(level,i)), stopping once five consecutive diagonal terms are below tol.
  Trace level_trace(LevelLabel level, double tol = 1e-9, int max_index = 200) const;

  KernelMetadata metadata() const;
  const PsiSpec& psi() const { return psi_; }
  const OrthoSystem& system() const { return *sys_; }

 private:
  struct Side {
    std::vector<double> nodes, weights, psi;
  };
  const Side& side(bool dual) const { return dual ? dual_side_ : primal_side_; }
  double pbar(int i, double x, bool dual) const { return sys_->weighted(i, x, dual); }
  const std::vector<double>& profile(bool rdual, const KernelPoint& col, bool head) const;
  const std::vector<std::complex<double>>& inner_transform(bool dual, int n2, long i, int nodes) const;
  double contour_sum(const KernelPoint& row, const KernelPoint& col, int nodes, double* scale) const;

  const OrthoSystem* sys_;
  PsiSpec psi_;
  KernelMethod method_;
  double upper_ = 0, radius_ = 0, margin_ = 0;
  int spectral_nodes_ = 0;
  Side primal_side_, dual_side_;

  mutable std::mutex mu_;
  mutable std::map<std::tuple<bool, int, bool, int>, std::vector<double>> profiles_;
  mutable std::map<std::tuple<bool, int, long, int>, std::vector<std::complex<double>>> transforms_;
  mutable int max_nodes_used_ = 0;
};

// Contour radius about 0 and its margin; throws ContourError when no circle
// encloses the support while excluding every zero of ψ.
std::pair<double, double> kernel_contour(double upper_edge, const PsiSpec& psi);

// Level reached from an offset level after scaling: (⌊Nη⌋ + n1, ⌊Nη⌋ + n2).
LevelLabel scaled_level(LevelLabel offset, int N, double eta);

// Large-time limit with levels near ⌊Nη⌋, t = Nτ and α = η/τ:
// ∫ [1(row ≥ col) − 1(x ≥ α)] P̄_i x^{n2−m2} P̃_j d𝔪. Levels here are offsets.
double scaling_limit_kernel(const OrthoSystem& sys, const KernelPoint& row, const KernelPoint& col, double alpha);

// ∫_r^{I⁺} P*_i P*_j d𝔪 with orthonormal P*_i = √π_i Q_i (or the dual pair).
double discrete_ensemble_kernel(const OrthoSystem& sys, bool dual, int i, int j, double r);

}  // namespace pushblock
