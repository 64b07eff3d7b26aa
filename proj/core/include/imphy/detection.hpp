#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "imphy/ofdm_im.hpp"
#include "imphy/spatial_mapper.hpp"

namespace imphy {

/// Instrumentation sink for complexity accounting. Conventions: a
/// complex*complex product counts 4 real multiplications, complex*real 2,
/// |z|^2 2, real*real (and divisions) 1.
struct MultCounter {
    std::uint64_t real_mults = 0;
    std::size_t metric_evals = 0;  // hypotheses visited = search-space size
};

struct Decision {
    Bits bits;
    double metric = 0.0;
    /// Per-antenna matched-filter statistics (two-stage SM) or per-subcarrier
    /// activity log-likelihood ratios (LLR detection).
    std::vector<double> branch_metrics;
    bool illegal_pattern = false;
};

/// Joint maximum-likelihood detection: argmin over the codebook of
/// ||y - H x||^2, ties broken toward the lowest codeword index.
Decision ml_spatial(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                    const std::vector<SpatialCodeword>& codebook, MultCounter* counter = nullptr);

/// Two-stage suboptimal SM detection: the antenna maximizing
/// |h_n^H y| / ||h_n||^2 first, then M-ary ML on that antenna. Search space
/// n_t + M against the joint detector's n_t * M.
Decision two_stage_sm(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                      const SpatialScheme& scheme, MultCounter* counter = nullptr);

/// Per-subblock joint ML over all legal realizations:
/// argmin sum_n |y_n - h_n x_n|^2.
Decision ml_subblock(const Eigen::VectorXcd& y_sub, const Eigen::VectorXcd& h_sub,
                     const SubblockCodebook& codebook, MultCounter* counter = nullptr);

struct LlrOptions {
    bool max_log = false;  // max-log approximation instead of exact log-sum-exp
};

/// Near-optimal LLR detection for the fixed-k IM variant. Per subcarrier,
///   lambda(n) = ln(k/(n-k)) - |y_n|^2/n0 + ln sum_s exp(-|y_n - h_n s|^2/n0),
/// the k largest lambda are declared active (ties toward the lower index),
/// symbols follow by per-subcarrier ML. A detected pattern outside the
/// selectable set raises illegal_pattern and is repaired to the selectable
/// pattern with the largest lambda sum.
Decision llr_subblock(const Eigen::VectorXcd& y_sub, const Eigen::VectorXcd& h_sub,
                      const OfdmImConfig& config, const IndexSelector& selector, double n0,
                      LlrOptions options = {});

/// Same detector with a per-subcarrier noise variance (post-equalizer path).
Decision llr_subblock(const Eigen::VectorXcd& y_sub, const Eigen::VectorXcd& h_sub,
                      const OfdmImConfig& config, const IndexSelector& selector,
                      std::span<const double> n0_per_bin, LlrOptions options = {});

struct MimoDetectionResult {
    /// streams[t] holds the per-subblock decisions of transmit stream t.
    std::vector<std::vector<Decision>> streams;
    long illegal_patterns = 0;
    long regularizations = 0;
};

/// MMSE-plus-LLR detection for MIMO-OFDM-IM. Per subcarrier the MMSE filter
/// W = (H^H H + (n0/Es) I)^-1 H^H is applied; streams are detected
/// successively in descending mean post-filter SINR order with hard
/// cancellation of each detected stream's rebuilt frame. Stream decisions use
/// llr_subblock on the post-filter scalars with effective noise
/// n0 ||w||^2 + sum_u Es |w h_u|^2 over the remaining interferers.
///
/// y: n_r x n_f received frequency-domain frame.
/// h_freq: (n_r * n_t) x n_f stacked per-subcarrier channels
///         (SelectiveChannel::frequency_response layout).
MimoDetectionResult mmse_llr_mimo(const Eigen::MatrixXcd& y, const Eigen::MatrixXcd& h_freq,
                                  int n_r, int n_t, const OfdmImConfig& config,
                                  const IndexSelector& selector, double n0,
                                  LlrOptions options = {});

}  // namespace imphy
