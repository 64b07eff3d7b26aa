#include "imphy/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace imphy {

namespace {

cplx cmul(const cplx& a, const cplx& b, MultCounter* c) {
    if (c) c->real_mults += 4;
    return a * b;
}

double cnorm(const cplx& a, MultCounter* c) {
    if (c) c->real_mults += 2;
    return std::norm(a);
}

double residual_metric(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                       const Eigen::VectorXcd& x, MultCounter* counter) {
    double metric = 0.0;
    for (Eigen::Index r = 0; r < y.size(); ++r) {
        cplx acc = y(r);
        for (Eigen::Index t = 0; t < x.size(); ++t) {
            if (x(t) == cplx{0.0, 0.0}) continue;
            acc -= cmul(h(r, t), x(t), counter);
        }
        metric += cnorm(acc, counter);
    }
    return metric;
}

}  // namespace

Decision ml_spatial(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                    const std::vector<SpatialCodeword>& codebook, MultCounter* counter) {
    if (codebook.empty()) throw std::invalid_argument("empty codebook");
    if (y.size() != h.rows() || codebook[0].vector.size() != h.cols())
        throw std::invalid_argument("detector dimension mismatch");

    std::size_t best = 0;
    double best_metric = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < codebook.size(); ++i) {
        if (counter) ++counter->metric_evals;
        const double metric = residual_metric(y, h, codebook[i].vector, counter);
        if (metric < best_metric) {
            best_metric = metric;
            best = i;
        }
    }
    Decision d;
    d.bits = codebook[best].bits;
    d.metric = best_metric;
    return d;
}

Decision two_stage_sm(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                      const SpatialScheme& scheme, MultCounter* counter) {
    if (scheme.kind != SpatialKind::SM)
        throw std::invalid_argument("two-stage detection is defined for SM only");
    if (y.size() != h.rows() || h.cols() != scheme.n_t)
        throw std::invalid_argument("detector dimension mismatch");

    // Stage 1: matched-filter statistic |h_n^H y| / ||h_n||^2 per antenna.
    Decision d;
    d.branch_metrics.resize(static_cast<std::size_t>(scheme.n_t));
    int best_ant = 0;
    double best_stat = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < scheme.n_t; ++t) {
        if (counter) ++counter->metric_evals;
        cplx dot{0.0, 0.0};
        double energy = 0.0;
        for (Eigen::Index r = 0; r < y.size(); ++r) {
            dot += cmul(std::conj(h(r, t)), y(r), counter);
            energy += cnorm(h(r, t), counter);
        }
        if (counter) counter->real_mults += 3;  // |dot| and the division
        const double stat = std::sqrt(std::norm(dot)) / energy;
        d.branch_metrics[static_cast<std::size_t>(t)] = stat;
        if (stat > best_stat) {
            best_stat = stat;
            best_ant = t;
        }
    }

    // Stage 2: M-ary ML on the selected antenna.
    const int m = scheme.constellation.order;
    int best_label = 0;
    double best_metric = std::numeric_limits<double>::infinity();
    for (int label = 0; label < m; ++label) {
        if (counter) ++counter->metric_evals;
        double metric = 0.0;
        const cplx s = scheme.constellation.point(label);
        for (Eigen::Index r = 0; r < y.size(); ++r)
            metric += cnorm(y(r) - cmul(h(r, best_ant), s, counter), counter);
        if (metric < best_metric) {
            best_metric = metric;
            best_label = label;
        }
    }

    d.bits = bits_from_uint(static_cast<std::uint64_t>(best_ant),
                            bits_per_use(scheme) - scheme.constellation.bits_per_symbol());
    append_uint(d.bits, static_cast<std::uint64_t>(best_label),
                scheme.constellation.bits_per_symbol());
    d.metric = best_metric;
    return d;
}

Decision ml_subblock(const Eigen::VectorXcd& y_sub, const Eigen::VectorXcd& h_sub,
                     const SubblockCodebook& codebook, MultCounter* counter) {
    if (codebook.symbols.empty()) throw std::invalid_argument("empty subblock codebook");
    if (y_sub.size() != h_sub.size() || y_sub.size() != codebook.symbols[0].size())
        throw std::invalid_argument("detector dimension mismatch");

    std::size_t best = 0;
    double best_metric = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < codebook.symbols.size(); ++i) {
        if (counter) ++counter->metric_evals;
        const auto& x = codebook.symbols[i];
        double metric = 0.0;
        for (Eigen::Index n = 0; n < y_sub.size(); ++n) {
            if (x(n) == cplx{0.0, 0.0})
                metric += cnorm(y_sub(n), counter);
            else
                metric += cnorm(y_sub(n) - cmul(h_sub(n), x(n), counter), counter);
        }
        if (metric < best_metric) {
            best_metric = metric;
            best = i;
        }
    }
    Decision d;
    d.bits = codebook.bits[best];
    d.metric = best_metric;
    return d;
}

Decision llr_subblock(const Eigen::VectorXcd& y_sub, const Eigen::VectorXcd& h_sub,
                      const OfdmImConfig& config, const IndexSelector& selector, double n0,
                      LlrOptions options) {
    if (n0 <= 0.0) throw std::invalid_argument("noise variance must be positive");
    const std::vector<double> per_bin(static_cast<std::size_t>(config.n), n0);
    return llr_subblock(y_sub, h_sub, config, selector, per_bin, options);
}

Decision llr_subblock(const Eigen::VectorXcd& y_sub, const Eigen::VectorXcd& h_sub,
                      const OfdmImConfig& config, const IndexSelector& selector,
                      std::span<const double> n0_per_bin, LlrOptions options) {
    if (config.variant != OfdmVariant::IM)
        throw std::invalid_argument("LLR detection covers the fixed-k IM variant");
    const int n = config.n;
    const int k = config.k;
    if (y_sub.size() != n || h_sub.size() != n || static_cast<int>(n0_per_bin.size()) != n)
        throw std::invalid_argument("detector dimension mismatch");
    for (double v : n0_per_bin)
        if (v <= 0.0) throw std::invalid_argument("noise variance must be positive");

    // Activity log-likelihood ratio per subcarrier.
    std::vector<double> lambda(static_cast<std::size_t>(n));
    const double prior = k == n ? 0.0 : std::log(static_cast<double>(k) / (n - k));
    for (int i = 0; i < n; ++i) {
        const double n0 = n0_per_bin[static_cast<std::size_t>(i)];
        double max_term = -std::numeric_limits<double>::infinity();
        std::vector<double> terms(static_cast<std::size_t>(config.m));
        for (int label = 0; label < config.m; ++label) {
            const double t = -std::norm(y_sub(i) - h_sub(i) * config.constellation.point(label)) / n0;
            terms[static_cast<std::size_t>(label)] = t;
            max_term = std::max(max_term, t);
        }
        double lse = max_term;
        if (!options.max_log) {
            double acc = 0.0;
            for (double t : terms) acc += std::exp(t - max_term);
            lse = max_term + std::log(acc);
        }
        lambda[static_cast<std::size_t>(i)] = prior - std::norm(y_sub(i)) / n0 + lse;
    }

    Decision d;
    d.branch_metrics = lambda;

    // The k largest lambda are active; ties go to the lower index.
    ActivationPattern pattern{n, {}};
    if (k == n) {
        pattern.positions.resize(static_cast<std::size_t>(n));
        std::iota(pattern.positions.begin(), pattern.positions.end(), 0);
    } else {
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return lambda[static_cast<std::size_t>(a)] > lambda[static_cast<std::size_t>(b)];
        });
        pattern.positions.assign(order.begin(), order.begin() + k);
        std::sort(pattern.positions.begin(), pattern.positions.end());
        if (!selector.is_legal(pattern)) {
            d.illegal_pattern = true;
            pattern = selector.best_legal(lambda);
        }
    }

    // Per-subcarrier symbol ML on the active set.
    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(k));
    double metric = 0.0;
    for (int pos : pattern.positions) {
        int best_label = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int label = 0; label < config.m; ++label) {
            const double v = std::norm(y_sub(pos) - h_sub(pos) * config.constellation.point(label));
            if (v < best) {
                best = v;
                best_label = label;
            }
        }
        labels.push_back(best_label);
        metric += best;
    }

    d.bits = im_subblock_bits(config, selector, pattern, labels);
    d.metric = metric;
    return d;
}

MimoDetectionResult mmse_llr_mimo(const Eigen::MatrixXcd& y, const Eigen::MatrixXcd& h_freq,
                                  int n_r, int n_t, const OfdmImConfig& config,
                                  const IndexSelector& selector, double n0, LlrOptions options) {
    if (config.variant != OfdmVariant::IM)
        throw std::invalid_argument("the MMSE-LLR path covers the fixed-k IM variant");
    const int n_f = config.n_f;
    if (y.rows() != n_r || y.cols() != n_f || h_freq.rows() != n_r * n_t || h_freq.cols() != n_f)
        throw std::invalid_argument("detector dimension mismatch");

    MimoDetectionResult result;
    result.streams.resize(static_cast<std::size_t>(n_t));

    // Per-stream, per-subcarrier average symbol energy (activity duty cycle).
    const double es = static_cast<double>(config.k) / config.n;
    double reg = n0 / es;
    if (reg < 1e-12) {
        reg = 1e-12;
        ++result.regularizations;
    }

    Eigen::MatrixXcd y_work = y;
    std::vector<int> remaining(static_cast<std::size_t>(n_t));
    std::iota(remaining.begin(), remaining.end(), 0);

    Eigen::MatrixXcd z(n_t, n_f);        // post-filter observations per remaining stream
    Eigen::MatrixXcd gain(n_t, n_f);     // effective scalar channel
    Eigen::MatrixXd noise_var(n_t, n_f); // effective noise + residual interference

    while (!remaining.empty()) {
        const int n_rem = static_cast<int>(remaining.size());
        Eigen::VectorXd sinr_sum = Eigen::VectorXd::Zero(n_rem);

        Eigen::MatrixXcd h_k(n_r, n_rem);
        for (int f = 0; f < n_f; ++f) {
            for (int j = 0; j < n_rem; ++j)
                h_k.col(j) = Eigen::Map<const Eigen::MatrixXcd>(h_freq.col(f).data(), n_r, n_t)
                                 .col(remaining[static_cast<std::size_t>(j)]);
            const Eigen::MatrixXcd gram =
                h_k.adjoint() * h_k + reg * Eigen::MatrixXcd::Identity(n_rem, n_rem);
            const Eigen::MatrixXcd w = gram.inverse() * h_k.adjoint();  // n_rem x n_r
            for (int j = 0; j < n_rem; ++j) {
                const Eigen::RowVectorXcd row = w.row(j);
                const Eigen::RowVectorXcd coupled = row * h_k;  // 1 x n_rem
                const cplx g = coupled(j);
                double interference = 0.0;
                for (int u = 0; u < n_rem; ++u)
                    if (u != j) interference += es * std::norm(coupled(u));
                const double nu = n0 * row.squaredNorm() + interference;
                z(j, f) = (row * y_work.col(f))(0);
                gain(j, f) = g;
                noise_var(j, f) = std::max(nu, 1e-300);
                sinr_sum(j) += es * std::norm(g) / noise_var(j, f);
            }
        }

        // Best mean-SINR stream next; ties toward the lower stream index.
        int best_j = 0;
        for (int j = 1; j < n_rem; ++j)
            if (sinr_sum(j) > sinr_sum(best_j)) best_j = j;
        const int stream = remaining[static_cast<std::size_t>(best_j)];

        // Detect every subblock of that stream on the post-filter scalars.
        auto& decisions = result.streams[static_cast<std::size_t>(stream)];
        decisions.reserve(static_cast<std::size_t>(config.g()));
        std::vector<Eigen::VectorXcd> rebuilt;
        rebuilt.reserve(static_cast<std::size_t>(config.g()));
        for (int g_idx = 0; g_idx < config.g(); ++g_idx) {
            const auto positions = subblock_positions(config, g_idx);
            Eigen::VectorXcd z_sub(config.n), g_sub(config.n);
            std::vector<double> nu_sub(static_cast<std::size_t>(config.n));
            for (int i = 0; i < config.n; ++i) {
                const int pos = positions[static_cast<std::size_t>(i)];
                z_sub(i) = z(best_j, pos);
                g_sub(i) = gain(best_j, pos);
                nu_sub[static_cast<std::size_t>(i)] = noise_var(best_j, pos);
            }
            Decision dec = llr_subblock(z_sub, g_sub, config, selector, nu_sub, options);
            result.illegal_patterns += dec.illegal_pattern ? 1 : 0;
            rebuilt.push_back(build_subblock(dec.bits, config, selector));
            decisions.push_back(std::move(dec));
        }

        // Hard cancellation of the rebuilt stream.
        const Eigen::VectorXcd x_hat = assemble_frame(rebuilt, config);
        for (int f = 0; f < n_f; ++f) {
            const auto h_col =
                Eigen::Map<const Eigen::MatrixXcd>(h_freq.col(f).data(), n_r, n_t).col(stream);
            y_work.col(f) -= h_col * x_hat(f);
        }
        remaining.erase(remaining.begin() + best_j);
    }
    return result;
}

}  // namespace imphy
