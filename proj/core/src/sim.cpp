#include "imphy/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace imphy {

namespace {

struct Tally {
    long trials = 0;
    long bit_errors = 0;
    long illegal = 0;
    long regularizations = 0;

    Tally& operator+=(const Tally& o) {
        trials += o.trials;
        bit_errors += o.bit_errors;
        illegal += o.illegal;
        regularizations += o.regularizations;
        return *this;
    }
};

// Immutable per-point state shared by all workers.
struct PointContext {
    const Experiment* exp = nullptr;
    double n0 = 0.0;
    std::vector<SpatialCodeword> codebook;     // spatial ML
    std::optional<IndexSelector> selector;     // OFDM links
    SubblockCodebook subblock_codebook;        // OFDM ML
};

Tally spatial_trial(const SpatialLinkSpec& spec, const PointContext& ctx, Rng& rng) {
    const int bpcu = bits_per_use(spec.scheme);
    const Bits bits = random_bits(rng, static_cast<std::size_t>(bpcu));
    const SpatialCodeword cw = encode(spec.scheme, bits);
    const FlatChannel channel = draw_flat(spec.n_r, spec.scheme.n_t, rng);
    const Eigen::VectorXcd y = apply_flat(channel, cw.vector, ctx.n0, rng);
    const Decision d = spec.detector == SpatialLinkSpec::Detector::JointMl
                           ? ml_spatial(y, channel.h, ctx.codebook)
                           : two_stage_sm(y, channel.h, spec.scheme);
    Tally t;
    t.trials = 1;
    t.bit_errors = static_cast<long>(count_bit_errors(bits, d.bits));
    return t;
}

Tally ofdm_trial(const OfdmLinkSpec& spec, const PointContext& ctx, Rng& rng) {
    const OfdmImConfig& cfg = spec.config;
    const IndexSelector& selector = *ctx.selector;
    const long per_antenna = cfg.frame_bits();

    std::vector<Bits> tx_bits(static_cast<std::size_t>(spec.n_t));
    std::vector<Eigen::VectorXcd> tx_time(static_cast<std::size_t>(spec.n_t));
    for (int t = 0; t < spec.n_t; ++t) {
        tx_bits[static_cast<std::size_t>(t)] = random_bits(rng, static_cast<std::size_t>(per_antenna));
        const OfdmImFrame frame = build_frame(tx_bits[static_cast<std::size_t>(t)], cfg, selector);
        tx_time[static_cast<std::size_t>(t)] = modulate(frame.x, cfg);
    }

    const SelectiveChannel channel = draw_selective(spec.n_r, spec.n_t, spec.taps, rng);
    const auto rx_time = apply_selective(channel, tx_time, ctx.n0, rng);

    Eigen::MatrixXcd y(spec.n_r, cfg.n_f);
    for (int r = 0; r < spec.n_r; ++r)
        y.row(r) = demodulate(rx_time[static_cast<std::size_t>(r)], cfg).transpose();
    const Eigen::MatrixXcd h_freq = channel.frequency_response(cfg.n_f);

    Tally tally;
    tally.trials = 1;
    const LlrOptions options{spec.max_log};

    if (spec.detector == OfdmLinkSpec::Detector::MmseLlr) {
        const auto result =
            mmse_llr_mimo(y, h_freq, spec.n_r, spec.n_t, cfg, selector, ctx.n0, options);
        tally.illegal += result.illegal_patterns;
        tally.regularizations += result.regularizations;
        for (int t = 0; t < spec.n_t; ++t) {
            std::vector<Bits> per_subblock;
            per_subblock.reserve(result.streams[static_cast<std::size_t>(t)].size());
            for (const auto& d : result.streams[static_cast<std::size_t>(t)])
                per_subblock.push_back(d.bits);
            const Bits detected = deframe(cfg, per_subblock);
            tally.bit_errors +=
                static_cast<long>(count_bit_errors(tx_bits[static_cast<std::size_t>(t)], detected));
        }
        return tally;
    }

    // Scalar per-subcarrier channel path (n_t = n_r = 1).
    std::vector<Bits> per_subblock;
    per_subblock.reserve(static_cast<std::size_t>(cfg.g()));
    for (int g_idx = 0; g_idx < cfg.g(); ++g_idx) {
        const auto positions = subblock_positions(cfg, g_idx);
        Eigen::VectorXcd y_sub(cfg.n), h_sub(cfg.n);
        for (int i = 0; i < cfg.n; ++i) {
            y_sub(i) = y(0, positions[static_cast<std::size_t>(i)]);
            h_sub(i) = h_freq(0, positions[static_cast<std::size_t>(i)]);
        }
        Decision d = spec.detector == OfdmLinkSpec::Detector::Llr
                         ? llr_subblock(y_sub, h_sub, cfg, selector, ctx.n0, options)
                         : ml_subblock(y_sub, h_sub, ctx.subblock_codebook);
        tally.illegal += d.illegal_pattern ? 1 : 0;
        per_subblock.push_back(std::move(d.bits));
    }
    const Bits detected = deframe(cfg, per_subblock);
    tally.bit_errors += static_cast<long>(count_bit_errors(tx_bits[0], detected));
    return tally;
}

Tally run_batch(const PointContext& ctx, std::size_t point_index, long first_trial, long count) {
    Tally tally;
    for (long i = 0; i < count; ++i) {
        Rng rng(derive_seed(ctx.exp->seed, point_index,
                            static_cast<std::uint64_t>(first_trial + i) + 1));
        if (const auto* spatial = std::get_if<SpatialLinkSpec>(&ctx.exp->link))
            tally += spatial_trial(*spatial, ctx, rng);
        else
            tally += ofdm_trial(std::get<OfdmLinkSpec>(ctx.exp->link), ctx, rng);
    }
    return tally;
}

}  // namespace

void Experiment::validate() const {
    if (max_trials < 1) throw std::invalid_argument("max_trials must be >= 1");
    if (min_trials < 1 || min_trials > max_trials)
        throw std::invalid_argument("min_trials must satisfy 1 <= min_trials <= max_trials");
    for (std::size_t i = 1; i < snr_grid_db.size(); ++i)
        if (!(snr_grid_db[i - 1] < snr_grid_db[i]))
            throw std::invalid_argument("snr grid must be strictly increasing");
    if (const auto* ofdm = std::get_if<OfdmLinkSpec>(&link)) {
        if (ofdm->n_t < 1 || ofdm->n_r < 1 || ofdm->taps < 1)
            throw std::invalid_argument("OFDM link dimensions must be >= 1");
        if (ofdm->detector != OfdmLinkSpec::Detector::MmseLlr &&
            (ofdm->n_t != 1 || ofdm->n_r != 1))
            throw std::invalid_argument("scalar LLR/ML OFDM detection requires a 1x1 link");
        if (ofdm->taps > ofdm->config.cp_len + 1)
            throw std::invalid_argument("channel taps must fit inside the cyclic prefix");
    } else {
        const auto& spatial = std::get<SpatialLinkSpec>(link);
        if (spatial.n_r < 1) throw std::invalid_argument("n_r must be >= 1");
        if (spatial.detector == SpatialLinkSpec::Detector::TwoStage &&
            spatial.scheme.kind != SpatialKind::SM)
            throw std::invalid_argument("two-stage detection requires an SM scheme");
    }
}

int experiment_n_t(const Experiment& e) {
    if (const auto* s = std::get_if<SpatialLinkSpec>(&e.link)) return s->scheme.n_t;
    return std::get<OfdmLinkSpec>(e.link).n_t;
}

int experiment_n_r(const Experiment& e) {
    if (const auto* s = std::get_if<SpatialLinkSpec>(&e.link)) return s->n_r;
    return std::get<OfdmLinkSpec>(e.link).n_r;
}

long bits_per_trial(const Experiment& e) {
    if (const auto* s = std::get_if<SpatialLinkSpec>(&e.link))
        return bits_per_use(s->scheme);
    const auto& ofdm = std::get<OfdmLinkSpec>(e.link);
    return static_cast<long>(ofdm.n_t) * ofdm.config.frame_bits();
}

double es_per_rx(const LinkSpec& link) {
    if (std::holds_alternative<SpatialLinkSpec>(link)) return 1.0;  // unit-energy codewords
    const auto& ofdm = std::get<OfdmLinkSpec>(link);
    // Unit-variance channel, unit-energy active symbols, duty cycle k/n.
    return static_cast<double>(ofdm.n_t) * ofdm.config.k / ofdm.config.n;
}

double bits_per_channel_use(const LinkSpec& link) {
    if (const auto* s = std::get_if<SpatialLinkSpec>(&link))
        return static_cast<double>(bits_per_use(s->scheme));
    const auto& ofdm = std::get<OfdmLinkSpec>(link);
    return static_cast<double>(ofdm.n_t) * static_cast<double>(ofdm.config.frame_bits()) /
           static_cast<double>(ofdm.config.n_f + ofdm.config.cp_len);
}

int worker_count() {
    if (const char* env = std::getenv("IMPHY_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

BerRecord run_point(const Experiment& e, double snr_db, std::size_t point_index) {
    e.validate();
    const auto start = std::chrono::steady_clock::now();

    PointContext ctx;
    ctx.exp = &e;
    const NoiseSpec noise =
        NoiseSpec::from_snr_db(snr_db, es_per_rx(e.link), bits_per_channel_use(e.link));
    ctx.n0 = noise.n0;
    if (const auto* spatial = std::get_if<SpatialLinkSpec>(&e.link)) {
        if (spatial->detector == SpatialLinkSpec::Detector::JointMl)
            ctx.codebook = enumerate_codebook(spatial->scheme);
    } else {
        const auto& ofdm = std::get<OfdmLinkSpec>(e.link);
        if (ofdm.index_table_path.empty()) {
            ctx.selector = make_selector(ofdm.config);
        } else {
            ctx.selector = IndexSelector::from_json_file(ofdm.index_table_path);
            if (ctx.selector->n() != ofdm.config.n || ctx.selector->k() != ofdm.config.k)
                throw std::invalid_argument("index table (n, k) does not match the configuration");
        }
        if (ofdm.detector == OfdmLinkSpec::Detector::Ml)
            ctx.subblock_codebook = enumerate_subblocks(ofdm.config, *ctx.selector);
    }

    // Fixed round size so stopping decisions are independent of the worker
    // count; trial streams are seeded individually, so scheduling cannot
    // change any result.
    const bool is_ofdm = std::holds_alternative<OfdmLinkSpec>(e.link);
    const long round_size = is_ofdm ? 256 : 8192;
    const int workers = worker_count();

    Tally total;
    while (total.trials < e.max_trials) {
        const long this_round = std::min(round_size, e.max_trials - total.trials);
        const long chunk = (this_round + workers - 1) / workers;
        std::vector<std::future<Tally>> futures;
        for (long base = 0; base < this_round; base += chunk) {
            const long first = total.trials + base;
            const long count = std::min(chunk, this_round - base);
            futures.push_back(std::async(std::launch::async, [&, first, count] {
                return run_batch(ctx, point_index, first, count);
            }));
        }
        for (auto& f : futures) total += f.get();
        if (total.bit_errors >= e.min_errors && total.trials >= e.min_trials) break;
    }

    const double total_bits =
        static_cast<double>(total.trials) * static_cast<double>(bits_per_trial(e));
    BerRecord record;
    record.snr_db = snr_db;
    record.ebn0_db = noise.ebn0_db;
    record.trials = total.trials;
    record.bit_errors = total.bit_errors;
    record.ber = total_bits > 0 ? static_cast<double>(total.bit_errors) / total_bits : 0.0;
    record.std_err =
        total_bits > 0 ? std::sqrt(record.ber * (1.0 - record.ber) / total_bits) : 0.0;
    record.illegal_patterns = total.illegal;
    record.regularizations = total.regularizations;
    record.below_resolution = (total.bit_errors == 0 && total.trials >= e.max_trials);
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return record;
}

std::vector<BerRecord> run_sweep(const Experiment& e) {
    e.validate();
    std::vector<BerRecord> records;
    records.reserve(e.snr_grid_db.size());
    for (std::size_t i = 0; i < e.snr_grid_db.size(); ++i)
        records.push_back(run_point(e, e.snr_grid_db[i], i));
    return records;
}

void write_ber_csv_header(std::ostream& out) {
    out << "scheme,n_T,n_R,snr_db,ebn0_db,trials,bit_errors,ber,stderr,illegal_patterns,seconds\n";
}

void write_ber_csv_rows(std::ostream& out, const Experiment& e,
                        std::span<const BerRecord> records) {
    char line[320];
    for (const auto& r : records) {
        std::snprintf(line, sizeof line, "%s,%d,%d,%.12g,%.12g,%ld,%ld,%.12g,%.12g,%ld,%.3f\n",
                      e.label.c_str(), experiment_n_t(e), experiment_n_r(e), r.snr_db, r.ebn0_db,
                      r.trials, r.bit_errors, r.ber, r.std_err, r.illegal_patterns,
                      e.timing ? r.seconds : 0.0);
        out << line;
    }
}

namespace {

nlohmann::json link_json(const LinkSpec& link) {
    nlohmann::json j;
    if (const auto* s = std::get_if<SpatialLinkSpec>(&link)) {
        j["type"] = "spatial";
        j["scheme"] = s->scheme.label();
        j["n_t"] = s->scheme.n_t;
        j["n_a"] = s->scheme.n_a;
        j["n_r"] = s->n_r;
        j["m"] = s->scheme.constellation.order;
        j["detector"] = s->detector == SpatialLinkSpec::Detector::JointMl ? "ml" : "two-stage";
        j["bpcu"] = bits_per_use(s->scheme);
    } else {
        const auto& o = std::get<OfdmLinkSpec>(link);
        j["type"] = "ofdm";
        j["variant"] = to_string(o.config.variant);
        j["n_f"] = o.config.n_f;
        j["n"] = o.config.n;
        j["k"] = o.config.k;
        j["m"] = o.config.m;
        j["cp_len"] = o.config.cp_len;
        j["interleave"] = o.config.interleave;
        j["n_t"] = o.n_t;
        j["n_r"] = o.n_r;
        j["taps"] = o.taps;
        j["detector"] = o.detector == OfdmLinkSpec::Detector::MmseLlr ? "mmse-llr"
                        : o.detector == OfdmLinkSpec::Detector::Llr   ? "llr"
                                                                      : "ml";
        j["max_log"] = o.max_log;
        j["index_selection"] = o.index_table_path.empty() ? "combinadic" : o.index_table_path;
        j["bits_per_frame"] = o.config.frame_bits();
    }
    j["es_per_rx"] = es_per_rx(link);
    j["bits_per_channel_use"] = bits_per_channel_use(link);
    return j;
}

}  // namespace

void write_manifest(std::ostream& out, std::span<const Experiment> experiments) {
    nlohmann::json doc;
    doc["experiments"] = nlohmann::json::array();
    for (const auto& e : experiments) {
        nlohmann::json j;
        j["label"] = e.label;
        j["link"] = link_json(e.link);
        j["snr_grid_db"] = e.snr_grid_db;
        j["min_errors"] = e.min_errors;
        j["min_trials"] = e.min_trials;
        j["max_trials"] = e.max_trials;
        j["seed"] = e.seed;
        j["timing"] = e.timing;
        doc["experiments"].push_back(std::move(j));
    }
    doc["conventions"] = {
        {"snr", "snr_db = average received symbol energy per receive antenna / N0"},
        {"ebn0", "ebn0_db = snr_db - 10*log10(bits per channel use); OFDM channel use = one "
                 "time-domain sample, so the cyclic prefix penalty is included"},
        {"pattern_order", "lexicographic combinadic on increasing position lists"},
        {"active_symbol_energy", "active subcarriers carry unit-average-energy symbols; no "
                                 "frame-power renormalization across k"},
        {"gim2_rails", "independent in-phase/quadrature index modulation with the rails of the "
                       "unit-energy m-QAM alphabet (sqrt(m)-PAM / sqrt(2))"},
        {"interleaver", "g x n block interleaver, row write / column read"},
        {"llr", "lambda(n) = ln(k/(n-k)) - |y|^2/N0 + ln sum_s exp(-|y - h s|^2/N0); exact log "
                "unless max_log"},
        {"illegal_pattern_repair", "selectable pattern with maximum lambda sum; events counted"},
        {"mmse", "W = (H^H H + (N0/Es) I)^-1 H^H, Es = k/n per stream; successive detection in "
                 "descending mean post-filter SINR order with hard cancellation; effective "
                 "noise n0*||w||^2 + sum_u Es |w h_u|^2"},
        {"rng", "xoshiro256** with splitmix64 stream derivation from (seed, point, trial)"},
        {"stopping", "stop after min_errors bit errors and min_trials trials, or at max_trials"},
    };
    out << doc.dump(2) << "\n";
}

Experiment fig6_experiment(int n_t, int n_r, bool baseline, std::uint64_t seed) {
    OfdmLinkSpec spec;
    spec.config = OfdmImConfig::make(/*n_f=*/512, /*n=*/4, /*k=*/baseline ? 4 : 2, /*m=*/2,
                                     OfdmVariant::IM, /*interleave=*/true, /*cp_len=*/16);
    spec.n_t = n_t;
    spec.n_r = n_r;
    spec.taps = 10;
    spec.detector = OfdmLinkSpec::Detector::MmseLlr;

    Experiment e;
    e.label = baseline ? "vblast-ofdm" : "mimo-ofdm-im";
    e.link = spec;
    for (int snr = 0; snr <= 40; snr += 5) e.snr_grid_db.push_back(snr);
    e.min_errors = 100;
    e.min_trials = 10000;
    e.max_trials = 200000;
    e.seed = baseline ? derive_seed(seed, 0x0fd17, 1) : seed;
    return e;
}

}  // namespace imphy
