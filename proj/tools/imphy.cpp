// Command-line front end: codebook dumps, rate reports, minimum-distance
// comparisons, and seeded BER sweeps, all emitting plot-ready CSV.
#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "imphy/analysis.hpp"
#include "imphy/sim.hpp"

namespace {

using nlohmann::json;

constexpr double kPi = 3.141592653589793238462643383279502884;

// ---------------------------------------------------------------------------
// config file handling: JSON object of scalars, unknown keys rejected; a key
// only applies when the matching flag was not given on the command line.

json load_config(const std::string& path, const std::set<std::string>& allowed) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json doc = json::parse(in);
    if (!doc.is_object()) throw std::runtime_error("config file must hold a JSON object");
    for (const auto& [key, value] : doc.items())
        if (!allowed.count(key)) throw std::runtime_error("unknown config key: " + key);
    return doc;
}

template <typename T>
void apply(const json& cfg, const char* key, const CLI::Option* opt, T& target) {
    if (cfg.contains(key) && opt->count() == 0) target = cfg.at(key).get<T>();
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    return out;
}

// Writes to --out when given, standard output otherwise.
struct Sink {
    std::string path;
    std::ostringstream buffer;
    void flush() {
        if (path.empty()) {
            std::cout << buffer.str();
        } else {
            auto out = open_output(path);
            out << buffer.str();
        }
    }
};

// ---------------------------------------------------------------------------
// scheme construction shared by codebook / rate / dmin / ber

struct SchemeArgs {
    std::string scheme;
    int n_t = 2;
    int n_a = 1;
    int m = 2;
    std::string esm_table = "a";
};

imphy::Constellation default_constellation(int m) {
    if (m == 2) return imphy::make_psk(2, 0.0);
    if (m == 4) return imphy::make_psk(4, kPi / 4);
    if (m == 8) return imphy::make_psk(8, 0.0);
    return imphy::make_qam(m);
}

imphy::EsmTable esm_table_from_arg(const std::string& arg) {
    if (arg.size() == 1 && arg[0] >= 'a' && arg[0] <= 'd')
        return imphy::esm_table_preset(arg[0]);
    return imphy::esm_table_from_json_file(arg);
}

imphy::SpatialScheme build_scheme(const SchemeArgs& a) {
    using imphy::SpatialScheme;
    if (a.scheme == "sm") return SpatialScheme::sm(a.n_t, default_constellation(a.m));
    if (a.scheme == "gsm") return SpatialScheme::gsm(a.n_t, a.n_a, default_constellation(a.m));
    if (a.scheme == "masm") return SpatialScheme::ma_sm(a.n_t, a.n_a, default_constellation(a.m));
    if (a.scheme == "esm") return SpatialScheme::esm(esm_table_from_arg(a.esm_table));
    if (a.scheme == "qsm") return SpatialScheme::qsm(a.n_t, default_constellation(a.m));
    if (a.scheme == "simo") return SpatialScheme::simo(default_constellation(a.m));
    if (a.scheme == "vblast") return SpatialScheme::vblast(a.n_t, default_constellation(a.m));
    throw std::runtime_error("unknown scheme: " + a.scheme +
                             " (expected sm|gsm|masm|esm|qsm|simo|vblast)");
}

// ---------------------------------------------------------------------------
// pretty printing of codeword entries; exact rationalized 1/sqrt2 forms where
// they apply, 12 significant digits otherwise.

bool near(double v, double target) { return std::abs(v - target) < 1e-12; }

std::string fmt_num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string pretty_entry(imphy::cplx v) {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    const double re = v.real();
    const double im = v.imag();
    if (near(re, 0.0) && near(im, 0.0)) return "0";
    if (near(im, 0.0)) {
        if (near(re, 1.0)) return "1";
        if (near(re, -1.0)) return "-1";
        if (near(re, inv_sqrt2)) return "1/sqrt2";
        if (near(re, -inv_sqrt2)) return "-1/sqrt2";
        return fmt_num(re);
    }
    if (near(re, 0.0)) {
        if (near(im, 1.0)) return "j";
        if (near(im, -1.0)) return "-j";
        if (near(im, inv_sqrt2)) return "j/sqrt2";
        if (near(im, -inv_sqrt2)) return "-j/sqrt2";
        return fmt_num(im) + "j";
    }
    if (near(std::abs(re), inv_sqrt2) && near(std::abs(im), inv_sqrt2)) {
        std::string s = "(";
        s += re > 0 ? "1" : "-1";
        s += im > 0 ? "+j" : "-j";
        s += ")/sqrt2";
        return s;
    }
    return fmt_num(re) + (im >= 0 ? "+" : "") + fmt_num(im) + "j";
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_codebook(const SchemeArgs& args, const std::string& out_path) {
    const auto scheme = build_scheme(args);
    const auto codebook = imphy::enumerate_codebook(scheme);

    Sink sink{out_path, {}};
    sink.buffer << "bits";
    for (int t = 1; t <= scheme.n_t; ++t) sink.buffer << ",x" << t << "_re,x" << t << "_im";
    sink.buffer << ",vector\n";
    for (const auto& cw : codebook) {
        sink.buffer << imphy::bits_to_string(cw.bits);
        for (int t = 0; t < scheme.n_t; ++t)
            sink.buffer << ',' << fmt_num(cw.vector(t).real()) << ','
                        << fmt_num(cw.vector(t).imag());
        sink.buffer << ",[";
        for (int t = 0; t < scheme.n_t; ++t)
            sink.buffer << (t ? "; " : "") << pretty_entry(cw.vector(t));
        sink.buffer << "]\n";
    }
    sink.flush();
    return 0;
}

struct OfdmArgs {
    std::string variant;  // im|gim1|gim2
    int n_f = 4;
    int n = 4;
    int k = 2;
    int m = 2;
    int cp = 0;
};

imphy::OfdmVariant parse_variant(const std::string& v) {
    if (v == "im") return imphy::OfdmVariant::IM;
    if (v == "gim1") return imphy::OfdmVariant::GIM1;
    if (v == "gim2") return imphy::OfdmVariant::GIM2;
    throw std::runtime_error("unknown OFDM variant: " + v + " (expected im|gim1|gim2)");
}

int cmd_rate(const SchemeArgs& scheme_args, const OfdmArgs& ofdm_args, bool ofdm_mode,
             const std::string& out_path) {
    Sink sink{out_path, {}};
    sink.buffer << "key,value\n";
    if (!ofdm_mode) {
        const auto scheme = build_scheme(scheme_args);
        sink.buffer << "scheme," << scheme.label() << "\n";
        sink.buffer << "n_t," << scheme.n_t << "\n";
        if (scheme.kind == imphy::SpatialKind::GSM || scheme.kind == imphy::SpatialKind::MA_SM) {
            sink.buffer << "n_a," << scheme.n_a << "\n";
            sink.buffer << "spatial_bits," << imphy::index_bits(scheme.n_t, scheme.n_a) << "\n";
        }
        sink.buffer << "m," << scheme.constellation.order << "\n";
        sink.buffer << "bpcu," << imphy::bits_per_use(scheme) << "\n";
    } else {
        const auto cfg = imphy::OfdmImConfig::make(ofdm_args.n_f, ofdm_args.n, ofdm_args.k,
                                                   ofdm_args.m, parse_variant(ofdm_args.variant),
                                                   false, ofdm_args.cp);
        sink.buffer << "variant," << imphy::to_string(cfg.variant) << "\n";
        sink.buffer << "n_f," << cfg.n_f << "\n";
        sink.buffer << "n," << cfg.n << "\n";
        if (cfg.variant != imphy::OfdmVariant::GIM1) sink.buffer << "k," << cfg.k << "\n";
        sink.buffer << "m," << cfg.m << "\n";
        sink.buffer << "cp_len," << cfg.cp_len << "\n";
        sink.buffer << "subblocks," << cfg.g() << "\n";
        if (cfg.variant == imphy::OfdmVariant::IM) sink.buffer << "p1," << cfg.p1() << "\n";
        if (cfg.variant == imphy::OfdmVariant::GIM1)
            sink.buffer << "realizations," << cfg.gim1_realization_count().str() << "\n";
        if (cfg.variant == imphy::OfdmVariant::GIM2)
            sink.buffer << "rail_bits," << cfg.rail_bits() << "\n";
        sink.buffer << "bits_per_subblock," << cfg.subblock_bits() << "\n";
        sink.buffer << "bits_per_frame," << cfg.frame_bits() << "\n";
        const double cp_factor =
            static_cast<double>(cfg.n_f) / static_cast<double>(cfg.n_f + cfg.cp_len);
        sink.buffer << "cp_factor," << fmt_num(cp_factor) << "\n";
        const double se = static_cast<double>(cfg.frame_bits()) / (cfg.n_f + cfg.cp_len);
        sink.buffer << "spectral_efficiency_bpcu," << fmt_num(se) << "\n";
        if (cfg.cp_len > 0)
            sink.buffer << "cp_se_reduction_pct," << fmt_num(100.0 * (1.0 - cp_factor)) << "\n";
    }
    sink.flush();
    return 0;
}

int cmd_dmin(const std::string& preset, const std::string& config_path,
             const std::string& out_path) {
    std::vector<imphy::DminReport> reports;
    if (!config_path.empty()) {
        json doc = load_config(config_path, {"schemes"});
        for (const auto& entry : doc.at("schemes")) {
            SchemeArgs a;
            a.scheme = entry.at("scheme").get<std::string>();
            a.n_t = entry.value("nt", 2);
            a.n_a = entry.value("na", 1);
            a.m = entry.value("m", 2);
            a.esm_table = entry.value("esm_table", std::string("a"));
            const auto scheme = build_scheme(a);
            reports.push_back(
                imphy::compute_d_min(scheme.label(), imphy::enumerate_codebook(scheme)));
        }
    } else {
        if (preset != "fig2")
            throw std::runtime_error("dmin needs --preset fig2 or a --config scheme list");
        for (const auto& entry : imphy::fig2_preset())
            reports.push_back(imphy::compute_d_min(entry.scheme.label(),
                                                   imphy::enumerate_codebook(entry.scheme)));
    }
    Sink sink{out_path, {}};
    imphy::write_dmin_csv(sink.buffer, reports);
    sink.flush();
    return 0;
}

imphy::Experiment experiment_from_config(const json& cfg) {
    imphy::Experiment e;
    const auto link_type = cfg.at("link").get<std::string>();
    if (link_type == "spatial") {
        imphy::SpatialLinkSpec spec;
        SchemeArgs a;
        a.scheme = cfg.at("scheme").get<std::string>();
        a.n_t = cfg.value("nt", 2);
        a.n_a = cfg.value("na", 1);
        a.m = cfg.value("m", 2);
        a.esm_table = cfg.value("esm_table", std::string("a"));
        spec.scheme = build_scheme(a);
        spec.n_r = cfg.value("nr", 1);
        const auto detector = cfg.value("detector", std::string("ml"));
        if (detector == "ml")
            spec.detector = imphy::SpatialLinkSpec::Detector::JointMl;
        else if (detector == "two-stage")
            spec.detector = imphy::SpatialLinkSpec::Detector::TwoStage;
        else
            throw std::runtime_error("unknown spatial detector: " + detector);
        e.label = spec.scheme.label();
        e.link = spec;
    } else if (link_type == "ofdm") {
        imphy::OfdmLinkSpec spec;
        spec.config = imphy::OfdmImConfig::make(
            cfg.value("nf", 512), cfg.value("n", 4), cfg.value("k", 2), cfg.value("m", 2),
            parse_variant(cfg.value("variant", std::string("im"))), cfg.value("interleave", true),
            cfg.value("cp", 16));
        spec.n_t = cfg.value("nt", 1);
        spec.n_r = cfg.value("nr", 1);
        spec.taps = cfg.value("taps", 10);
        spec.max_log = cfg.value("max_log", false);
        spec.index_table_path = cfg.value("index_table", std::string());
        const auto detector = cfg.value("detector", std::string("mmse-llr"));
        if (detector == "mmse-llr")
            spec.detector = imphy::OfdmLinkSpec::Detector::MmseLlr;
        else if (detector == "llr")
            spec.detector = imphy::OfdmLinkSpec::Detector::Llr;
        else if (detector == "ml")
            spec.detector = imphy::OfdmLinkSpec::Detector::Ml;
        else
            throw std::runtime_error("unknown OFDM detector: " + detector);
        e.label = "ofdm-" + imphy::to_string(spec.config.variant);
        e.link = spec;
    } else {
        throw std::runtime_error("link must be \"spatial\" or \"ofdm\"");
    }

    if (cfg.contains("snr")) {
        e.snr_grid_db = cfg.at("snr").get<std::vector<double>>();
    } else {
        const double start = cfg.value("snr_start", 0.0);
        const double stop = cfg.value("snr_stop", 20.0);
        const double step = cfg.value("snr_step", 5.0);
        if (step <= 0) throw std::runtime_error("snr_step must be positive");
        for (double v = start; v <= stop + 1e-9; v += step) e.snr_grid_db.push_back(v);
    }
    e.min_errors = cfg.value("min_errors", 100);
    e.min_trials = cfg.value("min_trials", 1);
    e.max_trials = cfg.value("max_trials", 100000);
    e.seed = cfg.value("seed", 1);
    e.timing = cfg.value("timing", false);
    if (cfg.contains("label")) e.label = cfg.at("label").get<std::string>();
    return e;
}

int cmd_ber(const std::string& config_path, const std::string& preset, const std::string& mimo,
            std::optional<std::uint64_t> seed, bool timing_flag, const std::string& out_path,
            std::optional<long> max_trials, std::optional<long> min_trials,
            std::optional<long> min_errors) {
    std::vector<imphy::Experiment> experiments;
    if (preset == "fig6") {
        int n_t = 2, n_r = 2;
        if (std::sscanf(mimo.c_str(), "%dx%d", &n_t, &n_r) != 2 || n_t < 1 || n_r < 1)
            throw std::runtime_error("--mimo expects NTxNR, e.g. 2x2, 4x4, 8x8");
        const std::uint64_t s = seed.value_or(1);
        experiments.push_back(imphy::fig6_experiment(n_t, n_r, /*baseline=*/false, s));
        experiments.push_back(imphy::fig6_experiment(n_t, n_r, /*baseline=*/true, s));
    } else if (!preset.empty()) {
        throw std::runtime_error("unknown preset: " + preset + " (expected fig6)");
    } else if (!config_path.empty()) {
        const std::set<std::string> allowed{
            "link",      "scheme",     "nt",         "na",         "nr",          "m",
            "detector",  "esm_table",  "variant",    "nf",         "n",           "k",
            "cp",        "taps",       "interleave", "max_log",    "index_table", "snr",
            "snr_start", "snr_stop",   "snr_step",   "min_errors", "min_trials",  "max_trials",
            "seed",      "timing",     "label"};
        experiments.push_back(experiment_from_config(load_config(config_path, allowed)));
        if (seed) experiments.back().seed = *seed;
    } else {
        throw std::runtime_error("ber needs --config FILE or --preset fig6");
    }

    for (auto& e : experiments) {
        if (timing_flag) e.timing = true;
        if (max_trials) e.max_trials = *max_trials;
        if (min_trials) e.min_trials = *min_trials;
        if (min_errors) e.min_errors = *min_errors;
        e.validate();
    }

    Sink sink{out_path, {}};
    imphy::write_ber_csv_header(sink.buffer);
    for (const auto& e : experiments) {
        const auto records = imphy::run_sweep(e);
        imphy::write_ber_csv_rows(sink.buffer, e, records);
    }
    sink.flush();
    if (!out_path.empty()) {
        auto manifest = open_output(out_path + ".manifest.json");
        imphy::write_manifest(manifest, experiments);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"index-modulation link-level simulator"};
    app.require_subcommand(1);

    // codebook ---------------------------------------------------------------
    auto* codebook = app.add_subcommand("codebook", "dump a scheme's bits -> vector table");
    SchemeArgs cb_args;
    std::string cb_config, cb_out;
    auto* cb_scheme =
        codebook->add_option("--scheme", cb_args.scheme, "sm|gsm|masm|esm|qsm|simo|vblast");
    auto* cb_nt = codebook->add_option("--nt", cb_args.n_t, "transmit antennas");
    auto* cb_na = codebook->add_option("--na", cb_args.n_a, "active antennas (gsm/masm)");
    auto* cb_m = codebook->add_option("--m", cb_args.m, "constellation order");
    auto* cb_esm = codebook->add_option("--esm-table", cb_args.esm_table,
                                        "ESM alphabet: a|b|c|d or a JSON table file");
    codebook->add_option("--config", cb_config, "JSON config file");
    codebook->add_option("--out", cb_out, "output CSV path (default: stdout)");

    // rate -------------------------------------------------------------------
    auto* rate = app.add_subcommand("rate", "bits per channel use / per frame report");
    SchemeArgs rate_scheme;
    OfdmArgs rate_ofdm;
    std::string rate_config, rate_out;
    auto* r_scheme = rate->add_option("--scheme", rate_scheme.scheme, "spatial scheme");
    auto* r_nt = rate->add_option("--nt", rate_scheme.n_t, "transmit antennas");
    auto* r_na = rate->add_option("--na", rate_scheme.n_a, "active antennas");
    auto* r_m = rate->add_option("--m", rate_scheme.m, "constellation order");
    auto* r_esm = rate->add_option("--esm-table", rate_scheme.esm_table, "ESM alphabet");
    auto* r_ofdm = rate->add_option("--ofdm", rate_ofdm.variant, "OFDM variant im|gim1|gim2");
    auto* r_nf = rate->add_option("--nf", rate_ofdm.n_f, "total subcarriers");
    auto* r_n = rate->add_option("--n", rate_ofdm.n, "subblock size");
    auto* r_k = rate->add_option("--k", rate_ofdm.k, "active subcarriers per subblock");
    auto* r_cp = rate->add_option("--cp", rate_ofdm.cp, "cyclic prefix length");
    rate->add_option("--config", rate_config, "JSON config file");
    rate->add_option("--out", rate_out, "output path (default: stdout)");

    // dmin -------------------------------------------------------------------
    auto* dmin = app.add_subcommand("dmin", "minimum squared Euclidean distance report");
    std::string dmin_preset = "fig2", dmin_config, dmin_out;
    dmin->add_option("--preset", dmin_preset, "preset name (fig2)");
    dmin->add_option("--config", dmin_config, "JSON config with a schemes array");
    dmin->add_option("--out", dmin_out, "output CSV path (default: stdout)");

    // ber --------------------------------------------------------------------
    auto* ber = app.add_subcommand("ber", "Monte Carlo BER sweep");
    std::string ber_config, ber_preset, ber_mimo = "2x2", ber_out;
    std::uint64_t ber_seed = 0;
    bool ber_timing = false;
    long ber_max_trials = 0, ber_min_trials = 0, ber_min_errors = 0;
    ber->add_option("--config", ber_config, "JSON experiment config");
    ber->add_option("--preset", ber_preset, "preset name (fig6)");
    ber->add_option("--mimo", ber_mimo, "fig6 antenna setup: 2x2|4x4|8x8");
    auto* ber_seed_opt = ber->add_option("--seed", ber_seed, "master seed");
    ber->add_flag("--timing", ber_timing, "write measured wall time (breaks byte stability)");
    auto* ber_maxt = ber->add_option("--max-trials", ber_max_trials, "per-point trial cap");
    auto* ber_mint = ber->add_option("--min-trials", ber_min_trials, "per-point trial floor");
    auto* ber_mine = ber->add_option("--min-errors", ber_min_errors, "per-point bit-error target");
    ber->add_option("--out", ber_out, "output CSV path; manifest written alongside");

    CLI11_PARSE(app, argc, argv);

    try {
        if (codebook->parsed()) {
            if (!cb_config.empty()) {
                const json cfg = load_config(cb_config, {"scheme", "nt", "na", "m", "esm_table"});
                apply(cfg, "scheme", cb_scheme, cb_args.scheme);
                apply(cfg, "nt", cb_nt, cb_args.n_t);
                apply(cfg, "na", cb_na, cb_args.n_a);
                apply(cfg, "m", cb_m, cb_args.m);
                apply(cfg, "esm_table", cb_esm, cb_args.esm_table);
            }
            if (cb_args.scheme.empty()) throw std::runtime_error("codebook needs --scheme");
            return cmd_codebook(cb_args, cb_out);
        }
        if (rate->parsed()) {
            bool ofdm_mode = r_ofdm->count() > 0;
            if (!rate_config.empty()) {
                const json cfg = load_config(rate_config, {"scheme", "nt", "na", "m", "esm_table",
                                                           "ofdm", "nf", "n", "k", "cp"});
                apply(cfg, "scheme", r_scheme, rate_scheme.scheme);
                apply(cfg, "nt", r_nt, rate_scheme.n_t);
                apply(cfg, "na", r_na, rate_scheme.n_a);
                apply(cfg, "m", r_m, rate_scheme.m);
                apply(cfg, "esm_table", r_esm, rate_scheme.esm_table);
                apply(cfg, "ofdm", r_ofdm, rate_ofdm.variant);
                apply(cfg, "nf", r_nf, rate_ofdm.n_f);
                apply(cfg, "n", r_n, rate_ofdm.n);
                apply(cfg, "k", r_k, rate_ofdm.k);
                apply(cfg, "cp", r_cp, rate_ofdm.cp);
                ofdm_mode = !rate_ofdm.variant.empty();
            }
            rate_ofdm.m = rate_scheme.m;
            if (!ofdm_mode && rate_scheme.scheme.empty())
                throw std::runtime_error("rate needs --scheme or --ofdm");
            return cmd_rate(rate_scheme, rate_ofdm, ofdm_mode, rate_out);
        }
        if (dmin->parsed()) return cmd_dmin(dmin_preset, dmin_config, dmin_out);
        if (ber->parsed()) {
            return cmd_ber(ber_config, ber_preset, ber_mimo,
                           ber_seed_opt->count() ? std::optional<std::uint64_t>(ber_seed)
                                                 : std::nullopt,
                           ber_timing, ber_out,
                           ber_maxt->count() ? std::optional<long>(ber_max_trials) : std::nullopt,
                           ber_mint->count() ? std::optional<long>(ber_min_trials) : std::nullopt,
                           ber_mine->count() ? std::optional<long>(ber_min_errors) : std::nullopt);
        }
    } catch (const std::exception& ex) {
        std::cerr << "imphy: error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
