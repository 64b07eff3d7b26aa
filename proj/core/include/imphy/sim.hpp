#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "imphy/channel.hpp"
#include "imphy/detection.hpp"
#include "imphy/ofdm_im.hpp"
#include "imphy/spatial_mapper.hpp"

namespace imphy {

/// Single-carrier link: one codeword per trial over a flat Rayleigh channel.
struct SpatialLinkSpec {
    SpatialScheme scheme;
    int n_r = 1;
    enum class Detector { JointMl, TwoStage } detector = Detector::JointMl;
};

/// Multi-carrier link: one OFDM frame per transmit antenna per trial over a
/// frequency-selective Rayleigh channel (quasi-static per frame).
struct OfdmLinkSpec {
    OfdmImConfig config;
    int n_t = 1;
    int n_r = 1;
    int taps = 1;
    enum class Detector { Llr, Ml, MmseLlr } detector = Detector::MmseLlr;
    bool max_log = false;
    std::string index_table_path;  // lookup-table JSON; empty = combinadic selection
};

using LinkSpec = std::variant<SpatialLinkSpec, OfdmLinkSpec>;

struct Experiment {
    std::string label;  // scheme id used in result rows
    LinkSpec link;
    std::vector<double> snr_grid_db;  // strictly increasing
    long min_errors = 100;            // stop a point after this many bit errors...
    long min_trials = 1;              // ...but never before this many trials
    long max_trials = 100000;         // hard trial cap per point
    std::uint64_t seed = 1;
    bool timing = false;  // write measured wall time into the CSV (breaks byte stability)

    void validate() const;
};

struct BerRecord {
    double snr_db = 0.0;
    double ebn0_db = 0.0;
    long trials = 0;
    long bit_errors = 0;
    double ber = 0.0;
    double std_err = 0.0;
    long illegal_patterns = 0;
    double seconds = 0.0;           // measured wall time
    bool below_resolution = false;  // max trials exhausted with zero errors
    long regularizations = 0;
};

int experiment_n_t(const Experiment& e);
int experiment_n_r(const Experiment& e);
long bits_per_trial(const Experiment& e);

/// Average received symbol energy per receive antenna (the SNR reference).
double es_per_rx(const LinkSpec& link);

/// Bits per channel use for Eb/N0 accounting; for OFDM links a channel use
/// is one time-domain sample, so the cyclic prefix penalty is included.
double bits_per_channel_use(const LinkSpec& link);

/// One Monte Carlo point: loops bits -> encode -> channel -> detect until
/// the stopping rule fires. Deterministic under the experiment seed: trial
/// streams derive from (seed, point_index, trial_index), so results do not
/// depend on the worker count, and adding grid points never shifts other
/// points' streams.
BerRecord run_point(const Experiment& e, double snr_db, std::size_t point_index);

/// One record per grid point, in grid order.
std::vector<BerRecord> run_sweep(const Experiment& e);

/// CSV header: scheme,n_T,n_R,snr_db,ebn0_db,trials,bit_errors,ber,stderr,
/// illegal_patterns,seconds. The seconds column is 0.000 unless
/// Experiment::timing is set, keeping default output byte-stable.
void write_ber_csv_header(std::ostream& out);
void write_ber_csv_rows(std::ostream& out, const Experiment& e,
                        std::span<const BerRecord> records);

/// JSON run manifest embedding the experiment and every convention flag in
/// force (pattern order, energy policy, detector formulas, seeding).
void write_manifest(std::ostream& out, std::span<const Experiment> experiments);

/// Worker cap: IMPHY_THREADS when set, otherwise hardware concurrency.
int worker_count();

/// Bundled MIMO-OFDM-IM reference experiment (BPSK, n=4, k=2, n_f=512,
/// cp=16, 10-tap uniform channel, interleaved, MMSE-LLR detection) and its
/// equal-rate all-subcarriers-active baseline.
Experiment fig6_experiment(int n_t, int n_r, bool baseline, std::uint64_t seed);

}  // namespace imphy
