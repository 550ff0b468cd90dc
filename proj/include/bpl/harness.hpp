#ifndef BPL_HARNESS_HPP
#define BPL_HARNESS_HPP

#include "bpl/forward.hpp"
#include "bpl/propagation.hpp"
#include "bpl/retrieval.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bpl::harness {

/// How a convergence sweep turns (value, error) pairs into a slope.
enum class FitWindow { UpperHalf, Full, Envelope };

/// Least-squares slope of log(err) vs log(x). Envelope fitting first
/// collapses the samples to per-bin maxima (5 log-spaced bins), which is
/// robust for error curves with an oscillatory factor.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& err,
                        FitWindow window);

struct SweepConfig {
    std::string variable = "t";          // "t" or "L"
    std::vector<double> values;
    FitWindow fit = FitWindow::UpperHalf;
    double expected_slope = 0.0;
    int coeff_index = 1;                 // which f_j / g_j the sweep tracks
};

struct ApertureConfig {
    int count = 128;
    std::string exclusion = "none";      // none | cap | band
    double delta = 0.0;
};

struct PropagationConfig {
    double R0 = 1.5;
    double eta = 1.0;
    int nodes = 64;
    ApertureConfig aperture;
    double eps = 1e-9;                   // discrepancy level for choose_alpha
};

struct PipelineConfig {
    double t0 = 10.0;                // base radius of the modified retrieval
    double cap_delta = 0.3;          // |xhat - d| exclusion for the f-stage
    double band_delta = 0.3;         // |xhat.d| exclusion for the g-stage
    int defect_passes = 2;
    double f_tmin = 1200.0;          // minimum lattice radius for the f-stage
    int f_order = 3;
    std::vector<double> eps_schedule = {0.12, 0.03, 0.01};
};

struct Config {
    forward::Scene scene;
    retrieval::RetrievalPlan plan;
    double theta_deg = 60.0;             // observation direction, angle from d
    std::string method = "f2d_revised";
    double t = 100.0;                    // base radius for fixed-radius methods
    int level = 8;                       // lattice level for grid methods
    bool oracle_w = false;               // synthesize v/w from phased references
    std::vector<double> synth_radii;
    double noise = 0.0;
    std::uint64_t seed = 1;
    SweepConfig sweep;
    PropagationConfig propagation;
    PipelineConfig pipeline;
    std::vector<double> field_radii = {2.0, 3.0};

    static Config from_json_file(const std::string& path);
    static Config from_json_text(const std::string& text);
    std::string to_json_text() const;
};

/// Shared run context: output directory, jobs, log sink.
struct RunContext {
    std::filesystem::path out_dir;
    int jobs = 1;
    std::ostream* log = nullptr;
};

/// Dispatch fn(i) for i in [0, n) over the context's worker count.
void parallel_for(int jobs, int n, const std::function<void(int)>& fn);

/// CSV writing with mandatory header; every file lands in the manifest.
class OutputWriter {
public:
    OutputWriter(std::filesystem::path dir, std::string config_echo);
    ~OutputWriter();

    void write_csv(const std::string& name, const std::string& header,
                   const std::vector<std::string>& rows);
    void write_text(const std::string& name, const std::string& body);
    /// Companion gnuplot script plotting the named columns of a CSV.
    void write_gnuplot(const std::string& csv_name, const std::string& title,
                       int xcol, int ycol, bool loglog);
    /// Content-hash manifest (sha256 per output + config echo).
    void finalize();

private:
    std::filesystem::path dir_;
    std::string config_echo_;
    std::vector<std::pair<std::string, std::string>> hashes_;
};

std::string sha256_hex(const std::string& bytes);

/// Commands. Each returns 0 on success and writes its CSVs under ctx.out_dir.
int cmd_forward(const Config& cfg, const RunContext& ctx);
int cmd_synth(const Config& cfg, const RunContext& ctx);
int cmd_retrieve(const Config& cfg, const RunContext& ctx);
int cmd_converge(const Config& cfg, const RunContext& ctx);
int cmd_propagate(const Config& cfg, const RunContext& ctx);
int cmd_pipeline(const Config& cfg, const RunContext& ctx);

/// Result bundle of the staged pipeline, exposed for tests.
struct PipelineResult {
    std::vector<double> g_dirs_cth;          // xhat.d per retrieval direction
    std::vector<retrieval::cplx> g_hat;      // final per-direction estimates
    std::vector<retrieval::cplx> g_truth;
    std::vector<retrieval::cplx> g_hat_oracle;
    double g_rel_err_ref = 0.0;              // at the reference direction
    double g_rel_l2 = 0.0;
    double um_rel_err_r3 = 0.0;              // reconstructed u_M on |x| = 3
    double uh_recon_abs_err = 0.0;           // measured max |uH_rec - uH| on sample radii
    double max_radius = 0.0;                 // largest modified-stage radius
    double oracle_discrepancy = 0.0;         // max |g_hat - g_hat_oracle|
};

PipelineResult run_pipeline(const Config& cfg, const RunContext& ctx);

}  // namespace bpl::harness

#endif
