#pragma once
#include "volcorr/kernel.hpp"

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace volcorr {

enum class StepDist { gaussian, rademacher };

struct SimConfig {
    int n = 10000;         // steps per path (>= 2)
    long paths = 10000;    // independent replications (>= 1)
    uint64_t seed = 0;
    int workers = 1;       // thread count; results are identical for any value
    StepDist step_dist = StepDist::gaussian;
    int max_moment = 10;   // highest moment order reported (even, >= 2)
};

struct MomentRow {
    int order = 0;
    double estimate = 0.0;
    double std_error = 0.0;
};

struct MomentTable {
    std::vector<MomentRow> rows;  // orders 0..max_moment
    long paths = 0;
    long resampled = 0;           // replications redrawn due to degenerate paths
};

struct Histogram {
    std::vector<double> bin_edges;  // bins + 1 edges spanning exactly [-1, 1]
    std::vector<long> counts;
    long total = 0;
};

// A sample with zero variance in either coordinate has no defined correlation.
struct DegenerateSample : std::domain_error {
    using std::domain_error::domain_error;
};

// Pearson correlation of two equal-length samples (length >= 2). Throws
// DegenerateSample when either sample is constant.
double theta_n(const std::vector<double>& s1, const std::vector<double>& s2);

// Correlation of the path values w[1..m] of a discretized pair.
double theta_n(const PathPair& paths);

// Correlation of the increments themselves.
double theta_prime_n(const std::vector<double>& d1, const std::vector<double>& d2);

// Deterministic path pair for a replication: streams 2*stream_id and
// 2*stream_id + 1 of the seeded generator, one per path.
PathPair gen_walk(const SimConfig& cfg, uint64_t stream_id);

// All replication correlations, in replication order, bit-identical for any
// worker count. Degenerate replications are redrawn from reserved stream ids;
// the redraw count is returned through resampled_out when non-null.
std::vector<double> sample_thetas(const SimConfig& cfg, long* resampled_out = nullptr);

// Moment table from an existing sample vector (orders 0..max_moment).
MomentTable moments_from_samples(const std::vector<double>& thetas, int max_moment,
                                 long resampled = 0);
MomentTable estimate_moments(const SimConfig& cfg);

Histogram histogram_from_samples(const std::vector<double>& thetas, int bins);
Histogram histogram(const SimConfig& cfg, int bins);

// Central interval holding the given sample mass: linear-interpolation
// quantiles at (1 -+ mass)/2. Requires at least 100 samples.
std::pair<double, double> quantile_interval(std::vector<double> samples, double mass);

}  // namespace volcorr
