#include "volcorr/montecarlo.hpp"
#include "volcorr/rng.hpp"
#include "volcorr/summation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

namespace volcorr {

namespace {

void check_config(const SimConfig& cfg) {
    if (cfg.n < 2 || cfg.paths < 1 || cfg.workers < 1 || cfg.max_moment < 2 ||
        cfg.max_moment % 2 != 0)
        throw std::invalid_argument(
            "SimConfig: need n >= 2, paths >= 1, workers >= 1, even max_moment >= 2");
}

double pearson(const double* a, const double* b, std::size_t n) {
    if (n < 2) throw std::invalid_argument("pearson: need at least 2 samples");
    std::vector<double> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = a[i];
    double ma = pairwise_sum(buf) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = b[i];
    double mb = pairwise_sum(buf) / static_cast<double>(n);
    std::vector<double> va(n), vb(n), vab(n);
    for (std::size_t i = 0; i < n; ++i) {
        double da = a[i] - ma, db = b[i] - mb;
        va[i] = da * da;
        vb[i] = db * db;
        vab[i] = da * db;
    }
    double sa = pairwise_sum(va), sb = pairwise_sum(vb), sab = pairwise_sum(vab);
    if (!(sa > 0.0) || !(sb > 0.0))
        throw DegenerateSample("pearson: a sample has zero variance");
    return sab / std::sqrt(sa * sb);
}

void fill_path(std::vector<double>& w, const SimConfig& cfg, uint64_t stream) {
    CounterStream rng(cfg.seed, stream);
    int n = cfg.n;
    double scale = 1.0 / std::sqrt(static_cast<double>(n));
    w.assign(n + 1, 0.0);
    if (cfg.step_dist == StepDist::gaussian) {
        for (int k = 0; k < n; k += 2) {
            double z1, z2;
            rng.next_normal2(z1, z2);
            w[k + 1] = w[k] + z1 * scale;
            if (k + 1 < n) w[k + 2] = w[k + 1] + z2 * scale;
        }
    } else {
        for (int k = 0; k < n; k += 2) {
            double u1, u2;
            rng.next_uniform2(u1, u2);
            w[k + 1] = w[k] + (u1 < 0.5 ? -scale : scale);
            if (k + 1 < n) w[k + 2] = w[k + 1] + (u2 < 0.5 ? -scale : scale);
        }
    }
}

// Replication r uses stream ids r, paths + r, 2*paths + r, ... across
// degenerate-redraw attempts; each id expands to two per-path streams.
double replicate_theta(const SimConfig& cfg, long r, int* retries) {
    for (int attempt = 0;; ++attempt) {
        uint64_t id = static_cast<uint64_t>(attempt) * static_cast<uint64_t>(cfg.paths) +
                      static_cast<uint64_t>(r);
        PathPair p = gen_walk(cfg, id);
        try {
            double t = theta_n(p);
            if (retries) *retries = attempt;
            return t;
        } catch (const DegenerateSample&) {
            if (attempt >= 64)
                throw std::runtime_error("sample_thetas: replication stayed degenerate");
        }
    }
}

void run_partitioned(long count, int workers, const std::function<void(long, long)>& body) {
    if (workers <= 1 || count < 2) {
        body(0, count);
        return;
    }
    int nthreads = static_cast<int>(std::min<long>(workers, count));
    long chunk = (count + nthreads - 1) / nthreads;
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) {
        long lo = t * chunk;
        long hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(body, lo, hi);
    }
    for (auto& th : pool) th.join();
}

}  // namespace

double theta_n(const std::vector<double>& s1, const std::vector<double>& s2) {
    if (s1.size() != s2.size())
        throw std::invalid_argument("theta_n: samples must have equal length");
    return pearson(s1.data(), s2.data(), s1.size());
}

double theta_n(const PathPair& paths) {
    std::size_t m = paths.w1.size();
    if (m < 3 || paths.w2.size() != m)
        throw std::invalid_argument("theta_n: need paths with at least 2 samples past t = 0");
    return pearson(paths.w1.data() + 1, paths.w2.data() + 1, m - 1);
}

double theta_prime_n(const std::vector<double>& d1, const std::vector<double>& d2) {
    if (d1.size() != d2.size())
        throw std::invalid_argument("theta_prime_n: samples must have equal length");
    return pearson(d1.data(), d2.data(), d1.size());
}

PathPair gen_walk(const SimConfig& cfg, uint64_t stream_id) {
    check_config(cfg);
    PathPair p;
    p.grid.m = cfg.n;
    fill_path(p.w1, cfg, 2 * stream_id);
    fill_path(p.w2, cfg, 2 * stream_id + 1);
    return p;
}

std::vector<double> sample_thetas(const SimConfig& cfg, long* resampled_out) {
    check_config(cfg);
    std::vector<double> thetas(cfg.paths);
    std::vector<int> retries(cfg.paths, 0);
    run_partitioned(cfg.paths, cfg.workers, [&](long lo, long hi) {
        for (long r = lo; r < hi; ++r) thetas[r] = replicate_theta(cfg, r, &retries[r]);
    });
    for (double t : thetas) {
        // |theta| can only exceed 1 through a logic error, not bad luck.
        if (!(std::fabs(t) <= 1.0 + 4e-16))
            throw std::logic_error("sample_thetas: |theta| > 1");
    }
    if (resampled_out) {
        long total = 0;
        for (int k : retries) total += k;
        *resampled_out = total;
    }
    return thetas;
}

MomentTable moments_from_samples(const std::vector<double>& thetas, int max_moment,
                                 long resampled) {
    if (thetas.empty() || max_moment < 2 || max_moment % 2 != 0)
        throw std::invalid_argument("moments_from_samples: need samples and even max_moment >= 2");
    long paths = static_cast<long>(thetas.size());
    MomentTable table;
    table.paths = paths;
    table.resampled = resampled;
    std::vector<double> pw(paths), pw2(paths);
    for (int k = 0; k <= max_moment; ++k) {
        if (k == 0) {
            table.rows.push_back({0, 1.0, 0.0});
            continue;
        }
        for (long i = 0; i < paths; ++i) {
            double t = thetas[i];
            double p = 1.0;
            for (int j = 0; j < k; ++j) p *= t;
            pw[i] = p;
            pw2[i] = p * p;
        }
        double est = pairwise_sum(pw) / static_cast<double>(paths);
        double m2 = pairwise_sum(pw2) / static_cast<double>(paths);
        double se = paths > 1
                        ? std::sqrt(std::max(0.0, m2 - est * est) / static_cast<double>(paths - 1))
                        : 0.0;
        table.rows.push_back({k, est, se});
    }
    return table;
}

MomentTable estimate_moments(const SimConfig& cfg) {
    long resampled = 0;
    std::vector<double> thetas = sample_thetas(cfg, &resampled);
    return moments_from_samples(thetas, cfg.max_moment, resampled);
}

Histogram histogram_from_samples(const std::vector<double>& thetas, int bins) {
    if (bins < 10) throw std::invalid_argument("histogram: need at least 10 bins");
    Histogram h;
    h.bin_edges.resize(bins + 1);
    for (int i = 0; i <= bins; ++i)
        h.bin_edges[i] = -1.0 + 2.0 * static_cast<double>(i) / bins;
    h.bin_edges.front() = -1.0;
    h.bin_edges.back() = 1.0;
    h.counts.assign(bins, 0);
    for (double t : thetas) {
        int idx = static_cast<int>((t + 1.0) * 0.5 * bins);
        idx = std::clamp(idx, 0, bins - 1);
        ++h.counts[idx];
    }
    h.total = static_cast<long>(thetas.size());
    return h;
}

Histogram histogram(const SimConfig& cfg, int bins) {
    return histogram_from_samples(sample_thetas(cfg), bins);
}

std::pair<double, double> quantile_interval(std::vector<double> samples, double mass) {
    if (samples.size() < 100)
        throw std::invalid_argument("quantile_interval: need at least 100 samples");
    if (!(mass > 0.0) || !(mass <= 1.0))
        throw std::invalid_argument("quantile_interval: mass must lie in (0, 1]");
    std::sort(samples.begin(), samples.end());
    auto at = [&](double p) {
        double h = p * static_cast<double>(samples.size() - 1);
        std::size_t lo = static_cast<std::size_t>(h);
        std::size_t hi = std::min(lo + 1, samples.size() - 1);
        double frac = h - static_cast<double>(lo);
        return samples[lo] + frac * (samples[hi] - samples[lo]);
    };
    return {at(0.5 * (1.0 - mass)), at(0.5 * (1.0 + mass))};
}

}  // namespace volcorr
