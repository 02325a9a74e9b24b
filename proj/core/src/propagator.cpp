#include "volmom/propagator.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace volmom {

namespace {

constexpr int kMaxDoublings = 60;

double min_diagonal(const Eigen::MatrixXd& L) { return L.diagonal().minCoeff(); }

int stability_doublings(const Eigen::MatrixXd& L, double span) {
    const double d = min_diagonal(L);  // most negative rate
    int n = 0;
    while (n < kMaxDoublings && 1.0 + (span / std::pow(2.0, n)) * d < 0.5) ++n;
    return n;
}

// Extra halvings so the accumulated first-order step error, roughly
// span * dt * (2 max|diag|)^2 / 2, stays below the target.
int accuracy_doublings(const Eigen::MatrixXd& L, double span, double target) {
    const double d = std::abs(min_diagonal(L));
    if (d == 0.0 || target <= 0.0) return 0;
    const double bound = 2.0 * span * span * d * d;  // with dt = span
    int n = 0;
    while (n < kMaxDoublings && bound / std::pow(2.0, n) > target) ++n;
    return n;
}

}  // namespace

StepChoice choose_step(const Eigen::MatrixXd& L, double span) {
    if (!(span > 0.0)) throw std::invalid_argument("choose_step: span must be positive");
    StepChoice c;
    c.doublings = stability_doublings(L, span);
    c.dt = span / std::pow(2.0, c.doublings);
    return c;
}

Eigen::MatrixXd elementary_step(const Eigen::MatrixXd& L, double dt) {
    Eigen::MatrixXd u = Eigen::MatrixXd::Identity(L.rows(), L.cols()) + dt * L;
    if (u.diagonal().minCoeff() < 0.5 - 1e-12)
        throw std::invalid_argument("elementary_step: stability condition violated");
    return u;
}

Eigen::MatrixXd fast_exponentiate(const Eigen::MatrixXd& L, double span, ExpOptions opts) {
    if (span == 0.0) return Eigen::MatrixXd::Identity(L.rows(), L.cols());
    if (span < 0.0) throw std::invalid_argument("fast_exponentiate: negative span");
    int n;
    if (opts.forcedDoublings >= 0) {
        n = opts.forcedDoublings;
    } else {
        n = std::max(stability_doublings(L, span),
                     accuracy_doublings(L, span, opts.accuracyTarget));
    }
    const double dt = span / std::pow(2.0, n);
    // Square the deviation from the identity: with u = I + a, u^2 = I + 2a + a^2.
    // Forming I + dt*L explicitly would round the tiny increment against the
    // identity and the loss compounds over the squarings; tracking a alone
    // computes the same power (I + dt*L)^(2^n) at full relative precision.
    Eigen::MatrixXd a = dt * L;
    for (int k = 0; k < n; ++k) {
        const Eigen::MatrixXd a2 = a * a;
        a = 2.0 * a + a2;
    }
    return Eigen::MatrixXd::Identity(L.rows(), L.cols()) + a;
}

Propagator fast_exponentiate(const GeneratorMatrix& L, ExpOptions opts) {
    Propagator p;
    p.entries = fast_exponentiate(L.entries, L.span(), opts);
    p.t0 = L.t0;
    p.t1 = L.t1;
    return p;
}

Eigen::MatrixXd Propagator::clamped() const { return entries.cwiseMax(0.0); }

void TimeGrid::validate() const {
    if (intervals.empty()) throw std::invalid_argument("time grid: no intervals");
    for (size_t i = 0; i < intervals.size(); ++i) {
        if (!(intervals[i].t1 > intervals[i].t0))
            throw std::invalid_argument("time grid: empty interval");
        if (i > 0 && std::abs(intervals[i].t0 - intervals[i - 1].t1) > 1e-12)
            throw std::invalid_argument("time grid: intervals not contiguous");
        if (intervals[i].size() != intervals[0].size())
            throw std::invalid_argument("time grid: state count mismatch");
    }
}

TimeGrid make_time_grid(std::vector<GeneratorMatrix> intervals) {
    TimeGrid g;
    g.intervals = std::move(intervals);
    g.validate();
    g.steps.reserve(g.intervals.size());
    for (const auto& iv : g.intervals) g.steps.push_back(choose_step(iv.entries, iv.span()));
    return g;
}

Propagator compose(const TimeGrid& grid, double t1, double t2, ExpOptions opts) {
    constexpr double kTol = 1e-9;
    if (t2 < t1) throw std::invalid_argument("compose: t2 < t1");
    const int n = grid.states();
    Propagator p;
    p.t0 = t1;
    p.t1 = t2;
    p.entries = Eigen::MatrixXd::Identity(n, n);
    if (std::abs(t2 - t1) <= kTol) return p;

    bool sawStart = false, sawEnd = false;
    for (const auto& iv : grid.intervals) {
        if (std::abs(iv.t0 - t1) <= kTol) sawStart = true;
        if (std::abs(iv.t1 - t2) <= kTol) sawEnd = true;
        if (iv.t0 > t1 - kTol && iv.t1 < t2 + kTol && sawStart)
            p.entries = p.entries * fast_exponentiate(iv, opts).entries;
        if (sawEnd) break;
    }
    if (!sawStart || !sawEnd)
        throw std::invalid_argument("compose: times must be interval boundaries");
    return p;
}

void save_propagator(std::ostream& os, const Propagator& u) {
    const char magic[4] = {'V', 'M', 'P', 'R'};
    os.write(magic, 4);
    const std::uint32_t n = static_cast<std::uint32_t>(u.size());
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    os.write(reinterpret_cast<const char*>(&u.t0), sizeof u.t0);
    os.write(reinterpret_cast<const char*>(&u.t1), sizeof u.t1);
    for (int i = 0; i < u.size(); ++i) {
        const Eigen::VectorXd row = u.entries.row(i);  // contiguous copy
        os.write(reinterpret_cast<const char*>(row.data()),
                 static_cast<std::streamsize>(sizeof(double)) * u.size());
    }
}

Propagator load_propagator(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "VMPR", 4) != 0)
        throw std::runtime_error("propagator dump: bad magic");
    std::uint32_t n = 0;
    Propagator u;
    is.read(reinterpret_cast<char*>(&n), sizeof n);
    is.read(reinterpret_cast<char*>(&u.t0), sizeof u.t0);
    is.read(reinterpret_cast<char*>(&u.t1), sizeof u.t1);
    u.entries.resize(n, n);
    for (std::uint32_t i = 0; i < n; ++i) {
        Eigen::VectorXd row(n);
        is.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(sizeof(double)) * n);
        u.entries.row(static_cast<int>(i)) = row;
    }
    if (!is) throw std::runtime_error("propagator dump: truncated");
    return u;
}

}  // namespace volmom
