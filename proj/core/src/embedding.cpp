#include "pxlog/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>

#include "pxlog/errors.hpp"
#include "pxlog/rng.hpp"

namespace pxlog {

void zscore_columns(std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return;
    const std::size_t d = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != d) throw StatError("zscore_columns: ragged feature matrix");
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0.0;
        for (const auto& r : rows) mean += r[c];
        mean /= static_cast<double>(rows.size());
        double var = 0.0;
        for (const auto& r : rows) var += (r[c] - mean) * (r[c] - mean);
        var /= static_cast<double>(rows.size());
        const double sd = std::sqrt(var);
        for (auto& r : rows) r[c] = sd > 0.0 ? (r[c] - mean) / sd : 0.0;
    }
}

std::pair<double, double> fit_ab_params(double min_dist, double spread) {
    // Least-squares fit of 1/(1 + a x^(2b)) to the target falloff, plain
    // Levenberg-Marquardt with numeric differences.
    constexpr int kPoints = 300;
    std::vector<double> xs(kPoints), ys(kPoints);
    for (int i = 0; i < kPoints; ++i) {
        const double x = 3.0 * spread * (i + 1) / kPoints;
        xs[static_cast<std::size_t>(i)] = x;
        ys[static_cast<std::size_t>(i)] =
            x < min_dist ? 1.0 : std::exp(-(x - min_dist) / spread);
    }
    auto sse = [&](double a, double b) {
        double s = 0.0;
        for (int i = 0; i < kPoints; ++i) {
            const double m = 1.0 / (1.0 + a * std::pow(xs[static_cast<std::size_t>(i)], 2.0 * b));
            const double e = ys[static_cast<std::size_t>(i)] - m;
            s += e * e;
        }
        return s;
    };
    double a = 1.0, b = 1.0;
    double cur = sse(a, b);
    double lambda = 1e-3;
    for (int iter = 0; iter < 300; ++iter) {
        const double h = 1e-6;
        double jtj00 = 0, jtj01 = 0, jtj11 = 0, jtr0 = 0, jtr1 = 0;
        for (int i = 0; i < kPoints; ++i) {
            const double x = xs[static_cast<std::size_t>(i)];
            const double m = 1.0 / (1.0 + a * std::pow(x, 2.0 * b));
            const double ma = 1.0 / (1.0 + (a + h) * std::pow(x, 2.0 * b));
            const double mb = 1.0 / (1.0 + a * std::pow(x, 2.0 * (b + h)));
            const double da = (ma - m) / h;
            const double db = (mb - m) / h;
            const double r = ys[static_cast<std::size_t>(i)] - m;
            jtj00 += da * da;
            jtj01 += da * db;
            jtj11 += db * db;
            jtr0 += da * r;
            jtr1 += db * r;
        }
        bool stepped = false;
        for (int attempt = 0; attempt < 20; ++attempt) {
            const double a00 = jtj00 * (1 + lambda), a11 = jtj11 * (1 + lambda);
            const double det = a00 * a11 - jtj01 * jtj01;
            if (std::fabs(det) < 1e-300) {
                lambda *= 10;
                continue;
            }
            const double na = std::max(1e-6, a + (a11 * jtr0 - jtj01 * jtr1) / det);
            const double nb = std::max(1e-6, b + (a00 * jtr1 - jtj01 * jtr0) / det);
            const double ns = sse(na, nb);
            if (ns <= cur) {
                if (cur - ns < 1e-14) {
                    a = na;
                    b = nb;
                    return {a, b};
                }
                a = na;
                b = nb;
                cur = ns;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                break;
            }
            lambda *= 4;
        }
        if (!stepped) break;
    }
    return {a, b};
}

namespace {

struct Edge {
    std::uint32_t i, j;
    double w;
};

// Top-2 principal directions by power iteration with deflation; the start
// vectors come from the run's seed so the whole layout stays reproducible.
std::array<std::vector<double>, 2> principal_axes(const std::vector<std::vector<double>>& rows,
                                                  Rng& rng) {
    const std::size_t d = rows.front().size();
    std::vector<double> cov(d * d, 0.0);
    for (const auto& r : rows)
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = 0; q < d; ++q) cov[p * d + q] += r[p] * r[q];
    for (double& v : cov) v /= static_cast<double>(rows.size());

    std::array<std::vector<double>, 2> axes;
    for (int axis = 0; axis < 2; ++axis) {
        std::vector<double> v(d);
        for (auto& x : v) x = rng.normal();
        for (int it = 0; it < 200; ++it) {
            std::vector<double> w(d, 0.0);
            for (std::size_t p = 0; p < d; ++p)
                for (std::size_t q = 0; q < d; ++q) w[p] += cov[p * d + q] * v[q];
            if (axis == 1) {  // deflate against the first axis
                double dot = std::inner_product(w.begin(), w.end(), axes[0].begin(), 0.0);
                for (std::size_t p = 0; p < d; ++p) w[p] -= dot * axes[0][p];
            }
            double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
            if (norm < 1e-12) break;
            for (auto& x : w) x /= norm;
            v = std::move(w);
        }
        axes[static_cast<std::size_t>(axis)] = std::move(v);
    }
    return axes;
}

}  // namespace

std::vector<std::array<double, 2>> embed_2d(const std::vector<std::vector<double>>& rows,
                                            const EmbedParams& params, std::uint64_t seed) {
    const std::size_t n = rows.size();
    const int k = params.n_neighbors;
    if (k < 2) throw StatError("embed_2d: n_neighbors must be >= 2");
    if (n < static_cast<std::size_t>(k) + 1)
        throw StatError("embed_2d: need at least n_neighbors + 1 = " + std::to_string(k + 1) +
                        " points, got " + std::to_string(n));
    const std::size_t d = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != d) throw StatError("embed_2d: ragged feature matrix");

    Rng rng(seed);

    // exact k nearest neighbors
    std::vector<std::vector<std::pair<double, std::uint32_t>>> knn(n);
    {
        std::vector<std::pair<double, std::uint32_t>> dist(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    const double diff = rows[i][c] - rows[j][c];
                    s += diff * diff;
                }
                dist[j] = {std::sqrt(s), static_cast<std::uint32_t>(j)};
            }
            dist[i].first = std::numeric_limits<double>::infinity();  // exclude self
            std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
            knn[i].assign(dist.begin(), dist.begin() + k);
        }
    }

    // smooth-knn calibration: rho = nearest nonzero distance, sigma solves
    // sum exp(-(d - rho)+/sigma) = log2(k)
    const double target = std::log2(static_cast<double>(k));
    std::vector<double> rho(n, 0.0), sigma(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& nb : knn[i])
            if (nb.first > 0.0) {
                rho[i] = nb.first;
                break;
            }
        auto mass = [&](double s) {
            double m = 0.0;
            for (const auto& nb : knn[i]) m += std::exp(-std::max(0.0, nb.first - rho[i]) / s);
            return m;
        };
        double lo = 1e-12, hi = 1.0;
        while (mass(hi) < target && hi < 1e12) hi *= 2.0;
        for (int it = 0; it < 64; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mass(mid) >= target)
                hi = mid;
            else
                lo = mid;
        }
        sigma[i] = hi;
    }

    // directed memberships, then fuzzy union a + b - a*b
    std::vector<Edge> edges;
    {
        std::vector<std::map<std::uint32_t, double>> directed(n);
        for (std::size_t i = 0; i < n; ++i)
            for (const auto& nb : knn[i])
                directed[i][nb.second] = std::exp(-std::max(0.0, nb.first - rho[i]) / sigma[i]);
        for (std::size_t i = 0; i < n; ++i) {
            for (const auto& [j, wij] : directed[i]) {
                if (j < i) continue;  // handle each unordered pair once
                double wji = 0.0;
                const auto it = directed[j].find(static_cast<std::uint32_t>(i));
                if (it != directed[j].end()) wji = it->second;
                const double w = wij + wji - wij * wji;
                if (w > 0.0)
                    edges.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), w});
            }
        }
    }

    const auto [a, b] = fit_ab_params(params.min_dist, params.spread);

    // PCA initialization scaled to a 10-unit box, with a whisker of noise so
    // duplicate rows do not start exactly coincident.
    std::vector<std::array<double, 2>> y(n);
    {
        const auto axes = principal_axes(rows, rng);
        double max_abs = 1e-12;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = std::inner_product(rows[i].begin(), rows[i].end(), axes[0].begin(), 0.0);
            const double v = std::inner_product(rows[i].begin(), rows[i].end(), axes[1].begin(), 0.0);
            y[i] = {u, v};
            max_abs = std::max({max_abs, std::fabs(u), std::fabs(v)});
        }
        for (auto& p : y) {
            p[0] = p[0] / max_abs * 10.0 + 1e-4 * rng.normal();
            p[1] = p[1] / max_abs * 10.0 + 1e-4 * rng.normal();
        }
    }

    // negative-sampling SGD over the fuzzy graph
    double w_max = 0.0;
    for (const auto& e : edges) w_max = std::max(w_max, e.w);
    const double n_epochs = static_cast<double>(params.n_epochs);
    std::vector<double> epochs_per_sample(edges.size()), next_sample(edges.size()),
        epochs_per_negative(edges.size()), next_negative(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const double n_vec = n_epochs * edges[e].w / w_max;
        epochs_per_sample[e] = n_vec > 0.0 ? n_epochs / n_vec : std::numeric_limits<double>::infinity();
        next_sample[e] = epochs_per_sample[e];
        epochs_per_negative[e] = epochs_per_sample[e] / params.negative_sample_rate;
        next_negative[e] = epochs_per_negative[e];
    }

    auto clip4 = [](double v) { return std::clamp(v, -4.0, 4.0); };
    for (int epoch = 1; epoch <= params.n_epochs; ++epoch) {
        const double alpha =
            params.learning_rate * (1.0 - static_cast<double>(epoch - 1) / n_epochs);
        const double en = static_cast<double>(epoch);
        for (std::size_t e = 0; e < edges.size(); ++e) {
            if (next_sample[e] > en) continue;
            auto& yi = y[edges[e].i];
            auto& yj = y[edges[e].j];
            double d2 = 0.0;
            for (int c = 0; c < 2; ++c) d2 += (yi[c] - yj[c]) * (yi[c] - yj[c]);
            if (d2 > 0.0) {
                const double coeff =
                    (-2.0 * a * b * std::pow(d2, b - 1.0)) / (1.0 + a * std::pow(d2, b));
                for (int c = 0; c < 2; ++c) {
                    const double g = clip4(coeff * (yi[c] - yj[c])) * alpha;
                    yi[c] += g;
                    yj[c] -= g;
                }
            }
            next_sample[e] += epochs_per_sample[e];

            const int n_neg = static_cast<int>((en - next_negative[e]) / epochs_per_negative[e]) + 1;
            for (int t = 0; t < n_neg; ++t) {
                const auto other =
                    static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
                if (other == edges[e].i || other == edges[e].j) continue;
                auto& yk = y[other];
                double r2 = 0.0;
                for (int c = 0; c < 2; ++c) r2 += (yi[c] - yk[c]) * (yi[c] - yk[c]);
                if (r2 > 0.0) {
                    const double coeff = 2.0 * b / ((0.001 + r2) * (1.0 + a * std::pow(r2, b)));
                    for (int c = 0; c < 2; ++c) yi[c] += clip4(coeff * (yi[c] - yk[c])) * alpha;
                } else {
                    for (int c = 0; c < 2; ++c) yi[c] += 4.0 * alpha;
                }
            }
            next_negative[e] += n_neg * epochs_per_negative[e];
        }
    }
    return y;
}

std::vector<int> dbscan(const std::vector<std::array<double, 2>>& pts, const ClusterParams& params) {
    const std::size_t n = pts.size();
    const double eps2 = params.eps * params.eps;
    std::vector<std::vector<std::uint32_t>> nbrs(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double dx = pts[i][0] - pts[j][0];
            const double dz = pts[i][1] - pts[j][1];
            if (dx * dx + dz * dz <= eps2) nbrs[i].push_back(static_cast<std::uint32_t>(j));
        }
    }
    std::vector<int> label(n, -1);
    std::vector<char> visited(n, 0);
    int next_cluster = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (visited[i]) continue;
        visited[i] = 1;
        if (nbrs[i].size() < static_cast<std::size_t>(params.min_samples)) continue;  // not core
        const int cid = next_cluster++;
        label[i] = cid;
        std::queue<std::uint32_t> frontier;
        for (const auto j : nbrs[i]) frontier.push(j);
        while (!frontier.empty()) {
            const std::uint32_t j = frontier.front();
            frontier.pop();
            if (label[j] == -1) label[j] = cid;  // border point
            if (visited[j]) continue;
            visited[j] = 1;
            label[j] = cid;
            if (nbrs[j].size() >= static_cast<std::size_t>(params.min_samples))
                for (const auto q : nbrs[j]) frontier.push(q);
        }
    }
    return label;
}

}  // namespace pxlog
