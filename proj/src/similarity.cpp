#include "probe/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "probe/common.hpp"

namespace probe {

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw ProbeError("dimension-mismatch", std::to_string(u.size()) + " vs " + std::to_string(v.size()));
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) throw ProbeError("zero-vector", "cosine undefined for a zero vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

std::size_t levenshtein_distance(std::string_view a, std::string_view b) {
    const std::size_t m = a.size(), n = b.size();
    if (m == 0) return n;
    if (n == 0) return m;

    std::vector<std::size_t> costs(n + 1);
    std::iota(costs.begin(), costs.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t corner = costs[0];
        costs[0] = i + 1;
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t upper = costs[j + 1];
            if (a[i] == b[j]) {
                costs[j + 1] = corner;
            } else {
                costs[j + 1] = 1 + std::min({upper, corner, costs[j]});
            }
            corner = upper;
        }
    }
    return costs[n];
}

double normalized_levenshtein(std::string_view a, std::string_view b) {
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 0.0;
    return static_cast<double>(levenshtein_distance(a, b)) / static_cast<double>(longest);
}

SimilarityBand intra_band(Bias bias) {
    // Framing edits touch the option wording itself, so its band opens lower.
    return {bias == Bias::framing ? 0.85 : 0.90, 0.99};
}

bool check_intra_band(double sim, Bias bias) {
    const SimilarityBand band = intra_band(bias);
    return sim >= band.lower && sim < band.upper;
}

bool check_round_trip(double sim, double tau) { return sim > tau; }

bool collision_exceeds(double sim, double tau_inter) { return sim > tau_inter; }

std::optional<std::size_t> check_collision(std::span<const double> candidate,
                                           const std::vector<std::vector<double>>& registry,
                                           double tau_inter) {
    for (std::size_t i = 0; i < registry.size(); ++i) {
        if (collision_exceeds(cosine_similarity(candidate, registry[i]), tau_inter)) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> CollisionRegistry::first_collision(std::span<const double> candidate,
                                                              double tau_inter) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return check_collision(candidate, vectors_, tau_inter);
}

void CollisionRegistry::add(std::vector<double> vec, std::string label) {
    std::lock_guard<std::mutex> lock(mutex_);
    vectors_.push_back(std::move(vec));
    labels_.push_back(std::move(label));
}

std::size_t CollisionRegistry::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return vectors_.size();
}

const std::string& CollisionRegistry::label(std::size_t index) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return labels_.at(index);
}

}  // namespace probe
