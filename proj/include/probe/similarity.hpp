#pragma once

#include <cstddef>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probe/bias.hpp"

namespace probe {

/// Acceptance band [lower, upper) for the intra-dilemma cosine check.
struct SimilarityBand {
    double lower = 0.0;
    double upper = 1.0;
};

double cosine_similarity(std::span<const double> u, std::span<const double> v);

std::size_t levenshtein_distance(std::string_view a, std::string_view b);
double normalized_levenshtein(std::string_view a, std::string_view b);

SimilarityBand intra_band(Bias bias);
bool check_intra_band(double sim, Bias bias);

inline constexpr double kRoundTripTau = 0.65;
bool check_round_trip(double sim, double tau = kRoundTripTau);

inline constexpr double kCollisionTau = 0.9;
/// Collision rule on a single similarity value: strictly above the threshold.
bool collision_exceeds(double sim, double tau_inter = kCollisionTau);

/// Index of the first registry vector whose cosine with the candidate exceeds
/// tau_inter; nullopt when the candidate is collision-free.
std::optional<std::size_t> check_collision(std::span<const double> candidate,
                                           const std::vector<std::vector<double>>& registry,
                                           double tau_inter = kCollisionTau);

/// Embeddings of every accepted dilemma so far, across all biases.
/// Reads are lock-free on a stable snapshot index; appends are serialized.
class CollisionRegistry {
public:
    std::optional<std::size_t> first_collision(std::span<const double> candidate,
                                               double tau_inter) const;
    void add(std::vector<double> vec, std::string label);
    std::size_t size() const;
    const std::string& label(std::size_t index) const;

private:
    mutable std::mutex mutex_;
    std::vector<std::vector<double>> vectors_;
    std::vector<std::string> labels_;
};

}  // namespace probe
