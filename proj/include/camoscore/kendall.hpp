#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace camo {

enum class TauVariant { B, A };

/// Pair counts behind Kendall's tau. `ties_a` and `ties_b` include pairs tied
/// in both rankings.
struct TauCounts {
  long long pairs = 0;
  long long ties_a = 0;
  long long ties_b = 0;
  long long ties_both = 0;
  long long concordance = 0;  // concordant minus discordant
};

TauCounts tau_counts_brute(std::span<const double> a, std::span<const double> b);
/// Knight's O(n log n) algorithm: sort by (a, b), count inversions of b by
/// merge sort.
TauCounts tau_counts_fast(std::span<const double> a, std::span<const double> b);

/// tau-b = (P - Q) / sqrt((n0 - n1)(n0 - n2)); tau-a = (P - Q) / n0.
/// Throws DegenerateInputError when undefined (fewer than two items, or every
/// pair tied in one ranking for tau-b).
double tau_from_counts(const TauCounts& c, TauVariant variant = TauVariant::B);

double kendall_tau(std::span<const double> a, std::span<const double> b,
                   TauVariant variant = TauVariant::B);
double kendall_tau_brute(std::span<const double> a, std::span<const double> b,
                         TauVariant variant = TauVariant::B);

/// An id with a value where higher means better camouflage.
struct Scored {
  std::string id;
  double value = 0.0;
};

/// Tau between two id-keyed rankings. Throws ConsistencyError listing the
/// symmetric difference when the id sets differ.
double kendall_tau(const std::vector<Scored>& a, const std::vector<Scored>& b,
                   TauVariant variant = TauVariant::B);

/// Human judgement for a set of examples, normalized so that a higher value
/// means better camouflage.
struct HumanRanking {
  std::vector<Scored> entries;
  /// "score" or "time_seconds", as declared by the file header.
  std::string column;
};

/// CSV with header `id,score` (higher = better camouflage) or
/// `id,time_seconds` (longer search = better camouflage).
HumanRanking read_human_ranking(const std::filesystem::path& path);

}  // namespace camo
