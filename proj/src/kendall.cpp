#include "camoscore/kendall.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "camoscore/error.hpp"

namespace camo {
namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("rankings differ in length");
}

long long tied_pairs(long long run) { return run * (run - 1) / 2; }

// Sorts `v` in place and returns the number of pairs i < j with v[i] > v[j].
long long count_inversions(std::vector<double>& v, std::vector<double>& scratch,
                           std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  long long swaps = count_inversions(v, scratch, lo, mid) +
                    count_inversions(v, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<long long>(mid - i);
      scratch[k++] = v[j++];
    } else {
      scratch[k++] = v[i++];
    }
  }
  while (i < mid) scratch[k++] = v[i++];
  while (j < hi) scratch[k++] = v[j++];
  std::copy(scratch.begin() + lo, scratch.begin() + hi, v.begin() + lo);
  return swaps;
}

std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

}  // namespace

TauCounts tau_counts_brute(std::span<const double> a, std::span<const double> b) {
  check_lengths(a, b);
  TauCounts c;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      ++c.pairs;
      const double da = a[i] - a[j];
      const double db = b[i] - b[j];
      if (da == 0.0) ++c.ties_a;
      if (db == 0.0) ++c.ties_b;
      if (da == 0.0 && db == 0.0) ++c.ties_both;
      if (da * db > 0.0) ++c.concordance;
      if (da * db < 0.0) --c.concordance;
    }
  }
  return c;
}

TauCounts tau_counts_fast(std::span<const double> a, std::span<const double> b) {
  check_lengths(a, b);
  const std::size_t n = a.size();
  TauCounts c;
  c.pairs = static_cast<long long>(n) * (static_cast<long long>(n) - 1) / 2;
  if (n < 2) return c;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a[i] < a[j] || (a[i] == a[j] && b[i] < b[j]);
  });

  long long run_a = 1, run_ab = 1;
  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t p = order[k - 1], q = order[k];
    if (a[p] == a[q]) {
      ++run_a;
      if (b[p] == b[q]) {
        ++run_ab;
      } else {
        c.ties_both += tied_pairs(run_ab);
        run_ab = 1;
      }
    } else {
      c.ties_a += tied_pairs(run_a);
      c.ties_both += tied_pairs(run_ab);
      run_a = run_ab = 1;
    }
  }
  c.ties_a += tied_pairs(run_a);
  c.ties_both += tied_pairs(run_ab);

  std::vector<double> sorted_b(n), scratch(n);
  for (std::size_t k = 0; k < n; ++k) sorted_b[k] = b[order[k]];
  const long long swaps = count_inversions(sorted_b, scratch, 0, n);

  long long run_b = 1;
  for (std::size_t k = 1; k < n; ++k) {
    if (sorted_b[k] == sorted_b[k - 1]) {
      ++run_b;
    } else {
      c.ties_b += tied_pairs(run_b);
      run_b = 1;
    }
  }
  c.ties_b += tied_pairs(run_b);

  c.concordance = c.pairs - c.ties_a - c.ties_b + c.ties_both - 2 * swaps;
  return c;
}

double tau_from_counts(const TauCounts& c, TauVariant variant) {
  if (c.pairs == 0) throw DegenerateInputError("Kendall tau needs at least two items");
  if (variant == TauVariant::A) {
    return static_cast<double>(c.concordance) / static_cast<double>(c.pairs);
  }
  const double left = static_cast<double>(c.pairs - c.ties_a);
  const double right = static_cast<double>(c.pairs - c.ties_b);
  if (left == 0.0 || right == 0.0) {
    throw DegenerateInputError("Kendall tau-b is undefined: one ranking is entirely tied");
  }
  return static_cast<double>(c.concordance) / std::sqrt(left * right);
}

double kendall_tau(std::span<const double> a, std::span<const double> b,
                   TauVariant variant) {
  return tau_from_counts(tau_counts_fast(a, b), variant);
}

double kendall_tau_brute(std::span<const double> a, std::span<const double> b,
                         TauVariant variant) {
  return tau_from_counts(tau_counts_brute(a, b), variant);
}

double kendall_tau(const std::vector<Scored>& a, const std::vector<Scored>& b,
                   TauVariant variant) {
  std::map<std::string, double> lookup;
  for (const auto& s : b) {
    if (!lookup.emplace(s.id, s.value).second) {
      throw ConsistencyError("duplicate id in ranking: " + s.id);
    }
  }
  std::set<std::string> seen;
  std::vector<std::string> only_a;
  std::vector<double> va, vb;
  for (const auto& s : a) {
    if (!seen.insert(s.id).second) throw ConsistencyError("duplicate id in ranking: " + s.id);
    const auto it = lookup.find(s.id);
    if (it == lookup.end()) {
      only_a.push_back(s.id);
      continue;
    }
    va.push_back(s.value);
    vb.push_back(it->second);
  }
  std::vector<std::string> only_b;
  for (const auto& [id, _] : lookup) {
    if (!seen.count(id)) only_b.push_back(id);
  }
  if (!only_a.empty() || !only_b.empty()) {
    std::ostringstream msg;
    msg << "ranking id sets differ;";
    if (!only_a.empty()) {
      msg << " only in first:";
      for (const auto& id : only_a) msg << ' ' << id;
      if (!only_b.empty()) msg << ';';
    }
    if (!only_b.empty()) {
      msg << " only in second:";
      for (const auto& id : only_b) msg << ' ' << id;
    }
    throw ConsistencyError(msg.str());
  }
  return kendall_tau(va, vb, variant);
}

HumanRanking read_human_ranking(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open human ranking " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  const auto comma = line.find(',');
  if (comma == std::string::npos || trim(line.substr(0, comma)) != "id") {
    throw FormatError(path.string() + ": header must be `id,score` or `id,time_seconds`");
  }
  HumanRanking r;
  r.column = trim(line.substr(comma + 1));
  if (r.column != "score" && r.column != "time_seconds") {
    throw FormatError(path.string() + ": unknown ranking column `" + r.column + "`");
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto pos = line.find(',');
    if (pos == std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected id,value");
    }
    Scored s{trim(line.substr(0, pos)), 0.0};
    try {
      std::size_t used = 0;
      const std::string field = trim(line.substr(pos + 1));
      s.value = std::stod(field, &used);
      if (used != field.size() || !std::isfinite(s.value)) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad value");
    }
    r.entries.push_back(std::move(s));
  }
  return r;
}

}  // namespace camo
