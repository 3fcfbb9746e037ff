#include "embkit/pivot.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace embkit::pivot {

AlignmentTable estimate_translations(const corpus::ParallelCorpus& corpus,
                                     double threshold) {
  if (corpus.pairs.empty()) throw std::runtime_error("empty corpus");
  const auto vs = static_cast<std::size_t>(corpus.source_vocab->size());
  const auto vt = static_cast<std::size_t>(corpus.target_vocab->size());

  std::vector<std::int64_t> count_s(vs, 0), count_t(vt, 0);
  // joint counts keyed by s * |V_t| + t; fine at desk scale
  std::unordered_map<std::uint64_t, std::int64_t> joint;
  for (const auto& [src, tgt] : corpus.pairs) {
    const std::set<int> ss(src.begin(), src.end());
    const std::set<int> ts(tgt.begin(), tgt.end());
    for (int s : ss) ++count_s[static_cast<std::size_t>(s)];
    for (int t : ts) ++count_t[static_cast<std::size_t>(t)];
    for (int s : ss) {
      for (int t : ts) {
        ++joint[static_cast<std::uint64_t>(s) * vt + static_cast<std::uint64_t>(t)];
      }
    }
  }

  AlignmentTable table;
  table.by_source.resize(vs);
  table.source_vocab = corpus.source_vocab;
  table.target_vocab = corpus.target_vocab;
  table.threshold = threshold;
  for (const auto& [key, c_st] : joint) {
    const auto s = static_cast<std::size_t>(key / vt);
    const auto t = static_cast<std::size_t>(key % vt);
    const double dice = 2.0 * static_cast<double>(c_st) /
                        static_cast<double>(count_s[s] + count_t[t]);
    if (dice >= threshold) {
      table.by_source[s].push_back({static_cast<int>(t), dice});
    }
  }
  for (auto& entries : table.by_source) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.target < b.target;
    });
  }
  return table;
}

std::optional<int> shares_pivot(const AlignmentTable& table, int s1, int s2) {
  const auto& e1 = table.by_source.at(static_cast<std::size_t>(s1));
  const auto& e2 = table.by_source.at(static_cast<std::size_t>(s2));
  std::optional<int> witness;
  double best = -1.0;
  for (const auto& a : e1) {
    for (const auto& b : e2) {
      if (a.target != b.target) continue;
      const double strength = std::min(a.score, b.score);
      if (strength > best) {
        best = strength;
        witness = a.target;
      }
    }
  }
  return witness;
}

PivotReport pivot_report(const AlignmentTable& table, const embstore::EmbeddingSpace& space,
                         const std::vector<std::pair<std::string, std::string>>& pairs) {
  PivotReport report;
  double sum_shared = 0.0, sum_unshared = 0.0;
  for (const auto& [w1, w2] : pairs) {
    const auto& sv = *table.source_vocab;
    if (!sv.contains(w1) || !sv.contains(w2)) continue;
    const auto cos = embstore::cosine(space, w1, w2);
    if (!cos) continue;
    PivotRow row;
    row.w1 = w1;
    row.w2 = w2;
    row.cosine = *cos;
    if (const auto witness = shares_pivot(table, sv.id(w1), sv.id(w2))) {
      row.shared = true;
      row.witness = table.target_vocab->word(*witness);
      sum_shared += row.cosine;
      ++report.shared_count;
    } else {
      sum_unshared += row.cosine;
      ++report.unshared_count;
    }
    report.rows.push_back(std::move(row));
  }
  if (report.rows.empty()) throw std::runtime_error("pivot report: no resolvable pairs");
  if (report.shared_count) {
    report.mean_cosine_shared = sum_shared / static_cast<double>(report.shared_count);
  }
  if (report.unshared_count) {
    report.mean_cosine_unshared = sum_unshared / static_cast<double>(report.unshared_count);
  }

  // point-biserial = Pearson of (shared indicator, cosine); undefined when
  // either side is constant
  const auto n = static_cast<double>(report.rows.size());
  if (report.shared_count > 0 && report.unshared_count > 0) {
    double mean_cos = 0.0;
    for (const auto& r : report.rows) mean_cos += r.cosine;
    mean_cos /= n;
    double var_cos = 0.0;
    for (const auto& r : report.rows) {
      var_cos += (r.cosine - mean_cos) * (r.cosine - mean_cos);
    }
    if (var_cos > 0.0) {
      const double p = static_cast<double>(report.shared_count) / n;
      const double sd_cos = std::sqrt(var_cos / n);
      report.point_biserial = (report.mean_cosine_shared - report.mean_cosine_unshared) *
                              std::sqrt(p * (1.0 - p)) / sd_cos;
    }
  }
  return report;
}

void write_csv(const PivotReport& report, std::ostream& out) {
  out << "word1,word2,shared_pivot,witness,cosine\n";
  char buf[32];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%.6f", r.cosine);
    out << r.w1 << ',' << r.w2 << ',' << (r.shared ? 1 : 0) << ',' << r.witness << ','
        << buf << '\n';
  }
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  out << "# shared_pairs=" << report.shared_count << '\n';
  out << "# unshared_pairs=" << report.unshared_count << '\n';
  out << "# mean_cosine_shared=" << (report.shared_count ? fmt(report.mean_cosine_shared) : "undefined")
      << '\n';
  out << "# mean_cosine_unshared="
      << (report.unshared_count ? fmt(report.mean_cosine_unshared) : "undefined") << '\n';
  out << "# point_biserial="
      << (report.point_biserial ? fmt(*report.point_biserial) : "undefined") << '\n';
}

}  // namespace embkit::pivot
