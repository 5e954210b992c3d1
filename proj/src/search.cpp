#include "graf/search.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "graf/parallel.hpp"
#include "graf/rng.hpp"

namespace graf {

namespace {

class TraceBuilder {
 public:
  TraceBuilder(std::span<const double> target, std::span<const std::string> ids)
      : target_(target), ids_(ids), evaluated_(target.size(), 0) {}

  void evaluate(std::size_t i, int iteration) {
    if (evaluated_[i]) throw Error("architecture queried twice");
    evaluated_[i] = 1;
    order_.push_back(i);
    const double v = target_[i];
    if (trace_.entries.empty() || v > trace_.best_value) {
      trace_.best_value = v;
      trace_.best_index = i;
    }
    trace_.entries.push_back(
        {iteration, i, i < ids_.size() ? ids_[i] : std::to_string(i), v, trace_.best_value});
  }

  bool evaluated(std::size_t i) const { return evaluated_[i]; }
  const std::vector<std::size_t>& order() const { return order_; }
  std::vector<std::size_t> pool() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < evaluated_.size(); ++i)
      if (!evaluated_[i]) out.push_back(i);
    return out;
  }
  SearchTrace finish() { return std::move(trace_); }
  SearchTrace& trace() { return trace_; }

 private:
  std::span<const double> target_;
  std::span<const std::string> ids_;
  std::vector<char> evaluated_;
  std::vector<std::size_t> order_;
  SearchTrace trace_;
};

}  // namespace

void SearchConfig::check() const {
  if (n_iterations < 0) throw Error("search: n_iterations must be >= 0");
  if (candidates_per_iter < 1) throw Error("search: candidates_per_iter must be >= 1");
  if (evals_per_iter < 1 || evals_per_iter > candidates_per_iter)
    throw Error("search: evals_per_iter must be in [1, candidates_per_iter]");
  if (ensemble_size < 1) throw Error("search: ensemble_size must be >= 1");
  if (initial_random_evals < 1) throw Error("search: initial_random_evals must be >= 1");
  forest.check();
}

void SearchTrace::write_csv(std::ostream& out) const {
  out << "iteration,queries_used,arch_id,value,best_so_far\n";
  out.precision(17);
  for (std::size_t q = 0; q < entries.size(); ++q) {
    const auto& e = entries[q];
    out << e.iteration << ',' << q + 1 << ',' << e.arch_id << ',' << e.value << ',' << e.best_so_far
        << '\n';
  }
}

SearchTrace run_search(const DenseMatrix& features, std::span<const double> target,
                       std::span<const std::string> ids, const SearchConfig& cfg, Exec exec) {
  cfg.check();
  const std::size_t n = features.rows();
  if (target.size() != n) throw Error("search: target length does not match feature rows");
  if (static_cast<std::size_t>(cfg.initial_random_evals) > n)
    throw Error("search: dataset smaller than the initial random sample");

  TraceBuilder tb(target, ids);
  Rng init_rng(derive_seed(cfg.seed, SeedStream::kInitial));
  for (std::size_t i : init_rng.sample_without_replacement(n, cfg.initial_random_evals))
    tb.evaluate(i, 0);

  for (int it = 1; it <= cfg.n_iterations; ++it) {
    const auto pool = tb.pool();
    if (pool.empty()) {
      tb.trace().exhausted = true;
      break;
    }

    // Refit the ensemble on everything evaluated so far.
    const auto& seen = tb.order();
    std::vector<ForestModel> members(cfg.ensemble_size);
    parallel_for(members.size(), exec, [&](std::size_t m) {
      const std::uint64_t member_seed =
          derive_seed(cfg.seed, SeedStream::kMember, static_cast<std::uint64_t>(it) * 1000 + m);
      std::vector<std::size_t> rows(seen.begin(), seen.end());
      if (cfg.member_bootstrap) {
        Rng rng(derive_seed(member_seed, SeedStream::kBootstrap));
        for (auto& r : rows) r = seen[rng.below(seen.size())];
      }
      DenseMatrix x = features.select_rows(rows);
      DenseMatrix y(rows.size(), 1);
      for (std::size_t i = 0; i < rows.size(); ++i) y(i, 0) = target[rows[i]];
      ForestConfig fc = cfg.forest;
      fc.seed = derive_seed(member_seed, SeedStream::kModel);
      members[m] = fit_forest(x, y, fc, 0, Exec::kSerial);
    });

    Rng cand_rng(derive_seed(cfg.seed, SeedStream::kCandidates, static_cast<std::uint64_t>(it)));
    const std::size_t n_cand = std::min<std::size_t>(cfg.candidates_per_iter, pool.size());
    std::vector<std::size_t> cands;
    for (std::size_t k : cand_rng.sample_without_replacement(pool.size(), n_cand))
      cands.push_back(pool[k]);
    const DenseMatrix cx = features.select_rows(cands);

    // Independent Thompson sampling: each candidate is scored by one member
    // drawn uniformly at random.
    Rng ts_rng(derive_seed(cfg.seed, SeedStream::kThompson, static_cast<std::uint64_t>(it)));
    std::vector<std::size_t> pick(n_cand);
    for (auto& p : pick) p = ts_rng.below(members.size());
    std::vector<double> score(n_cand);
    for (std::size_t c = 0; c < n_cand; ++c) score[c] = members[pick[c]].predict_row(cx.row(c));

    std::vector<std::size_t> rank(n_cand);
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    const std::size_t n_eval = std::min<std::size_t>(cfg.evals_per_iter, n_cand);
    for (std::size_t k = 0; k < n_eval; ++k) tb.evaluate(cands[rank[k]], it);
  }
  return tb.finish();
}

SearchTrace run_random_search(std::span<const double> target, std::span<const std::string> ids,
                              std::size_t budget, std::uint64_t seed) {
  if (budget > target.size()) throw Error("random search budget exceeds the dataset size");
  if (budget == 0) throw Error("random search budget must be >= 1");
  TraceBuilder tb(target, ids);
  Rng rng(derive_seed(seed, SeedStream::kInitial));
  for (std::size_t i : rng.sample_without_replacement(target.size(), budget)) tb.evaluate(i, 0);
  return tb.finish();
}

double percentile_of(std::span<const double> values, double v) {
  if (values.empty()) return 0.0;
  const auto le = std::count_if(values.begin(), values.end(), [v](double x) { return x <= v; });
  return static_cast<double>(le) / static_cast<double>(values.size());
}

}  // namespace graf
