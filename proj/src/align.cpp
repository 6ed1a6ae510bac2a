#include "expanse/align.hpp"

#include <algorithm>
#include <limits>

#include "expanse/error.hpp"

namespace expanse::align {

std::size_t LocationLabels::count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
}

bool check_fidelity(const TokenSeq& x, const TokenSeq& y) {
  std::size_t i = 0;
  for (std::size_t j = 0; j < y.size() && i < x.size(); ++j) {
    if (y[j] == x[i]) ++i;
  }
  return i == x.size();
}

std::vector<Span> gaps_of(const std::vector<std::size_t>& map, std::size_t y_size) {
  std::vector<Span> out;
  std::size_t next = 0;
  for (const auto m : map) {
    if (m > next) out.push_back({next, m});
    next = m + 1;
  }
  if (next < y_size) out.push_back({next, y_size});
  return out;
}

// cost(i, j): fewest gaps to embed x[i..] into y[j..] when y[j-1] was the last
// match (or j == 0 at the start). Matching x[i] at k > j opens one gap.
//   take(i, j) = cost(i+1, j+1) if y[j] == x[i]     (match right here)
//   best(i, j) = min_{k >= j} take(i, k)            (leftmost argmin)
//   cost(i, j) = min(take(i, j), 1 + best(i, j+1))
//   cost(|x|, j) = [j < |y|]
Alignment align_min_gaps(const TokenSeq& x, const TokenSeq& y) {
  if (!check_fidelity(x, y)) throw ValidationError("not a subsequence");
  const std::size_t n = x.size();
  const std::size_t m = y.size();
  constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max() / 4;
  const std::size_t width = m + 2;

  std::vector<std::size_t> cost((n + 1) * width, kInf);
  std::vector<std::size_t> best_val((n + 1) * width, kInf);
  std::vector<std::size_t> best_at((n + 1) * width, m);
  auto at = [width](std::size_t i, std::size_t j) { return i * width + j; };

  for (std::size_t j = 0; j <= m; ++j) cost[at(n, j)] = j < m ? 1 : 0;

  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t jj = m + 1; jj-- > 0;) {
      const std::size_t take = (jj < m && y[jj] == x[ii]) ? cost[at(ii + 1, jj + 1)] : kInf;
      std::size_t bv = best_val[at(ii, jj + 1)];
      std::size_t ba = best_at[at(ii, jj + 1)];
      if (take <= bv) {
        bv = take;
        ba = jj;
      }
      best_val[at(ii, jj)] = bv;
      best_at[at(ii, jj)] = ba;
      const std::size_t skip = best_val[at(ii, jj + 1)] >= kInf ? kInf : best_val[at(ii, jj + 1)] + 1;
      cost[at(ii, jj)] = std::min(take, skip);
    }
  }

  Alignment out;
  out.map.reserve(n);
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t take = (j < m && y[j] == x[i]) ? cost[at(i + 1, j + 1)] : kInf;
    std::size_t k = j;
    if (take != cost[at(i, j)]) k = best_at[at(i, j + 1)];
    out.map.push_back(k);
    j = k + 1;
  }
  out.slots = gaps_of(out.map, m);
  return out;
}

ExpansionPair pair_from_alignment(const TokenSeq& x, const TokenSeq& y, std::string id, Language language,
                                  Provenance provenance) {
  auto alignment = align_min_gaps(x, y);
  return make_pair(std::move(id), language, x, y, std::move(alignment.slots), provenance);
}

ExpansionPair canonicalize(ExpansionPair pair) {
  if (pair.spans_populated()) return pair;
  pair.modifier_spans = align_min_gaps(pair.source, pair.expansion).slots;
  validate(pair);
  return pair;
}

namespace {

// Y index of every X token implied by the pair's spans.
std::vector<std::size_t> source_positions(const ExpansionPair& pair) {
  std::vector<std::size_t> out;
  std::size_t s = 0;
  const auto& spans = pair.modifier_spans;
  for (std::size_t j = 0; j < pair.expansion.size(); ++j) {
    while (s < spans.size() && spans[s].end <= j) ++s;
    if (s < spans.size() && spans[s].start <= j) continue;
    out.push_back(j);
  }
  return out;
}

// For each of the |X|+1 insertion points, the modifier span ending there.
std::vector<const Span*> spans_by_location(const ExpansionPair& pair) {
  if (!pair.spans_populated()) throw ValidationError("modifier spans not populated; align the pair first");
  const auto positions = source_positions(pair);
  std::vector<const Span*> out(positions.size() + 1, nullptr);
  for (const auto& span : pair.modifier_spans) {
    const auto it = std::lower_bound(positions.begin(), positions.end(), span.end);
    out[static_cast<std::size_t>(it - positions.begin())] = &span;
  }
  return out;
}

TokenSeq tokens_of(const ExpansionPair& pair, const Span& span) {
  return {pair.expansion.begin() + static_cast<std::ptrdiff_t>(span.start),
          pair.expansion.begin() + static_cast<std::ptrdiff_t>(span.end)};
}

}  // namespace

LocationLabels location_labels(const ExpansionPair& pair) {
  const auto by_loc = spans_by_location(pair);
  LocationLabels out;
  out.labels.reserve(by_loc.size());
  for (const auto* s : by_loc) out.labels.push_back(s != nullptr);
  return out;
}

InfillTemplatePair joint_format(const ExpansionPair& pair, std::string_view null_token) {
  const auto by_loc = spans_by_location(pair);
  std::vector<LabeledRun> runs;
  for (std::size_t i = 0; i < by_loc.size(); ++i) {
    runs.push_back({by_loc[i] ? tokens_of(pair, *by_loc[i]) : TokenSeq{std::string(null_token)}, false});
    if (i < pair.source.size()) runs.push_back({{pair.source[i]}, true});
  }
  return make_dual(runs);
}

InfillTemplatePair pipelined_format(const ExpansionPair& pair) {
  const auto by_loc = spans_by_location(pair);
  std::vector<LabeledRun> runs;
  for (std::size_t i = 0; i < by_loc.size(); ++i) {
    if (by_loc[i]) runs.push_back({tokens_of(pair, *by_loc[i]), false});
    if (i < pair.source.size()) runs.push_back({{pair.source[i]}, true});
  }
  return make_dual(runs);
}

}  // namespace expanse::align
