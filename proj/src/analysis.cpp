#include "geninv/analysis.hpp"

#include "geninv/rng.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace geninv {

namespace {

constexpr double kRankTol = 1e-10;

double count_subsets(Index n, Index k) {
  double c = 1.0;
  for (Index i = 0; i < k; ++i) c = c * double(n - i) / double(i + 1);
  return c;
}

/// Visit every k-subset of [0, n) in lexicographic order; stop when fn
/// returns false.
template <class F>
void for_each_subset(Index n, Index k, F&& fn) {
  if (k > n || k <= 0) return;
  IndexSet idx(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    if (!fn(static_cast<const IndexSet&>(idx))) return;
    Index i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < k; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

Eigen::VectorXd singular_values(const Mat& m) {
  return Eigen::JacobiSVD<Mat>(m).singularValues();
}

double coherence_allow_zero(const Mat& w) {
  // zero column => coherence pinned to 1 (see header)
  Vec norms(w.cols());
  for (Index j = 0; j < w.cols(); ++j) {
    norms[j] = w.col(j).norm();
    if (norms[j] == 0.0) return 1.0;
  }
  double mu = 0.0;
  for (Index i = 0; i < w.cols(); ++i)
    for (Index j = i + 1; j < w.cols(); ++j)
      mu = std::max(mu, std::abs(w.col(i).dot(w.col(j))) / (norms[i] * norms[j]));
  return std::min(mu, 1.0);
}

void check_s_range(const Mat& w, Index s) {
  if (s < 1 || s > w.rows())
    throw std::invalid_argument("row subset size s=" + std::to_string(s) +
                                " out of range [1, " + std::to_string(w.rows()) + "]");
}

void refuse(const char* what, double count) {
  std::ostringstream os;
  os << what << ": exact enumeration needs " << count << " subset tests (cap "
     << SubsetBudget::kExactCap << "); use sampled or assumed_generic mode";
  throw std::runtime_error(os.str());
}

/// Smallest k with a dependent k-column subset, searching k = 1..max_k-1 only
/// (cutoff lets subspark prune); returns nullopt when no dependent subset of
/// size < max_k exists.
std::optional<SparkEvidence> spark_below(const Mat& w, Index max_k) {
  const Index cols = w.cols();
  const Index kmax = std::min({cols, w.rows(), max_k - 1});
  for (Index k = 1; k <= kmax; ++k) {
    std::optional<SparkEvidence> found;
    for_each_subset(cols, k, [&](const IndexSet& sub) {
      if (columns_dependent(cols_of(w, sub))) {
        found = SparkEvidence{k, EvidenceMode::exact, sub, std::nullopt};
        return false;
      }
      return true;
    });
    if (found) return found;
  }
  return std::nullopt;
}

double spark_enumeration_cost(const Mat& w) {
  double total = 0.0;
  for (Index k = 1; k <= std::min(w.cols(), w.rows()); ++k) {
    total += count_subsets(w.cols(), k);
    if (total > 1e18) break;
  }
  return total;
}

}  // namespace

std::string to_string(EvidenceMode m) {
  switch (m) {
    case EvidenceMode::exact: return "exact";
    case EvidenceMode::assumed_generic: return "assumed_generic";
    case EvidenceMode::sampled: return "sampled";
  }
  return "exact";
}

std::string to_string(CertVerdict v) {
  switch (v) {
    case CertVerdict::unique: return "unique";
    case CertVerdict::not_certified: return "not_certified";
    case CertVerdict::violated: return "violated";
  }
  return "not_certified";
}

Index numerical_rank(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  const Eigen::VectorXd sv = singular_values(m);
  if (sv[0] == 0.0) return 0;
  const double tol = kRankTol * sv[0];
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv[i] > tol) ++r;
  return r;
}

bool columns_dependent(const Mat& m) {
  if (m.cols() > m.rows()) return true;
  const Eigen::VectorXd sv = singular_values(m);
  return sv[0] == 0.0 || sv[sv.size() - 1] <= kRankTol * sv[0];
}

double mutual_coherence(const Mat& w) {
  if (w.cols() < 2) throw std::invalid_argument("mutual_coherence: need at least 2 columns");
  for (Index j = 0; j < w.cols(); ++j)
    if (w.col(j).isZero(0.0))
      throw std::invalid_argument("mutual_coherence: zero column " + std::to_string(j));
  return coherence_allow_zero(w);
}

CoherenceBound mu_s(const Mat& w, Index s, const SubsetBudget& budget) {
  check_s_range(w, s);
  if (w.cols() < 2) throw std::invalid_argument("mu_s: need at least 2 columns");
  if (budget.mode == SubsetBudget::Mode::exact) {
    if (count_subsets(w.rows(), s) > double(SubsetBudget::kExactCap))
      refuse("mu_s", count_subsets(w.rows(), s));
    CoherenceBound best{-1.0, EvidenceMode::exact, std::nullopt};
    for_each_subset(w.rows(), s, [&](const IndexSet& rows) {
      const double mu = coherence_allow_zero(rows_of(w, rows));
      if (mu > best.value) {
        best.value = mu;
        best.row_subset = rows;
      }
      return true;
    });
    return best;
  }
  // sampled: lower bound on the max
  Rng rng(budget.seed, 0x6D75735Full);
  CoherenceBound best{-1.0, EvidenceMode::sampled, std::nullopt};
  for (std::uint64_t t = 0; t < budget.samples; ++t) {
    const IndexSet rows = rng.sample_without_replacement(w.rows(), s);
    const double mu = coherence_allow_zero(rows_of(w, rows));
    if (mu > best.value) {
      best.value = mu;
      best.row_subset = rows;
    }
  }
  return best;
}

SparkEvidence spark(const Mat& w, const SubsetBudget& budget) {
  const Index rows = w.rows(), cols = w.cols();
  if (cols == 0) throw std::invalid_argument("spark: empty matrix");
  if (budget.mode == SubsetBudget::Mode::assumed_generic)
    return {std::min(rows, cols) + 1, EvidenceMode::assumed_generic, std::nullopt, std::nullopt};
  if (budget.mode == SubsetBudget::Mode::sampled) {
    // Upper bound: smallest dependent subset among sampled subsets per size.
    Rng rng(budget.seed, 0x7370726Bull);
    for (Index k = 1; k <= std::min(rows, cols); ++k) {
      const double total = count_subsets(cols, k);
      const auto tries = std::min<std::uint64_t>(budget.samples, std::uint64_t(total));
      for (std::uint64_t t = 0; t < tries; ++t) {
        const IndexSet sub = rng.sample_without_replacement(cols, k);
        if (columns_dependent(cols_of(w, sub)))
          return {k, EvidenceMode::sampled, sub, std::nullopt};
      }
    }
    if (cols > rows)
      return {rows + 1, EvidenceMode::sampled, std::nullopt, std::nullopt};
    return {cols + 1, EvidenceMode::sampled, std::nullopt, std::nullopt};
  }

  if (spark_enumeration_cost(w) > double(SubsetBudget::kExactCap))
    refuse("spark", spark_enumeration_cost(w));
  if (auto found = spark_below(w, std::min(rows, cols) + 1)) return *found;
  if (cols > rows) {
    // any rows+1 columns are dependent; all smaller subsets were independent
    IndexSet witness = all_indices(rows + 1);
    return {rows + 1, EvidenceMode::exact, witness, std::nullopt};
  }
  return {cols + 1, EvidenceMode::exact, std::nullopt, std::nullopt};  // FULL
}

SparkEvidence subspark(const Mat& w, Index s, const SubsetBudget& budget) {
  check_s_range(w, s);
  const Index cols = w.cols();
  if (budget.mode == SubsetBudget::Mode::assumed_generic)
    return {std::min(s, cols) + 1, EvidenceMode::assumed_generic, std::nullopt, std::nullopt};

  const bool sampled = budget.mode == SubsetBudget::Mode::sampled;
  if (!sampled) {
    const Mat probe = Mat::Zero(s, cols);
    const double cost = count_subsets(w.rows(), s) * spark_enumeration_cost(probe);
    if (cost > double(SubsetBudget::kExactCap)) refuse("subspark", cost);
  }

  SparkEvidence best;
  best.value = std::min(s, cols) + 1 + 1;  // above any attainable value
  best.mode = sampled ? EvidenceMode::sampled : EvidenceMode::exact;
  Rng rng(budget.seed, 0x73756273ull);

  auto consider = [&](const IndexSet& rows) {
    const Mat sub = rows_of(w, rows);
    // only need to know whether this subset beats the current best
    if (auto found = spark_below(sub, best.value)) {
      best.value = found->value;
      best.witness = found->witness;
      best.row_subset = rows;
    } else {
      const Index full = std::min(s, cols) + 1;
      if (full < best.value) {
        best.value = full;
        best.witness = (cols > s) ? std::optional<IndexSet>(all_indices(s + 1)) : std::nullopt;
        best.row_subset = rows;
      }
    }
    return best.value > 1;  // spark 1 cannot be beaten
  };

  if (sampled) {
    for (std::uint64_t t = 0; t < budget.samples; ++t)
      if (!consider(rng.sample_without_replacement(w.rows(), s))) break;
  } else {
    for_each_subset(w.rows(), s, consider);
  }
  return best;
}

SubrankRecord subrank(const Mat& w, Index s, const SubsetBudget& budget) {
  check_s_range(w, s);
  if (budget.mode == SubsetBudget::Mode::assumed_generic)
    return {std::min(s, w.cols()), EvidenceMode::assumed_generic, std::nullopt};

  const bool sampled = budget.mode == SubsetBudget::Mode::sampled;
  if (!sampled && count_subsets(w.rows(), s) > double(SubsetBudget::kExactCap))
    refuse("subrank", count_subsets(w.rows(), s));

  SubrankRecord best{std::min(s, w.cols()) + 1, sampled ? EvidenceMode::sampled : EvidenceMode::exact,
                     std::nullopt};
  auto consider = [&](const IndexSet& rows) {
    const Index r = numerical_rank(rows_of(w, rows));
    if (r < best.value) {
      best.value = r;
      best.row_subset = rows;
    }
    return best.value > 0;
  };
  if (sampled) {
    Rng rng(budget.seed, 0x73726E6Bull);
    for (std::uint64_t t = 0; t < budget.samples; ++t)
      if (!consider(rng.sample_without_replacement(w.rows(), s))) break;
  } else {
    for_each_subset(w.rows(), s, consider);
  }
  return best;
}

namespace {

LayerCondition degenerate_condition(std::string name, Index s, double threshold,
                                    const char* note) {
  LayerCondition c;
  c.name = std::move(name);
  c.sparsity = s;
  c.threshold = threshold;
  c.met = false;
  c.violated = true;
  c.detail = note;
  return c;
}

}  // namespace

UniquenessCertificate certify_uniqueness(const GeneratorNetwork& net, const ForwardTrace& trace,
                                         const CertifyPolicy& policy) {
  const Index depth = net.depth();
  if (static_cast<Index>(trace.supports.size()) != depth)
    throw std::invalid_argument("certify_uniqueness: trace depth does not match network");

  UniquenessCertificate cert;
  const bool generic = policy.mode == CertifyPolicy::Mode::generic;
  SubsetBudget budget;
  budget.mode = policy.mode == CertifyPolicy::Mode::sampled ? SubsetBudget::Mode::sampled
                                                            : SubsetBudget::Mode::exact;
  budget.samples = policy.samples;
  budget.seed = policy.seed;
  if (generic) cert.assumption_flags.push_back("assumed_generic");
  if (policy.mode == CertifyPolicy::Mode::sampled) cert.assumption_flags.push_back("sampled_bound");

  bool any_degenerate = false;
  for (Index i = 0; i < depth; ++i)
    if (trace.supports[static_cast<std::size_t>(i)].empty()) any_degenerate = true;
  if (any_degenerate) cert.assumption_flags.push_back("degenerate_zero_support");

  const auto card = [&](Index layer) {  // layer in 1..L
    return static_cast<Index>(trace.supports[static_cast<std::size_t>(layer - 1)].size());
  };
  const Index n0 = net.latent_dim();
  const Index n_out = net.output_dim();
  const Index s_last = card(depth);

  auto run_spark = [&](const Mat& w, Index s_next, bool last) -> SparkEvidence {
    if (generic) {
      const Index value = last ? n_out + 1 : s_next + 1;
      return {value, EvidenceMode::assumed_generic, std::nullopt, std::nullopt};
    }
    try {
      return last ? spark(w, budget) : subspark(w, s_next, budget);
    } catch (const std::runtime_error&) {
      if (!policy.allow_sampled_fallback) throw;
      SubsetBudget fb = budget;
      fb.mode = SubsetBudget::Mode::sampled;
      cert.assumption_flags.push_back("sampled_bound");
      return last ? spark(w, fb) : subspark(w, s_next, fb);
    }
  };

  // (i) last layer: s_L < spark(W_L) / 2
  {
    const Mat& w_last = net.weights().back();
    const SparkEvidence ev = run_spark(w_last, 0, true);
    LayerCondition c;
    c.name = "last_layer";
    c.sparsity = s_last;
    c.threshold = double(ev.value) / 2.0;
    const bool holds = double(s_last) < c.threshold;
    if (ev.mode == EvidenceMode::sampled) {
      c.met = false;
      c.violated = !holds;  // upper bound on spark: failing it is conclusive
    } else {
      c.met = holds;
      c.violated = !holds;
    }
    c.detail = "spark(" + to_string(ev.mode) + ")=" + std::to_string(ev.value);
    c.spark_evidence = ev;
    cert.conditions.push_back(std::move(c));
  }

  // (ii) midlayers: s_i < subspark(W_i, s_{i+1}) / 2
  for (Index i = depth - 1; i >= 1; --i) {
    const Index s_i = card(i);
    const Index s_next = card(i + 1);
    const std::string name = "midlayer_" + std::to_string(i);
    if (s_next == 0) {
      cert.conditions.push_back(
          degenerate_condition(name, s_i, 0.5, "zero support above; layer unrecoverable"));
      continue;
    }
    const SparkEvidence ev = run_spark(net.weight(static_cast<std::size_t>(i)), s_next, false);
    LayerCondition c;
    c.name = name;
    c.sparsity = s_i;
    c.threshold = double(ev.value) / 2.0;
    const bool holds = double(s_i) < c.threshold;
    if (ev.mode == EvidenceMode::sampled) {
      c.met = false;
      c.violated = !holds;
    } else {
      c.met = holds;
      c.violated = !holds;
    }
    c.detail = "subspark(" + to_string(ev.mode) + ")=" + std::to_string(ev.value);
    c.spark_evidence = ev;
    cert.conditions.push_back(std::move(c));
  }

  // (iii) latent: subrank(W_0, s_1) = n_0 <= s_1
  {
    const Index s1 = card(1);
    LayerCondition c;
    c.name = "latent";
    c.sparsity = s1;
    c.threshold = double(n0);
    if (s1 == 0) {
      cert.conditions.push_back(
          degenerate_condition("latent", 0, double(n0), "zero first-layer support"));
    } else {
      SubrankRecord rec;
      if (generic) {
        rec = {std::min(s1, n0), EvidenceMode::assumed_generic, std::nullopt};
      } else if (policy.mode == CertifyPolicy::Mode::sampled) {
        SubsetBudget sb = budget;
        sb.mode = SubsetBudget::Mode::sampled;
        rec = subrank(net.weight(0), s1, sb);
      } else {
        try {
          rec = subrank(net.weight(0), s1, budget);
        } catch (const std::runtime_error&) {
          if (!policy.allow_sampled_fallback) throw;
          SubsetBudget fb = budget;
          fb.mode = SubsetBudget::Mode::sampled;
          cert.assumption_flags.push_back("sampled_bound");
          rec = subrank(net.weight(0), s1, fb);
        }
      }
      const bool size_ok = s1 >= n0;
      const bool rank_full = rec.value == n0;
      if (rec.mode == EvidenceMode::sampled) {
        c.met = false;
        c.violated = !size_ok || rec.value < n0;  // sampled subrank only refutes
      } else {
        c.met = size_ok && rank_full;
        c.violated = !c.met;
      }
      c.detail = "subrank(" + to_string(rec.mode) + ")=" + std::to_string(rec.value) +
                 ", s_1=" + std::to_string(s1) + ", n_0=" + std::to_string(n0);
      c.rank_evidence = rec;
      cert.conditions.push_back(std::move(c));
    }
  }

  // Spark conditions are sufficient only; their failure cannot prove
  // non-uniqueness. Failure of the latent rank condition (or a degenerate
  // zero support) genuinely breaks uniqueness.
  bool all_met = true, latent_violated = any_degenerate;
  for (const auto& c : cert.conditions) {
    all_met = all_met && c.met;
    if (c.name == "latent" && c.violated) latent_violated = true;
  }
  cert.verdict = latent_violated ? CertVerdict::violated
                                 : (all_met ? CertVerdict::unique : CertVerdict::not_certified);
  std::sort(cert.assumption_flags.begin(), cert.assumption_flags.end());
  cert.assumption_flags.erase(
      std::unique(cert.assumption_flags.begin(), cert.assumption_flags.end()),
      cert.assumption_flags.end());
  return cert;
}

std::string render_certificate(const UniquenessCertificate& cert) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-14s %10s %12s %6s  %s\n", "condition", "cardinality",
                "threshold", "met", "evidence");
  os << line;
  for (const auto& c : cert.conditions) {
    std::snprintf(line, sizeof(line), "%-14s %10lld %12.2f %6s  %s\n", c.name.c_str(),
                  static_cast<long long>(c.sparsity), c.threshold,
                  c.met ? "yes" : (c.violated ? "no" : "?"), c.detail.c_str());
    os << line;
  }
  os << "verdict: " << to_string(cert.verdict);
  if (!cert.assumption_flags.empty()) {
    os << "  [";
    for (std::size_t i = 0; i < cert.assumption_flags.size(); ++i)
      os << (i ? ", " : "") << cert.assumption_flags[i];
    os << "]";
  }
  os << "\n";
  return os.str();
}

}  // namespace geninv
