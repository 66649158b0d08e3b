#pragma once

#include "geninv/network.hpp"
#include "geninv/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace geninv {

// Controls the exponential subset enumerations. Exact mode refuses when more
// than kExactCap subsets would have to be tested; callers then pick `sampled`
// (a flagged bound) or `assumed_generic` (closed forms that hold with
// probability 1 for continuous random matrices).
struct SubsetBudget {
  enum class Mode { exact, sampled, assumed_generic };
  Mode mode = Mode::exact;
  std::uint64_t samples = 2000;
  std::uint64_t seed = 0;
  static constexpr std::uint64_t kExactCap = 2'000'000;
};

// How a reported number was obtained. `sampled` values bound the true
// quantity: from above for subspark/subrank (min over a sample of subsets),
// from below for mu_s (max over a sample).
enum class EvidenceMode { exact, assumed_generic, sampled };

std::string to_string(EvidenceMode m);

struct SparkEvidence {
  Index value = 0;  // smallest dependent column count; cols+1 = FULL sentinel
  EvidenceMode mode = EvidenceMode::exact;
  std::optional<IndexSet> witness;     // minimal dependent column set, when found
  std::optional<IndexSet> row_subset;  // minimizing row subset (subspark only)
};

struct SubrankRecord {
  Index value = 0;
  EvidenceMode mode = EvidenceMode::exact;
  std::optional<IndexSet> row_subset;
};

struct CoherenceBound {
  double value = 0.0;
  EvidenceMode mode = EvidenceMode::exact;
  std::optional<IndexSet> row_subset;
};

/// Largest normalized inner product between distinct columns, in [0, 1].
/// Rejects matrices with fewer than two columns or any zero column.
double mutual_coherence(const Mat& w);

/// Worst-case coherence over all row subsets of size s. A row-restricted
/// submatrix that contains a zero column counts as coherence 1 (that
/// coordinate direction is lost entirely).
CoherenceBound mu_s(const Mat& w, Index s, const SubsetBudget& budget = {});

SparkEvidence spark(const Mat& w, const SubsetBudget& budget = {});

/// Minimal spark over all row subsets of size s.
SparkEvidence subspark(const Mat& w, Index s, const SubsetBudget& budget = {});

/// Minimal rank over all row subsets of size s.
SubrankRecord subrank(const Mat& w, Index s, const SubsetBudget& budget = {});

struct CertifyPolicy {
  enum class Mode { exact, sampled, generic };
  Mode mode = Mode::generic;
  std::uint64_t samples = 2000;
  std::uint64_t seed = 0;
  /// In exact mode, fall back to sampling on layers whose enumeration
  /// exceeds the cap instead of refusing the whole certificate.
  bool allow_sampled_fallback = false;
};

struct LayerCondition {
  std::string name;   // "last_layer", "midlayer_<i>", "latent"
  Index sparsity;     // cardinality tested on the left-hand side
  double threshold;   // right-hand side of the inequality
  bool met = false;       // definitively true
  bool violated = false;  // definitively false (sampling can only prove this)
  std::string detail;
  std::optional<SparkEvidence> spark_evidence;
  std::optional<SubrankRecord> rank_evidence;
};

enum class CertVerdict { unique, not_certified, violated };

std::string to_string(CertVerdict v);

// Layer-by-layer invertibility certificate. Conditions checked:
//   s_L < spark(W_L)/2,
//   s_i < subspark(W_i, s_{i+1})/2   for midlayers,
//   subrank(W_0, s_1) = n_0 <= s_1.
// Under the generic policy the closed forms for full-measure random weights
// are used instead: s_L < (n+1)/2, s_i < (s_{i+1}+1)/2, s_1 >= n_0.
// verdict: unique iff every condition is definitively met; violated when the
// latent rank condition definitively fails or a support is empty (uniqueness
// genuinely breaks); not_certified otherwise (the spark conditions are
// sufficient only, so their failure proves nothing).
struct UniquenessCertificate {
  std::vector<LayerCondition> conditions;
  CertVerdict verdict = CertVerdict::not_certified;
  std::vector<std::string> assumption_flags;
};

UniquenessCertificate certify_uniqueness(const GeneratorNetwork& net, const ForwardTrace& trace,
                                         const CertifyPolicy& policy = {});

/// Rank with threshold 1e-10 x largest singular value.
Index numerical_rank(const Mat& m);

/// True when the smallest singular value is below 1e-10 x the largest.
bool columns_dependent(const Mat& m);

/// Rendered per-layer table plus verdict, for the certify CLI output.
std::string render_certificate(const UniquenessCertificate& cert);

}  // namespace geninv
