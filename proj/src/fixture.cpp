#include "llmconf/fixture.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "llmconf/analytics.hpp"
#include "llmconf/errors.hpp"
#include "llmconf/io.hpp"
#include "llmconf/pipeline.hpp"
#include "llmconf/rng.hpp"

namespace llmconf {

int FixtureSpec::n_cases() const {
  int n = 0;
  for (const auto& b : buckets) n += b.n_cases;
  return n;
}

int FixtureSpec::n_correct() const {
  int n = 0;
  for (const auto& b : buckets) n += b.n_correct;
  return n;
}

namespace {

bool integral(double x) { return std::fabs(x - std::round(x)) < 1e-6; }

}  // namespace

void FixtureSpec::validate() const {
  if (runs_per_case < 1) throw GenerationError("runs_per_case must be >= 1");
  std::set<int> seen;
  for (const auto& b : buckets) {
    if (b.agreeing < 1 || b.agreeing > runs_per_case) {
      throw GenerationError("bucket agreement must lie in [1, runs_per_case]");
    }
    if (b.agreeing == 1 && runs_per_case > 1) {
      throw GenerationError("a 1/N bucket cannot have a unique modal answer");
    }
    if (b.n_cases < 0 || b.n_correct < 0 || b.n_correct > b.n_cases) {
      throw GenerationError("bucket correct count must lie in [0, n_cases]");
    }
    if (!seen.insert(b.agreeing).second) throw GenerationError("duplicate bucket level");
  }
  const int n = n_cases(), c = n_correct();
  if (c == 0 || c == n) throw GenerationError("fixture needs both correct and incorrect cases");
  for (double m : {intrinsic_mean_correct, intrinsic_mean_incorrect}) {
    if (!(m > 0.0 && m < 1.0)) throw GenerationError("intrinsic means must lie in (0, 1)");
  }
  if (!integral(intrinsic_mean_correct * 100.0 * c) ||
      !integral(intrinsic_mean_incorrect * 100.0 * (n - c))) {
    throw GenerationError("intrinsic means are not reachable with whole percentages");
  }
  if (!integral(length_mean_correct * runs_per_case * c) ||
      !integral(length_mean_incorrect * runs_per_case * (n - c))) {
    throw GenerationError("length means are not reachable with whole characters");
  }
  if (std::min(length_mean_correct, length_mean_incorrect) < 600.0) {
    throw GenerationError("length means must be at least 600 characters");
  }
  if (reask_cases < 0 || reask_cases > n || grader_disagreements < 0 ||
      grader_disagreements > n) {
    throw GenerationError("re-ask and disagreement counts must lie in [0, n_cases]");
  }
}

namespace {

// ---- vocabulary --------------------------------------------------------------

struct Disease {
  std::string display;
  std::vector<std::string> aliases;
  std::vector<std::string> surfaces;
};

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::vector<Disease> eponym_vocabulary() {
  return {
      {"Behçet disease",
       {"Behçet's disease", "Behcet disease", "Behcets disease", "Behçet syndrome"},
       {"Behçet disease", "Behçet disease", "Behçet’s disease",
        "Behcet's disease is the most likely diagnosis.", "Behçet syndrome"}},
      {"Kikuchi-Fujimoto disease",
       {"Kikuchi disease", "histiocytic necrotizing lymphadenitis"},
       {"Kikuchi–Fujimoto disease", "Kikuchi disease", "Histiocytic necrotizing lymphadenitis",
        "kikuchi-fujimoto disease."}},
      {"Löfgren syndrome",
       {"Lofgren syndrome", "Löfgren's syndrome", "Lofgren's syndrome",
        "acute sarcoidosis with erythema nodosum"},
       {"Löfgren syndrome", "Löfgren syndrome", "Lofgren's syndrome",
        "Acute sarcoidosis with erythema nodosum"}},
      {"Sjögren syndrome",
       {"Sjogren syndrome", "Sjögren's syndrome", "Sjogren's syndrome",
        "primary Sjögren syndrome"},
       {"Sjögren syndrome", "Primary Sjögren syndrome", "Sjogren's syndrome",
        "The Sjögren syndrome"}},
      {"Ménétrier disease",
       {"Menetrier disease", "Ménétrier's disease", "Menetrier's disease",
        "hypertrophic protein-losing gastropathy"},
       {"Ménétrier disease", "Menetrier's disease", "Hypertrophic protein-losing gastropathy"}},
      {"Erdheim-Chester disease",
       {"Erdheim–Chester disease", "non-Langerhans cell histiocytosis of Erdheim-Chester type"},
       {"Erdheim-Chester disease", "Erdheim–Chester disease", "ERDHEIM-CHESTER DISEASE"}},
      {"Whipple disease",
       {"Whipple's disease", "Tropheryma whipplei infection"},
       {"Whipple disease", "Whipple's disease", "Tropheryma whipplei infection"}},
      {"Castleman disease",
       {"Castleman's disease", "angiofollicular lymph node hyperplasia"},
       {"Castleman disease", "Castleman's disease", "Angiofollicular lymph node hyperplasia"}},
      {"Adult-onset Still disease",
       {"adult-onset Still's disease", "Still disease in adults"},
       {"Adult-onset Still disease", "Adult-onset Still's disease", "Still disease in adults"}},
      {"Lyme carditis",
       {"lyme disease-induced heart block", "lyme disease-induced carditis"},
       {"Lyme carditis", "Lyme disease-induced heart block", "Lyme disease-induced carditis"}},
      {"Acid maltase deficiency",
       {"Pompe disease", "glycogen storage disease type II"},
       {"Acid maltase deficiency", "Pompe disease", "Glycogen storage disease type II"}},
      {"Infantile botulism",
       {"infant botulism"},
       {"Infantile botulism", "Infant botulism", "infantile botulism."}},
  };
}

std::vector<Disease> procedural_vocabulary() {
  static const char* kQualifiers[] = {"acute",         "chronic",     "granulomatous",
                                      "autoimmune",    "eosinophilic", "necrotizing",
                                      "idiopathic",    "hereditary",  "fulminant",
                                      "subacute",      "lymphocytic", "sclerosing"};
  static const std::pair<const char*, const char*> kOrgans[] = {
      {"hepatic", "liver"},        {"renal", "kidney"},       {"pulmonary", "lung"},
      {"cardiac", "heart"},        {"cutaneous", "skin"},     {"gastric", "stomach"},
      {"pancreatic", "pancreas"},  {"splenic", "spleen"},     {"thyroid", "thyroid gland"},
      {"adrenal", "adrenal gland"}, {"cerebral", "brain"},    {"pericardial", "pericardium"},
      {"pleural", "pleura"},       {"muscular", "muscle"},    {"ocular", "eye"},
      {"vascular", "vessels"}};
  static const char* kConditions[] = {"vasculitis",   "fibrosis",      "amyloidosis",
                                      "sarcoidosis",  "lymphoma",      "abscess",
                                      "infarction",   "tuberculosis",  "histoplasmosis",
                                      "myopathy",     "neuropathy",    "carcinoma",
                                      "thrombosis",   "granulomatosis"};
  std::vector<Disease> out;
  for (const char* q : kQualifiers) {
    for (const auto& [adj, noun] : kOrgans) {
      for (const char* cond : kConditions) {
        const std::string base = std::string(q) + " " + adj + " " + cond;
        const std::string alias1 = std::string(q) + " " + cond + " of the " + noun;
        const std::string alias2 = std::string(noun) + "-limited " + q + " " + cond;
        Disease d;
        d.display = capitalize(base);
        d.aliases = {alias1, alias2};
        d.surfaces = {capitalize(base), base + ".", "The " + base,
                      capitalize(base) + " is the most likely diagnosis.", capitalize(alias1),
                      alias2};
        out.push_back(std::move(d));
      }
    }
  }
  return out;
}

// ---- text builders --------------------------------------------------------------

// Prefix of `s` holding `n` Unicode scalar values.
std::string utf8_prefix(const std::string& s, std::size_t n) {
  std::size_t count = 0, i = 0;
  for (; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
      if (count == n) break;
      ++count;
    }
  }
  return s.substr(0, i);
}

const std::vector<std::string>& rationale_sentences() {
  static const std::vector<std::string> kSentences = {
      "The patient presents with a subacute illness that involves more than one organ "
      "system.",
      "Fever, weight loss, and night sweats point toward an inflammatory, infectious, or "
      "neoplastic process.",
      "The temperature of 38.6 °C and the elevated C-reactive protein level support systemic "
      "inflammation.",
      "Cultures of blood and urine were negative, which makes a common bacterial infection "
      "less likely.",
      "The differential diagnosis includes vasculitis, granulomatous disease, lymphoma, and "
      "atypical infection.",
      "Imaging shows findings that are focal rather than diffuse, which narrows the "
      "possibilities.",
      "The biopsy specimen is the most informative piece of data in this case.",
      "Noncaseating granulomas would argue against tuberculosis but would not exclude fungal "
      "disease.",
      "A β-lactam course produced no improvement, so an untreated bacterial cause is "
      "unlikely.",
      "The creatinine level rose from 0.9 to 1.8 mg/dL over two weeks, indicating renal "
      "involvement.",
      "Eosinophilia raises the possibility of a drug reaction, parasitic infection, or "
      "eosinophilic vasculitis.",
      "The time course of several weeks favors an indolent process over an acute one.",
      "Step by step, each finding is weighed against the leading candidates.",
      "Autoantibody testing was unrevealing, although seronegative disease remains possible.",
      "Taken together, the history, examination, and laboratory studies point to a single "
      "unifying diagnosis.",
      "The patient’s travel history and exposures are relevant to the infectious "
      "considerations.",
      "Hypercalcemia and hilar adenopathy would support a granulomatous disorder.",
      "The absence of a monoclonal protein makes light-chain disease less likely.",
  };
  return kSentences;
}

std::string build_rationale(Rng& rng, std::size_t target) {
  const auto& pool = rationale_sentences();
  std::string out;
  std::size_t remaining = target;
  while (remaining > 0) {
    const std::string& s = pool[rng.below(pool.size())];
    const std::string piece = (out.empty() ? "" : " ") + s;
    const std::size_t len = io::utf8_length(piece);
    if (len <= remaining) {
      out += piece;
      remaining -= len;
    } else {
      std::string cut = utf8_prefix(piece, remaining - 1);
      cut += remaining >= 2 ? "." : "";
      if (remaining == 1) cut = ".";
      out += cut;
      remaining = 0;
    }
  }
  return out;
}

std::string diagnosis_suffix(Rng& rng, const std::string& surface) {
  const auto form = rng.below(10);
  if (form < 7) return "\n\nDiagnosis: " + surface;
  if (form < 9) return "\n\nDiagnosis:\n\n" + surface;
  return "\n\n**Diagnosis:** " + surface;
}

std::string case_vignette(Rng& rng) {
  static const char* kSex[] = {"woman", "man"};
  static const char* kComplaints[] = {
      "fever and fatigue",    "progressive dyspnea",  "abdominal pain and weight loss",
      "a rash and joint pain", "painless lymphadenopathy", "episodes of syncope",
      "proximal muscle weakness", "chest pain",      "recurrent oral ulcers"};
  static const char* kHistory[] = {
      "Symptoms began several weeks earlier and had gradually worsened",
      "The patient had been well until three months before this evaluation",
      "The patient reported night sweats, anorexia, and a 6-kg weight loss",
      "A course of oral antibiotics, given by the primary care physician, was not effective",
      "There was no recent travel, but the patient kept two cats at home"};
  static const char* kLabs[] = {
      "The white-cell count was 13,400 per microliter, and the erythrocyte sedimentation "
      "rate was 88 mm per hour.",
      "The hemoglobin level was 9.8 g per deciliter, and the platelet count was 412,000 per "
      "microliter.",
      "The serum calcium level was 11.2 mg per deciliter, and the lactate dehydrogenase level "
      "was elevated.",
      "Tests for HIV, syphilis, and hepatitis B and C viruses were negative."};
  static const char* kSites[] = {"chest",  "abdomen", "pelvis", "head",
                                 "neck",   "spine",   "heart",  "lymph nodes"};
  std::ostringstream out;
  out << "A " << rng.between(18, 84) << "-year-old " << kSex[rng.below(2)]
      << " was evaluated for " << kComplaints[rng.below(std::size(kComplaints))] << ". "
      << kHistory[rng.below(std::size(kHistory))] << ". On examination, the temperature was "
      << rng.between(365, 393) / 10 << "." << rng.between(0, 9) << " °C, the pulse "
      << rng.between(60, 128) << " beats per minute, and the blood pressure "
      << rng.between(94, 156) << "/" << rng.between(52, 96) << " mm Hg.\n"
      << kLabs[rng.below(std::size(kLabs))]
      << " Imaging of the " << kSites[rng.below(std::size(kSites))]
      << " showed abnormalities that were not specific.";
  return out.str();
}

const char* kConfidenceForms[] = {
    "My estimated probability that this diagnosis is correct is {p}%.",
    "{p}%",
    "Approximately {p} percent, given the findings described.",
    "Confidence: {p}%. The presentation fits, but alternatives remain.",
    "There is roughly a {p}% probability that this is the answer.",
};

std::string confidence_text(Rng& rng, int percent) {
  std::string t = kConfidenceForms[rng.below(std::size(kConfidenceForms))];
  return t.replace(t.find("{p}"), 3, std::to_string(percent));
}

// ---- distributions ------------------------------------------------------------

double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double phi_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

double phi_inv(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (phi_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Mean of N(loc, sd) truncated to [0, 1].
double truncated_mean(double loc, double sd) {
  const double a = (0.0 - loc) / sd, b = (1.0 - loc) / sd;
  const double z = phi_cdf(b) - phi_cdf(a);
  if (z < 1e-300) return loc < 0.5 ? 0.0 : 1.0;
  return loc + sd * (phi_pdf(a) - phi_pdf(b)) / z;
}

double location_for_mean(double target, double sd) {
  double lo = -5.0, hi = 6.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (truncated_mean(mid, sd) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double truncated_quantile(double u, double loc, double sd) {
  const double a = phi_cdf((0.0 - loc) / sd), b = phi_cdf((1.0 - loc) / sd);
  return loc + sd * phi_inv(a + u * (b - a));
}

// Nudges integer values by +-1 (within [lo, hi]) until they sum to `target`.
void adjust_sum(std::vector<long long>& values, const std::vector<std::size_t>& members,
                long long target, long long lo, long long hi) {
  long long sum = 0;
  for (auto i : members) sum += values[i];
  std::size_t cursor = 0;
  std::size_t stalled = 0;
  while (sum != target) {
    const std::size_t i = members[cursor++ % members.size()];
    const long long step = sum < target ? 1 : -1;
    if (values[i] + step < lo || values[i] + step > hi) {
      if (++stalled > members.size()) throw GenerationError("cannot reach target sum");
      continue;
    }
    stalled = 0;
    values[i] += step;
    sum += step;
  }
}

struct CaseLayout {
  int agreeing = 0;
  bool correct = false;
};

double class_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  return rank_auc(scores, labels);
}

class ScriptedProvider final : public Provider {
 public:
  explicit ScriptedProvider(std::map<RunKey, std::string> script) : script_(std::move(script)) {}
  Completion complete(const std::string&, const SamplingParams&, const RunKey& key) override {
    auto it = script_.find(key);
    if (it == script_.end()) throw MissingKeyError("fixture script has no " + key.str());
    return {it->second, {}};
  }

 private:
  std::map<RunKey, std::string> script_;
};

}  // namespace

FixtureStats stats_from_report(const EvaluationReport& report) {
  FixtureStats s;
  s.n_cases = report.n_graded;
  s.n_correct = report.n_correct;
  s.accuracy = report.accuracy;
  const int n = report.config.runs_per_case;
  for (const auto& b : report.buckets) {
    if (b.frequency_level == Rational::reduced(n, n)) s.unanimous_accuracy = b.accuracy;
    if (b.frequency_level == Rational::reduced(2, n)) s.accuracy_2 = b.accuracy;
    if (b.frequency_level == Rational::reduced(3, n)) s.accuracy_3 = b.accuracy;
  }
  const auto& sc = method(report, kScMethod);
  const auto& conf = method(report, kIntrinsicMethod);
  const auto& len = method(report, kLengthMethod);
  if (sc.roc) s.auc_sc = sc.roc->auc;
  if (conf.roc) s.auc_intrinsic = conf.roc->auc;
  if (len.roc) s.auc_length = len.roc->auc;
  if (conf.welch) {
    s.intrinsic_mean_correct = conf.welch->mean_correct;
    s.intrinsic_mean_incorrect = conf.welch->mean_incorrect;
  }
  if (len.welch) {
    s.length_mean_correct = len.welch->mean_correct;
    s.length_mean_incorrect = len.welch->mean_incorrect;
  }
  return s;
}

Fixture generate_fixture(const FixtureSpec& spec) {
  spec.validate();
  const int n = spec.n_cases();
  const int runs = spec.runs_per_case;
  const auto un = static_cast<std::size_t>(n);

  // Case layout: agreement level and correctness, in shuffled order.
  Rng layout_rng(substream_seed(spec.seed, 1));
  std::vector<CaseLayout> layout;
  for (const auto& b : spec.buckets) {
    for (int i = 0; i < b.n_cases; ++i) layout.push_back({b.agreeing, i < b.n_correct});
  }
  layout_rng.shuffle(layout.begin(), layout.end());
  std::vector<std::size_t> correct_idx, incorrect_idx;
  std::vector<std::uint8_t> labels(un);
  for (std::size_t i = 0; i < un; ++i) {
    labels[i] = layout[i].correct ? 1 : 0;
    (layout[i].correct ? correct_idx : incorrect_idx).push_back(i);
  }

  // Vocabulary: references first, the rest serve as wrong answers.
  Rng vocab_rng(substream_seed(spec.seed, 2));
  auto eponyms = eponym_vocabulary();
  auto procedural = procedural_vocabulary();
  vocab_rng.shuffle(procedural.begin(), procedural.end());
  std::vector<Disease> pool = eponyms;
  pool.insert(pool.end(), procedural.begin(), procedural.end());
  if (pool.size() < un + static_cast<std::size_t>(runs) + 50) {
    throw GenerationError("vocabulary too small for the requested corpus");
  }
  std::vector<std::size_t> ref_of(un);
  {
    std::vector<std::size_t> first(un);
    std::iota(first.begin(), first.end(), std::size_t{0});
    vocab_rng.shuffle(first.begin(), first.end());
    ref_of = first;
  }
  const std::size_t wrong_begin = un;
  const std::size_t wrong_count = std::min<std::size_t>(pool.size() - un, 400);

  // Intrinsic confidence: whole percentages per case, tuned spread.
  Rng conf_rng(substream_seed(spec.seed, 3));
  std::vector<double> conf_u(un);
  for (auto& u : conf_u) u = conf_rng.uniform();
  auto make_percents = [&](double sd) {
    std::vector<long long> pct(un);
    const double loc_c = location_for_mean(spec.intrinsic_mean_correct, sd);
    const double loc_i = location_for_mean(spec.intrinsic_mean_incorrect, sd);
    for (std::size_t i = 0; i < un; ++i) {
      const double x = truncated_quantile(conf_u[i], labels[i] ? loc_c : loc_i, sd);
      pct[i] = std::clamp<long long>(std::llround(100.0 * x), 0, 100);
    }
    adjust_sum(pct, correct_idx,
               std::llround(spec.intrinsic_mean_correct * 100.0 * correct_idx.size()), 0, 100);
    adjust_sum(pct, incorrect_idx,
               std::llround(spec.intrinsic_mean_incorrect * 100.0 * incorrect_idx.size()), 0,
               100);
    return pct;
  };
  auto percent_auc = [&](const std::vector<long long>& pct) {
    std::vector<double> s(un);
    for (std::size_t i = 0; i < un; ++i) s[i] = static_cast<double>(pct[i]) / 100.0;
    return class_auc(s, labels);
  };

  // Case-level length totals (characters summed over runs), tuned spread.
  std::vector<double> len_z(un);
  const long long min_total = 600LL * runs;
  auto make_totals = [&](double sd) {
    std::vector<long long> total(un);
    for (std::size_t i = 0; i < un; ++i) {
      const double mu = labels[i] ? spec.length_mean_correct : spec.length_mean_incorrect;
      total[i] = std::max(min_total, std::llround(runs * (mu + sd * len_z[i])));
    }
    adjust_sum(total, correct_idx,
               std::llround(spec.length_mean_correct * runs * correct_idx.size()), min_total,
               1LL << 40);
    adjust_sum(total, incorrect_idx,
               std::llround(spec.length_mean_incorrect * runs * incorrect_idx.size()),
               min_total, 1LL << 40);
    return total;
  };
  auto length_auc = [&](const std::vector<long long>& total) {
    std::vector<double> s(un);
    for (std::size_t i = 0; i < un; ++i) {
      s[i] = cot_length_score(static_cast<double>(total[i]) / runs);
    }
    return class_auc(s, labels);
  };

  // AUC falls as the spread grows; bisect on the spread.
  auto tune = [&](auto make, auto auc_of, double target, double lo, double hi) {
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (lo + hi);
      (auc_of(make(mid)) > target ? lo : hi) = mid;
    }
    const double sd = 0.5 * (lo + hi);
    return std::make_pair(sd, auc_of(make(sd)));
  };
  const auto [conf_sd, conf_auc] =
      tune(make_percents, percent_auc, spec.target_auc_intrinsic, 0.02, 2.0);
  auto length_p = [&](const std::vector<long long>& total) {
    std::vector<double> c, w;
    for (std::size_t i = 0; i < un; ++i) {
      (labels[i] ? c : w).push_back(static_cast<double>(total[i]) / runs);
    }
    // Negated so that, like AUC, the tuned quantity falls as the spread grows.
    return -mean_difference_test(c, w, TestName::kWelchT).p_value;
  };
  // With a p-value target the spread is pinned by the p-value, and the AUC
  // is left to the draw; redraw until it also lands near its target.
  const bool tune_length_p = spec.target_length_p > 0.0;
  double len_sd = 0.0;
  bool len_ok = false;
  for (std::uint64_t attempt = 0; attempt < 256 && !len_ok; ++attempt) {
    Rng len_rng(substream_seed(spec.seed, 100 + attempt));
    for (auto& z : len_z) z = len_rng.normal();
    if (tune_length_p) {
      double fit;
      std::tie(len_sd, fit) = tune(make_totals, length_p, -spec.target_length_p, 1.0, 800.0);
      len_ok = std::fabs(fit + spec.target_length_p) <= 1e-3 &&
               std::fabs(length_auc(make_totals(len_sd)) - spec.target_auc_length) <=
                   spec.tuning_tolerance;
    } else {
      double fit;
      std::tie(len_sd, fit) = tune(make_totals, length_auc, spec.target_auc_length, 1.0, 800.0);
      len_ok = std::fabs(fit - spec.target_auc_length) <= spec.tuning_tolerance;
    }
  }
  if (std::fabs(conf_auc - spec.target_auc_intrinsic) > spec.tuning_tolerance || !len_ok) {
    throw GenerationError("could not tune confidence/length spreads to their targets");
  }
  const auto percents = make_percents(conf_sd);
  const auto totals = make_totals(len_sd);

  // Cases, run texts and the confidence replies.
  Rng text_rng(substream_seed(spec.seed, 5));
  std::vector<std::size_t> reask(un);
  std::iota(reask.begin(), reask.end(), std::size_t{0});
  text_rng.shuffle(reask.begin(), reask.end());
  std::set<std::size_t> reask_set(reask.begin(), reask.begin() + spec.reask_cases);

  std::vector<ClinicalCase> cases;
  std::map<RunKey, std::string> script;
  std::set<std::size_t> used;
  char id_buf[32];
  for (std::size_t i = 0; i < un; ++i) {
    std::snprintf(id_buf, sizeof(id_buf), "c%03zu", i + 1);
    const std::string id = id_buf;
    const Disease& ref = pool[ref_of[i]];
    used.insert(ref_of[i]);

    const auto& surf = ref.surfaces;
    ClinicalCase c;
    c.case_id = id;
    c.source_ref = "synthetic/seed-" + std::to_string(spec.seed) + "/" + id;
    c.case_text = case_vignette(text_rng);
    c.reference_answer = surf[text_rng.below(surf.size())];
    cases.push_back(c);

    // Groups: the modal one first, then strictly smaller ones.
    const int k = layout[i].agreeing;
    std::vector<std::size_t> group_disease;
    std::vector<int> group_size;
    std::set<std::size_t> in_case{ref_of[i]};
    auto draw_wrong = [&] {
      for (;;) {
        const std::size_t d = wrong_begin + text_rng.below(wrong_count);
        if (in_case.insert(d).second) return d;
      }
    };
    group_disease.push_back(layout[i].correct ? ref_of[i] : draw_wrong());
    group_size.push_back(k);
    bool ref_placed = layout[i].correct;
    for (int remaining = runs - k; remaining > 0;) {
      const int size = static_cast<int>(text_rng.between(1, std::min(k - 1, remaining)));
      std::size_t d;
      if (!ref_placed && text_rng.below(2) == 0) {
        d = ref_of[i];
        ref_placed = true;
      } else {
        d = draw_wrong();
      }
      group_disease.push_back(d);
      group_size.push_back(size);
      remaining -= size;
    }
    std::vector<std::size_t> run_group;
    for (std::size_t g = 0; g < group_size.size(); ++g) {
      used.insert(group_disease[g]);
      run_group.insert(run_group.end(), static_cast<std::size_t>(group_size[g]), g);
    }
    text_rng.shuffle(run_group.begin(), run_group.end());

    // Per-run lengths around the case mean, summing to the case total.
    const auto ur = static_cast<std::size_t>(runs);
    std::vector<long long> lengths(ur);
    const double base = static_cast<double>(totals[i]) / runs;
    for (auto& l : lengths) l = std::max(500LL, std::llround(base + text_rng.normal(0.0, 45.0)));
    std::vector<std::size_t> all_runs(ur);
    std::iota(all_runs.begin(), all_runs.end(), std::size_t{0});
    adjust_sum(lengths, all_runs, totals[i], 500, 1LL << 40);

    for (int r = 0; r < runs; ++r) {
      const Disease& d = pool[group_disease[run_group[static_cast<std::size_t>(r)]]];
      const std::string surface = d.surfaces[text_rng.below(d.surfaces.size())];
      const std::string suffix = diagnosis_suffix(text_rng, surface);
      const auto len = static_cast<std::size_t>(lengths[static_cast<std::size_t>(r)]);
      const std::size_t body = len - io::utf8_length(suffix);
      script[{id, Purpose::kSelfConsistency, r}] = build_rationale(text_rng, body) + suffix;
    }

    const int pct = static_cast<int>(percents[i]);
    if (reask_set.contains(i)) {
      script[{id, Purpose::kIntrinsic, 0}] =
          "I cannot assign a meaningful probability without more information.";
      script[{id, Purpose::kIntrinsic, 1}] = confidence_text(text_rng, pct);
    } else {
      script[{id, Purpose::kIntrinsic, 0}] = confidence_text(text_rng, pct);
    }
  }

  // Synonym map covering every disease that appears.
  std::map<std::string, std::vector<std::string>> synonyms;
  for (std::size_t d : used) synonyms[pool[d].display] = pool[d].aliases;
  nlohmann::ordered_json syn_json = nlohmann::ordered_json::object();
  for (const auto& [label, aliases] : synonyms) syn_json[label] = aliases;

  Fixture fx;
  fx.cases = cases;
  fx.synonyms_json = syn_json.dump(2) + "\n";
  const GroupingMap map = parse_grouping_map(fx.synonyms_json);
  for (std::size_t d : used) {
    const std::string label = assign_group(pool[d].display, map);
    for (const auto& surface : pool[d].surfaces) {
      if (assign_group(surface, map) != label) {
        throw GenerationError("surface form \"" + surface + "\" is not mapped to its label");
      }
    }
  }

  // Ledger, recorded through the same path `sample` uses.
  SamplingConfig cfg;
  cfg.runs_per_case = runs;
  cfg.model_id = spec.model_id;
  const std::string corpus_sha = io::sha256_hex(serialize_corpus(fx.cases));
  fx.ledger = RunLedger(LedgerHeader{corpus_sha, runs, cfg.sc_temperature, cfg.model_id});
  ScriptedProvider provider(std::move(script));
  const auto cot = default_cot_template();
  const auto conf = default_confidence_template();
  for (const auto& c : fx.cases) {
    fx.ledger.append(sample_case(c, cfg, provider, map, cot, conf, fx.ledger));
  }

  // Grades: two graders, a few disagreements settled by a third.
  Rng grade_rng(substream_seed(spec.seed, 6));
  std::vector<std::size_t> disagree(un);
  std::iota(disagree.begin(), disagree.end(), std::size_t{0});
  grade_rng.shuffle(disagree.begin(), disagree.end());
  std::set<std::size_t> disagree_set(disagree.begin(),
                                     disagree.begin() + spec.grader_disagreements);
  for (std::size_t i = 0; i < un; ++i) {
    const Grade truth = labels[i] ? Grade::kCorrect : Grade::kIncorrect;
    const Grade other = labels[i] ? Grade::kIncorrect : Grade::kCorrect;
    GradeEntry e{fx.cases[i].case_id, truth, truth, std::nullopt};
    if (disagree_set.contains(i)) {
      (grade_rng.below(2) == 0 ? e.grader_1 : e.grader_2) = other;
      e.grader_3 = truth;
    }
    fx.grades.entries.push_back(e);
  }

  // Check the result through the real scoring and report path.
  const auto scored = cmd_score(fx.ledger, map, cfg, &fx.cases);
  if (scored.scores.size() != un) throw GenerationError("fixture cases failed to score");
  ReportConfig rc;
  rc.runs_per_case = runs;
  rc.bootstrap_resamples = 100;
  const auto report = cmd_report(scored.scores, GradingInput{&fx.grades, nullptr, nullptr}, rc);
  const auto auto_report =
      cmd_report(scored.scores, GradingInput{nullptr, &fx.cases, &map}, rc);
  if (auto_report.n_correct != report.n_correct) {
    throw GenerationError("auto-grading disagrees with the fixture grade file");
  }
  fx.stats = stats_from_report(report);
  fx.stats.intrinsic_sd = conf_sd;
  fx.stats.length_sd = len_sd;
  const auto& conf_welch = method(report, kIntrinsicMethod).welch;
  const auto& len_welch = method(report, kLengthMethod).welch;
  fx.stats.intrinsic_p = conf_welch ? conf_welch->p_value : 1.0;
  fx.stats.length_p = len_welch ? len_welch->p_value : 1.0;
  if (spec.max_intrinsic_p > 0.0 && !(fx.stats.intrinsic_p < spec.max_intrinsic_p)) {
    throw GenerationError("intrinsic confidence difference is not significant enough");
  }
  if (fx.stats.n_correct != spec.n_correct() ||
      std::fabs(fx.stats.auc_sc - spec.target_auc_sc) > spec.auc_tolerance ||
      std::fabs(fx.stats.auc_intrinsic - spec.target_auc_intrinsic) > spec.auc_tolerance ||
      std::fabs(fx.stats.auc_length - spec.target_auc_length) > spec.auc_tolerance) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "generated fixture misses its targets (%d correct, AUC %.4f / %.4f / %.4f)",
                  fx.stats.n_correct, fx.stats.auc_sc, fx.stats.auc_intrinsic,
                  fx.stats.auc_length);
    throw GenerationError(msg);
  }
  return fx;
}

void write_fixture(const std::filesystem::path& dir, const Fixture& fx) {
  const std::map<std::string, std::string> files = {
      {"cases.csv", serialize_corpus(fx.cases)},
      {"grades.csv", serialize_grades(fx.grades)},
      {"ledger.jsonl", serialize_ledger(fx.ledger)},
      {"synonyms.json", fx.synonyms_json},
  };
  std::string sums;
  for (const auto& [name, bytes] : files) {
    io::write_file_atomic(dir / name, bytes);
    sums += io::sha256_hex(bytes) + "  " + name + "\n";
  }
  io::write_file_atomic(dir / "SHA256SUMS", sums);
}

std::vector<std::string> verify_fixture_checksums(const std::filesystem::path& dir) {
  std::istringstream in(io::read_file(dir / "SHA256SUMS"));
  std::vector<std::string> bad;
  std::string sum, name;
  while (in >> sum >> name) {
    if (!std::filesystem::exists(dir / name) || io::sha256_file(dir / name) != sum) {
      bad.push_back(name);
    }
  }
  return bad;
}

}  // namespace llmconf
