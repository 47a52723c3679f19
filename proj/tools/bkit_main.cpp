// bkit: command-line front end for the multimodal behavior toolkit.
// Subcommands cover the full workflow: corpus generation, parsing and
// validation, featurization, classifier training/evaluation, SHAP summaries,
// cross-application, co-occurrence, timeline compilation and the ratings
// statistics.
//
// Exit codes: 0 success, 2 usage error, 3 input error, 4 runtime failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "behaviorkit/analyze.hpp"
#include "behaviorkit/chat.hpp"
#include "behaviorkit/explain.hpp"
#include "behaviorkit/featurize.hpp"
#include "behaviorkit/forest.hpp"
#include "behaviorkit/lexicon.hpp"
#include "behaviorkit/parallel.hpp"
#include "behaviorkit/stats.hpp"
#include "behaviorkit/synth.hpp"
#include "behaviorkit/timeline.hpp"
#include "behaviorkit/transcript.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitRuntime = 4;

class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

bkit::BehaviorLexicon load_lexicon(const std::string& path) {
  if (path.empty()) return bkit::BehaviorLexicon::standard();
  return bkit::BehaviorLexicon::load(path);
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << content;
}

void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

std::vector<std::string> load_intents(const std::string& path) {
  if (path.empty()) return bkit::default_intents();
  std::ifstream in(path);
  if (!in) throw InputError("cannot open intents file: " + path);
  std::vector<std::string> intents;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) intents.push_back(line);
  }
  if (intents.empty()) throw InputError("intents file is empty: " + path);
  return intents;
}

bkit::Corpus load_featurized(const std::string& path, const bkit::BehaviorLexicon& lex,
                             std::vector<bkit::CorpusUnknownTag>* unknowns = nullptr) {
  bkit::Corpus corpus = bkit::load_corpus(path);
  auto local = bkit::featurize_corpus(corpus, lex);
  if (unknowns) *unknowns = std::move(local);
  return corpus;
}

// --------------------------------------------------------------------------
// gen
// --------------------------------------------------------------------------

struct GenOptions {
  std::string preset_id;
  std::string generator = "offline";
  std::uint64_t seed = 0;
  std::string out;
  std::string lexicon;
  std::string intents_file;
  std::string endpoint;
  std::string model;
  std::string api_key_env = "BKIT_API_KEY";
  std::string trait;  // custom preset only
  int size = 2000;    // custom preset only
  bool gendered = false;
  int parallel = 1;
  bool fresh = false;
};

int run_gen(const GenOptions& opt) {
  std::optional<bkit::DatasetPreset> preset;
  if (opt.preset_id == "custom") {
    auto trait = bkit::parse_trait(opt.trait);
    if (opt.trait.empty() || !trait) {
      throw CLI::ValidationError("--preset custom requires --trait ability|benevolence|none");
    }
    if (opt.size <= 0) throw CLI::ValidationError("--size must be positive");
    preset = bkit::DatasetPreset{bkit::PresetName::Control, "custom", *trait, opt.gendered,
                                 opt.size};
  } else {
    preset = bkit::parse_preset(opt.preset_id);
    if (!preset) throw InputError("unknown preset '" + opt.preset_id + "'");
  }
  const auto lex = load_lexicon(opt.lexicon);
  const auto intents = load_intents(opt.intents_file);
  if (opt.fresh && std::filesystem::exists(opt.out)) std::filesystem::remove(opt.out);

  int generated = 0;
  if (opt.generator == "offline") {
    const auto profile = bkit::default_profile(lex, preset->trait);
    generated = bkit::generate_to_file(opt.out, *preset, bkit::offline_generator(profile, lex),
                                       opt.seed, intents, "offline-synth", opt.parallel);
  } else if (opt.generator == "remote") {
    if (opt.endpoint.empty() || opt.model.empty()) {
      throw CLI::ValidationError("--generator remote requires --endpoint and --model");
    }
    bkit::ChatEndpoint endpoint;
    endpoint.base_url = opt.endpoint;
    endpoint.model = opt.model;
    endpoint.api_key_env = opt.api_key_env;
    generated = bkit::generate_to_file(opt.out, *preset, bkit::remote_generator(endpoint, lex),
                                       opt.seed, intents, endpoint.model, opt.parallel);
  } else {
    throw CLI::ValidationError("--generator must be offline or remote");
  }
  std::cout << "wrote " << generated << " new turn(s) to " << opt.out << " (preset "
            << preset->id << ", " << preset->size << " total)\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// parse
// --------------------------------------------------------------------------

struct ParseOptions {
  std::string input;
  std::string lexicon;
  bool strict = false;
};

int run_parse(const ParseOptions& opt) {
  const auto lex = load_lexicon(opt.lexicon);

  std::ifstream probe(opt.input);
  if (!probe) throw InputError("cannot open " + opt.input);
  std::string first_line;
  std::getline(probe, first_line);
  probe.close();

  const bool is_corpus = first_line.find("\"format\"") != std::string::npos &&
                         first_line.find("bkit-corpus") != std::string::npos;

  std::vector<bkit::CorpusUnknownTag> unknowns;
  std::size_t turns = 0;
  if (is_corpus) {
    bkit::Corpus corpus = load_featurized(opt.input, lex, &unknowns);
    turns = corpus.samples.size();
  } else {
    std::ifstream in(opt.input);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      ++turns;
      bkit::AugmentedTranscript t;
      try {
        t = bkit::parse(line);
      } catch (const bkit::ParseError& e) {
        throw InputError("line " + std::to_string(lineno) + ": " + e.what());
      }
      std::vector<bkit::UnknownTagReport> local;
      bkit::featurize(t, lex, &local);
      for (auto& u : local) unknowns.push_back({"line " + std::to_string(lineno), std::move(u)});
    }
  }

  std::cout << turns << " turn(s) parsed\n";
  if (unknowns.empty()) {
    std::cout << "no unknown tags\n";
  } else {
    std::cout << unknowns.size() << " unknown tag occurrence(s):\n";
    for (const auto& u : unknowns) {
      std::cout << "  " << u.turn_id << " [" << bkit::channel_name(u.report.channel) << "] '"
                << u.report.name << "' at offset " << u.report.offset << "\n";
    }
    if (opt.strict) throw InputError("unknown tags present and --strict-tags given");
  }
  return kExitOk;
}

// --------------------------------------------------------------------------
// featurize
// --------------------------------------------------------------------------

struct FeaturizeOptions {
  std::string input;
  std::string out;
  std::string lexicon;
};

int run_featurize(const FeaturizeOptions& opt) {
  const auto lex = load_lexicon(opt.lexicon);
  bkit::Corpus corpus = load_featurized(opt.input, lex);

  std::ofstream out(opt.out, std::ios::binary);
  if (!out) throw InputError("cannot write " + opt.out);
  out << "turn_id,level,gender";
  for (const auto& entry : lex.vocabulary()) {
    std::string name = entry.name;
    std::string quoted;
    for (char c : name) {
      if (c == '"') quoted += "\"\"";
      else quoted += c;
    }
    out << ",\"" << quoted << "\"";
  }
  out << "\n";
  for (const auto& s : corpus.samples) {
    out << s.turn_id << "," << (s.level ? bkit::to_string(*s.level) : "") << ","
        << (s.gender ? bkit::to_string(*s.gender) : "");
    for (int c : s.features.counts) out << "," << c;
    out << "\n";
  }
  std::cout << "wrote " << corpus.samples.size() << " feature row(s) to " << opt.out << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// train
// --------------------------------------------------------------------------

struct TrainOptions {
  std::string input;
  std::string target = "level";
  int trees = 100;
  int seeds = 20;
  std::uint64_t seed = 0;
  std::string out;
  std::string report_text;
  std::string model_out;
  std::string lexicon;
};

int run_train(const TrainOptions& opt) {
  const auto lex = load_lexicon(opt.lexicon);
  auto target = bkit::parse_target(opt.target);
  if (!target) throw CLI::ValidationError("--target must be level or gender");
  bkit::Corpus corpus = load_featurized(opt.input, lex);
  bkit::Dataset ds = bkit::make_dataset(corpus, *target);

  bkit::ForestConfig cfg;
  cfg.n_trees = opt.trees;
  auto report = bkit::evaluate_protocol(ds, *target, cfg, opt.seeds, opt.seed);
  const std::string line = bkit::format_accuracy_line(report);
  std::cout << line << "\n";

  if (!opt.out.empty()) write_json_file(opt.out, bkit::eval_report_to_json(report));
  if (!opt.report_text.empty()) {
    std::ostringstream text;
    text << bkit::to_string(*target) << " classifier, " << report.n_trees << " trees, "
         << report.n_seeds << " seeds (80-20 stratified splits)\n"
         << line << "\nconfusion matrix (rows true, columns predicted):\n";
    for (std::size_t a = 0; a < report.labels.size(); ++a) {
      text << "  " << report.labels[a] << ":";
      for (long v : report.confusion[a]) text << " " << v;
      text << "\n";
    }
    write_text_file(opt.report_text, text.str());
  }
  if (!opt.model_out.empty()) {
    bkit::ForestConfig final_cfg = cfg;
    final_cfg.seed = opt.seed;
    bkit::Forest forest = bkit::fit(ds, *target, final_cfg, lex.vocabulary_names());
    bkit::save_forest(forest, opt.model_out);
    std::cout << "model written to " << opt.model_out << "\n";
  }
  return kExitOk;
}

// --------------------------------------------------------------------------
// explain
// --------------------------------------------------------------------------

struct ExplainOptions {
  std::string model;
  std::string input;
  std::string background;
  std::string out;
  std::string plot_data;
  int top = 20;
  std::string lexicon;
};

int run_explain(const ExplainOptions& opt) {
  const auto lex = load_lexicon(opt.lexicon);
  bkit::Forest forest = bkit::load_forest(opt.model);
  bkit::Corpus corpus = load_featurized(opt.input, lex);
  if (!forest.vocabulary.empty() && forest.vocabulary != lex.vocabulary_names()) {
    throw InputError("model was trained with a different lexicon vocabulary");
  }

  std::vector<std::vector<int>> background;
  if (opt.background.empty()) {
    for (const auto& s : corpus.samples) background.push_back(s.features.counts);
  } else {
    bkit::Corpus bg_corpus = load_featurized(opt.background, lex);
    for (const auto& s : bg_corpus.samples) background.push_back(s.features.counts);
  }
  const auto bw = bkit::route_background(forest, background);

  std::vector<bkit::ShapAttribution> attributions(corpus.samples.size());
  std::vector<std::vector<int>> inputs(corpus.samples.size());
  bkit::parallel_for(static_cast<int>(corpus.samples.size()), [&](int i) {
    const auto& s = corpus.samples[i];
    attributions[i] = bkit::tree_shap(forest, s.features.counts, bw, s.turn_id);
    inputs[i] = s.features.counts;
  });

  auto summary = bkit::summarize(attributions, inputs, forest.labels, lex.vocabulary_names(), opt.top);
  if (!opt.out.empty()) write_json_file(opt.out, bkit::shap_summary_to_json(summary));
  if (!opt.plot_data.empty()) bkit::write_shap_plot_data(summary, opt.plot_data);

  for (std::size_t c = 0; c < summary.labels.size(); ++c) {
    std::cout << "class " << summary.labels[c] << " top features by mean |phi|:\n";
    const std::size_t limit = std::min<std::size_t>(10, summary.ranked[c].size());
    char buf[32];
    for (std::size_t r = 0; r < limit; ++r) {
      const auto& st = summary.ranked[c][r];
      std::snprintf(buf, sizeof buf, "%.5f", st.mean_abs_phi);
      std::cout << "  " << r + 1 << ". " << st.name << "  mean|phi| " << buf << "  direction "
                << (st.presence_direction >= 0 ? "+" : "-") << "\n";
    }
  }
  return kExitOk;
}

// --------------------------------------------------------------------------
// apply / cooc
// --------------------------------------------------------------------------

struct ApplyOptions {
  std::string model;
  std::string input;
  std::string out;
  std::string lexicon;
};

int run_apply(const ApplyOptions& opt) {
  const auto lex = load_lexicon(opt.lexicon);
  bkit::Forest forest = bkit::load_forest(opt.model);
  bkit::Corpus corpus = load_featurized(opt.input, lex);
  auto report = bkit::cross_apply(forest, corpus, lex.vocabulary_names(),
                                  std::filesystem::path(opt.model).stem().string(),
                                  std::filesystem::path(opt.input).stem().string());
  std::cout << bkit::render_cross_apply(report);
  if (!opt.out.empty()) write_json_file(opt.out, bkit::cross_apply_to_json(report));
  return kExitOk;
}

struct CoocOptions {
  std::string input;
  long min_count = 5;
  int top = 20;
  std::string out;
  std::string lexicon;
};

int run_cooc(const CoocOptions& opt) {
  const auto lex = load_lexicon(opt.lexicon);
  bkit::Corpus corpus = load_featurized(opt.input, lex);
  auto report = bkit::cooccurrence(corpus, lex.vocabulary_names(), opt.min_count);
  std::cout << bkit::render_cooccurrence(report, opt.top);
  if (!opt.out.empty()) write_json_file(opt.out, bkit::cooccurrence_to_json(report, opt.top));
  return kExitOk;
}

// --------------------------------------------------------------------------
// timeline
// --------------------------------------------------------------------------

struct TimelineOptions {
  std::string text;
  std::string input;
  std::string out;
  double rate = 160.0;
  long pause_ms = 400;
  std::string overlap = "queue";
  bool strict = false;
  std::string lexicon;
};

int run_timeline(const TimelineOptions& opt) {
  const auto lex = load_lexicon(opt.lexicon);
  auto policy = bkit::parse_overlap_policy(opt.overlap);
  if (!policy) throw CLI::ValidationError("--overlap-policy must be queue, cut-previous or drop-new");
  bkit::TimingConfig cfg;
  cfg.words_per_minute = opt.rate;
  cfg.pause_ms = opt.pause_ms;
  cfg.overlap = *policy;
  cfg.strict = opt.strict;
  if (cfg.words_per_minute <= 0 || cfg.pause_ms < 0) {
    throw CLI::ValidationError("timing configuration must be nonnegative");
  }

  if (!opt.text.empty()) {
    bkit::AugmentedTranscript t;
    try {
      t = bkit::parse(opt.text);
    } catch (const bkit::ParseError& e) {
      throw InputError(std::string("--text does not parse: ") + e.what());
    }
    auto tl = bkit::compile(t, lex, cfg);
    bkit::export_timeline(tl, opt.out);
    std::cout << "timeline with " << tl.events.size() << " event(s), " << tl.speech.size()
              << " word(s), total " << tl.total_ms << " ms -> " << opt.out << "\n";
    return kExitOk;
  }

  bkit::Corpus corpus = bkit::load_corpus(opt.input);
  std::filesystem::create_directories(opt.out);
  std::size_t count = 0;
  for (const auto& s : corpus.samples) {
    bkit::AugmentedTranscript t;
    try {
      t = bkit::parse(s.raw);
    } catch (const bkit::ParseError& e) {
      throw InputError("turn '" + s.turn_id + "': " + e.what());
    }
    auto tl = bkit::compile(t, lex, cfg);
    bkit::export_timeline(tl, std::filesystem::path(opt.out) / (s.turn_id + ".json"));
    ++count;
  }
  std::cout << "wrote " << count << " timeline file(s) to " << opt.out << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// stats
// --------------------------------------------------------------------------

struct StatsOptions {
  std::string ratings;
  std::string out;
  std::string json_out;
  std::string items;  // comma-separated subset; empty = per-scale defaults
};

int run_stats(const StatsOptions& opt) {
  const auto records = bkit::load_ratings(opt.ratings);
  const auto table = bkit::score_table(records);

  std::ostringstream report;
  report << bkit::render_score_table(table) << "\n";

  nlohmann::ordered_json json_doc;
  json_doc["format"] = "bkit-stats-report";
  json_doc["version"] = 1;
  auto& anovas = json_doc["anovas"] = nlohmann::ordered_json::array();

  auto run_one = [&](const std::string& title, const std::set<std::string>& items) {
    auto matrix = bkit::subject_condition_matrix(records, items);
    auto res = bkit::rm_anova(matrix);
    report << "repeated-measures ANOVA: " << title << " (" << res.n_subjects << " subjects)\n";
    report << bkit::render_rm_anova(res) << "\n";
    auto doc = bkit::rm_anova_to_json(res);
    doc["scale"] = title;
    anovas.push_back(std::move(doc));
  };

  if (!opt.items.empty()) {
    std::set<std::string> items;
    std::string item;
    std::istringstream ss(opt.items);
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) items.insert(item);
    }
    run_one(opt.items, items);
  } else {
    // one ANOVA per scale prefix present, falling back to all items
    std::set<std::string> ability_items, benevolence_items;
    for (const auto& item : table.items) {
      std::string low = item;
      std::transform(low.begin(), low.end(), low.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (low.rfind("ability", 0) == 0) ability_items.insert(item);
      if (low.rfind("benevolence", 0) == 0) benevolence_items.insert(item);
    }
    if (!ability_items.empty()) run_one("perceived ability", ability_items);
    if (!benevolence_items.empty()) run_one("perceived benevolence", benevolence_items);
    if (ability_items.empty() && benevolence_items.empty()) run_one("all items", {});
  }

  std::cout << report.str();
  if (!opt.out.empty()) write_text_file(opt.out, report.str());
  if (!opt.json_out.empty()) write_json_file(opt.json_out, json_doc);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multimodal behavior corpus toolkit"};
  app.require_subcommand(1);

  GenOptions gen_opt;
  auto* gen = app.add_subcommand("gen", "generate a corpus from a dataset preset");
  gen->add_option("--preset", gen_opt.preset_id,
                  "neutral-ability | neutral-benevolence | gender-ability | gender-benevolence | "
                  "control | custom")
      ->required();
  gen->add_option("--generator", gen_opt.generator, "offline | remote");
  gen->add_option("--seed", gen_opt.seed, "generation seed");
  gen->add_option("--trait", gen_opt.trait, "trait for --preset custom: ability | benevolence | none");
  gen->add_option("--size", gen_opt.size, "turn count for --preset custom");
  gen->add_flag("--gendered", gen_opt.gendered, "cycle male/female agents (--preset custom)");
  gen->add_option("--out", gen_opt.out, "output corpus file (JSON lines)")->required();
  gen->add_option("--lexicon", gen_opt.lexicon, "lexicon override file");
  gen->add_option("--intents", gen_opt.intents_file, "file with one communication intent per line");
  gen->add_option("--endpoint", gen_opt.endpoint, "chat-completion base URL (remote)");
  gen->add_option("--model", gen_opt.model, "model name (remote)");
  gen->add_option("--api-key-env", gen_opt.api_key_env, "environment variable holding the API key");
  gen->add_option("--parallel", gen_opt.parallel, "bounded concurrent requests (remote)");
  gen->add_flag("--fresh", gen_opt.fresh, "start over instead of resuming a partial file");

  ParseOptions parse_opt;
  auto* parse = app.add_subcommand("parse", "validate a corpus and report unknown tags");
  parse->add_option("--input", parse_opt.input, "corpus file or plain text (one turn per line)")
      ->required();
  parse->add_option("--lexicon", parse_opt.lexicon, "lexicon override file");
  parse->add_flag("--strict-tags", parse_opt.strict, "unknown tags fail the run");

  FeaturizeOptions feat_opt;
  auto* feat = app.add_subcommand("featurize", "write per-turn 94-dimensional count vectors");
  feat->add_option("--input", feat_opt.input, "corpus file")->required();
  feat->add_option("--out", feat_opt.out, "output CSV")->required();
  feat->add_option("--lexicon", feat_opt.lexicon, "lexicon override file");

  TrainOptions train_opt;
  auto* train = app.add_subcommand("train", "run the training/evaluation protocol");
  train->add_option("--input", train_opt.input, "corpus file")->required();
  train->add_option("--target", train_opt.target, "level | gender");
  train->add_option("--trees", train_opt.trees, "trees per forest");
  train->add_option("--seeds", train_opt.seeds, "number of evaluation seeds");
  train->add_option("--seed", train_opt.seed, "base seed");
  train->add_option("--out", train_opt.out, "evaluation report (JSON)");
  train->add_option("--report-text", train_opt.report_text, "evaluation report (text)");
  train->add_option("--model-out", train_opt.model_out, "fit a final model on the full corpus");
  train->add_option("--lexicon", train_opt.lexicon, "lexicon override file");

  ExplainOptions explain_opt;
  auto* explain = app.add_subcommand("explain", "SHAP attribution summary for a trained model");
  explain->add_option("--model", explain_opt.model, "model file from train --model-out")->required();
  explain->add_option("--input", explain_opt.input, "corpus of samples to explain")->required();
  explain->add_option("--background", explain_opt.background,
                      "background corpus (defaults to the input corpus)");
  explain->add_option("--out", explain_opt.out, "summary JSON");
  explain->add_option("--plot-data", explain_opt.plot_data, "plot-data CSV");
  explain->add_option("--top", explain_opt.top, "features per class in the summary");
  explain->add_option("--lexicon", explain_opt.lexicon, "lexicon override file");

  ApplyOptions apply_opt;
  auto* apply = app.add_subcommand("apply", "apply a classifier to another corpus");
  apply->add_option("--model", apply_opt.model, "model file")->required();
  apply->add_option("--input", apply_opt.input, "target corpus")->required();
  apply->add_option("--out", apply_opt.out, "report JSON");
  apply->add_option("--lexicon", apply_opt.lexicon, "lexicon override file");

  CoocOptions cooc_opt;
  auto* cooc = app.add_subcommand("cooc", "tag co-occurrence (phi coefficient) report");
  cooc->add_option("--input", cooc_opt.input, "corpus file")->required();
  cooc->add_option("--min-count", cooc_opt.min_count, "minimum joint occurrences for ranking");
  cooc->add_option("--top", cooc_opt.top, "ranked pairs to print/export");
  cooc->add_option("--out", cooc_opt.out, "report JSON");
  cooc->add_option("--lexicon", cooc_opt.lexicon, "lexicon override file");

  TimelineOptions tl_opt;
  auto* timeline = app.add_subcommand("timeline", "compile transcripts into behavior timelines");
  auto* tl_text = timeline->add_option("--text", tl_opt.text, "one augmented transcript");
  auto* tl_input = timeline->add_option("--input", tl_opt.input, "corpus file");
  timeline->add_option("--out", tl_opt.out, "output file (--text) or directory (--input)")
      ->required();
  timeline->add_option("--rate", tl_opt.rate, "speaking rate in words per minute");
  timeline->add_option("--pause-ms", tl_opt.pause_ms, "pause inserted at pause tags and ellipses");
  timeline->add_option("--overlap-policy", tl_opt.overlap, "queue | cut-previous | drop-new");
  timeline->add_flag("--strict-tags", tl_opt.strict, "unknown tag names are errors");
  timeline->add_option("--lexicon", tl_opt.lexicon, "lexicon override file");
  tl_text->excludes(tl_input);

  StatsOptions stats_opt;
  auto* stats = app.add_subcommand("stats", "Likert score table and repeated-measures ANOVA");
  stats->add_option("--ratings", stats_opt.ratings, "CSV: participant, condition, item, response")
      ->required();
  stats->add_option("--out", stats_opt.out, "text report path");
  stats->add_option("--json", stats_opt.json_out, "JSON report path");
  stats->add_option("--items", stats_opt.items, "comma-separated item subset for the ANOVA");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return run_gen(gen_opt);
    if (parse->parsed()) return run_parse(parse_opt);
    if (feat->parsed()) return run_featurize(feat_opt);
    if (train->parsed()) return run_train(train_opt);
    if (explain->parsed()) return run_explain(explain_opt);
    if (apply->parsed()) return run_apply(apply_opt);
    if (cooc->parsed()) return run_cooc(cooc_opt);
    if (timeline->parsed()) {
      if (tl_opt.text.empty() && tl_opt.input.empty()) {
        throw CLI::ValidationError("timeline needs --text or --input");
      }
      return run_timeline(tl_opt);
    }
    if (stats->parsed()) return run_stats(stats_opt);
    throw CLI::ValidationError("no subcommand");
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const bkit::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const bkit::CorpusError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const bkit::LexiconError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const bkit::StatsError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
