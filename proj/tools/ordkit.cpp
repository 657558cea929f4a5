// ordkit command-line tool: corpus transformation, order metrics, BPE,
// masking, retrieval evaluation and synthetic parallel corpora.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ordkit/metrics.hpp"
#include "ordkit/pipeline.hpp"
#include "ordkit/retrieval.hpp"
#include "ordkit/subword.hpp"
#include "ordkit/synthlang.hpp"
#include "ordkit/transform.hpp"
#include "ordkit/treebank.hpp"
#include "provenance.hpp"

namespace {

using ordkit::tools::Provenance;

struct Common {
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Global random seed")->envname("ORDKIT_SEED")->capture_default_str();
  sub->add_option("--workers", c.workers, "Worker threads (output does not depend on it)")
      ->envname("ORDKIT_WORKERS")
      ->check(CLI::Range(1u, 1024u))
      ->capture_default_str();
}

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

void finish(const Provenance& prov) {
  for (const auto& out : prov.outputs) prov.write_next_to(out);
}

std::vector<std::vector<ordkit::TokenId>> read_id_lines(std::istream& in) {
  std::vector<std::vector<ordkit::TokenId>> lines;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::vector<ordkit::TokenId> ids;
    for (long v; ss >> v;) ids.push_back(static_cast<ordkit::TokenId>(v));
    lines.push_back(std::move(ids));
  }
  return lines;
}

void write_ids(std::ostream& out, const std::vector<ordkit::TokenId>& ids) {
  for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? " " : "") << ids[i];
}

// --- transform -------------------------------------------------------------

struct TransformArgs {
  Common common;
  std::vector<std::string> inputs;
  std::string output;
  std::string chain;
  std::string rules;
  std::string format = "sentence";
  std::string trees_output;
  std::string origins;
  std::string stats;
  std::string label;
  bool skip_bad = false;
};

int run_transform(const TransformArgs& a) {
  std::vector<ordkit::ReorderRule> custom;
  if (!a.rules.empty()) {
    auto in = open_in(a.rules);
    custom = ordkit::parse_rules(in);
  }
  ordkit::TransformConfig config;
  config.chain = ordkit::parse_chain(a.chain, custom);
  config.seed = a.common.seed;
  config.workers = a.common.workers;
  config.skip_bad = a.skip_bad;

  auto out = open_out(a.output);
  std::ofstream trees, origins;
  ordkit::TransformSinks sinks;
  if (a.format == "tree") {
    sinks.trees = &out;
  } else {
    sinks.sentences = &out;
  }
  if (!a.trees_output.empty()) {
    trees = open_out(a.trees_output);
    sinks.trees = &trees;
  }
  if (!a.origins.empty()) {
    origins = open_out(a.origins);
    sinks.origins = &origins;
  }

  ordkit::CorpusAccumulator total;
  std::size_t sentences = 0, skipped = 0, bad = 0;
  for (const auto& path : a.inputs) {
    auto in = open_in(path);
    auto summary = ordkit::run_transform(in, config, sinks, path, sentences);
    sentences += summary.sentences;
    skipped += summary.skipped_empty;
    bad += summary.bad_lines.size();
    for (const auto& b : summary.bad_lines) std::cerr << "skipped " << path << ':' << b.line_number << ": " << b.message << '\n';
    total.merge(summary.metrics);
  }
  out.close();
  if (trees.is_open()) trees.close();
  if (origins.is_open()) origins.close();
  std::cerr << "transformed " << sentences << " sentences; skipped " << skipped << " empty and " << bad
            << " malformed lines\n";

  Provenance prov;
  prov.command = "transform";
  prov.config["chain"] = ordkit::describe(config.chain);
  prov.config["format"] = a.format;
  prov.config["skip_bad"] = a.skip_bad;
  if (!a.rules.empty()) prov.inputs.push_back(a.rules);
  prov.seed = a.common.seed;
  prov.inputs.insert(prov.inputs.end(), a.inputs.begin(), a.inputs.end());
  prov.outputs.push_back(a.output);
  if (!a.trees_output.empty()) prov.outputs.push_back(a.trees_output);
  if (!a.origins.empty()) prov.outputs.push_back(a.origins);
  if (!a.stats.empty()) {
    auto report = open_out(a.stats);
    ordkit::write_stats_report(report, {{a.label.empty() ? ordkit::describe(config.chain) : a.label, total.stats()}});
    report.close();
    prov.outputs.push_back(a.stats);
  }
  finish(prov);
  return 0;
}

// --- stats -----------------------------------------------------------------

struct StatsArgs {
  Common common;
  std::string original, modified, origins, output, label = "modified";
};

int run_stats(const StatsArgs& a) {
  auto orig = open_in(a.original);
  auto mod = open_in(a.modified);
  std::ifstream origins;
  if (!a.origins.empty()) origins = open_in(a.origins);
  const auto stats = ordkit::run_stats(orig, mod, a.origins.empty() ? nullptr : &origins);
  if (a.output.empty()) {
    ordkit::write_stats_report(std::cout, {{a.label, stats}});
    return 0;
  }
  {
    auto out = open_out(a.output);
    ordkit::write_stats_report(out, {{a.label, stats}});
  }
  Provenance prov;
  prov.command = "stats";
  prov.config["label"] = a.label;
  prov.seed = a.common.seed;
  prov.inputs = {a.original, a.modified};
  if (!a.origins.empty()) prov.inputs.push_back(a.origins);
  prov.outputs = {a.output};
  finish(prov);
  return 0;
}

// --- bpe / mask ------------------------------------------------------------

struct BpeArgs {
  Common common;
  std::string input, output, model, language = "und";
  std::size_t vocab_size = 32000;
};

int run_bpe_learn(const BpeArgs& a) {
  auto in = open_in(a.input);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  const auto model = ordkit::bpe_learn(lines, a.vocab_size, a.language);
  {
    auto out = open_out(a.output);
    model.write(out);
  }
  std::cerr << "learned " << model.merges().size() << " merges; vocabulary " << model.vocab_size() << '\n';
  Provenance prov;
  prov.command = "bpe learn";
  prov.config["vocab_size"] = a.vocab_size;
  prov.config["language"] = a.language;
  prov.seed = a.common.seed;
  prov.inputs = {a.input};
  prov.outputs = {a.output};
  finish(prov);
  return 0;
}

ordkit::BpeModel load_model(const std::string& path) {
  auto in = open_in(path);
  return ordkit::BpeModel::read(in);
}

int run_bpe_apply(const BpeArgs& a, bool decode) {
  const auto model = load_model(a.model);
  auto in = open_in(a.input);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  std::vector<std::string> out_lines(lines.size());
  ordkit::parallel_for(lines.size(), a.common.workers, [&](std::size_t i) {
    std::ostringstream o;
    if (decode) {
      std::istringstream ss(lines[i]);
      std::vector<ordkit::TokenId> ids;
      for (long v; ss >> v;) ids.push_back(static_cast<ordkit::TokenId>(v));
      o << model.decode(ids);
    } else {
      write_ids(o, model.encode(lines[i]));
    }
    out_lines[i] = o.str();
  });
  {
    auto out = open_out(a.output);
    for (const auto& l : out_lines) out << l << '\n';
  }
  Provenance prov;
  prov.command = decode ? "bpe decode" : "bpe apply";
  prov.seed = a.common.seed;
  prov.inputs = {a.model, a.input};
  prov.outputs = {a.output};
  finish(prov);
  return 0;
}

struct MaskArgs {
  Common common;
  std::string model, input, output;
  ordkit::MaskingConfig config;
};

int run_mask(MaskArgs a) {
  a.config.seed = a.common.seed;
  a.config.validate();
  const auto model = load_model(a.model);
  auto in = open_in(a.input);
  const auto lines = read_id_lines(in);
  std::vector<ordkit::MaskedSequence> masked(lines.size());
  ordkit::parallel_for(lines.size(), a.common.workers, [&](std::size_t i) {
    masked[i] = ordkit::mask_tokens(lines[i], a.config, model.vocab_size(), i);
  });
  std::size_t tokens = 0, selected = 0;
  {
    auto out = open_out(a.output);
    for (const auto& m : masked) {
      write_ids(out, m.ids);
      out << '\t';
      write_ids(out, m.labels);
      out << '\n';
      tokens += m.ids.size();
      for (auto l : m.labels) selected += l != 0;
    }
  }
  std::cerr << "masked " << selected << " of " << tokens << " tokens\n";
  Provenance prov;
  prov.command = "mask";
  prov.config["mask_rate"] = a.config.mask_rate;
  prov.config["replace_mask"] = a.config.replace_mask;
  prov.config["keep_original"] = a.config.keep_original;
  prov.config["replace_random"] = a.config.replace_random;
  prov.seed = a.common.seed;
  prov.inputs = {a.model, a.input};
  prov.outputs = {a.output};
  finish(prov);
  return 0;
}

// --- retrieval -------------------------------------------------------------

struct RetrievalArgs {
  Common common;
  std::string source, target, output;
};

int run_retrieval(const RetrievalArgs& a) {
  auto src_in = open_in(a.source, true);
  auto tgt_in = open_in(a.target, true);
  const auto src = ordkit::read_embeddings(src_in);
  const auto tgt = ordkit::read_embeddings(tgt_in);
  const auto result = ordkit::top1_retrieval(src.pooled, tgt.pooled, a.common.workers);
  // Summary goes to stdout only when there is no JSON file to hold it.
  std::ostream& summary = a.output.empty() ? std::cout : std::cerr;
  summary << "sentences\t" << src.pooled.size() << "\ntop1_accuracy\t" << result.top1_accuracy << "\nmean_margin\t"
            << result.margin << "\nties\t" << result.ties << "\nlayer\t" << src.layer << '\n';
  if (a.output.empty()) return 0;
  {
    nlohmann::ordered_json j;
    j["sentences"] = src.pooled.size();
    j["top1_accuracy"] = result.top1_accuracy;
    j["mean_margin"] = result.margin;
    j["ties"] = result.ties;
    j["source_layer"] = src.layer;
    j["target_layer"] = tgt.layer;
    j["nearest"] = result.nearest;
    auto out = open_out(a.output);
    out << j.dump(2) << '\n';
  }
  Provenance prov;
  prov.command = "retrieval";
  prov.seed = a.common.seed;
  prov.inputs = {a.source, a.target};
  prov.outputs = {a.output};
  finish(prov);
  return 0;
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  Common common;
  std::string grammar, output_dir;
  std::size_t count = 0;
};

ordkit::SynthGrammar load_grammar(const std::string& path) {
  if (path.empty()) return ordkit::demo_grammar();
  auto in = open_in(path);
  return ordkit::parse_grammar(in);
}

int run_synth_generate(const SynthArgs& a) {
  const auto grammar = load_grammar(a.grammar);
  const auto corpus = ordkit::generate_corpus(grammar, a.count, a.common.seed, a.common.workers);
  std::filesystem::create_directories(a.output_dir);
  const auto dir = std::filesystem::path(a.output_dir);
  const std::string path_a = (dir / (grammar.lexicons[0].language + ".ptb")).string();
  const std::string path_b = (dir / (grammar.lexicons[1].language + ".ptb")).string();
  const std::string path_align = (dir / "alignment.tsv").string();
  {
    auto out_a = open_out(path_a);
    auto out_b = open_out(path_b);
    auto out_align = open_out(path_align);
    ordkit::write_corpus(corpus, out_a, out_b, out_align);
  }
  std::ostringstream grammar_text;
  ordkit::write_grammar(grammar_text, grammar);
  Provenance prov;
  prov.command = "synth generate";
  prov.config["count"] = a.count;
  prov.config["grammar"] = a.grammar.empty() ? "builtin:demo" : a.grammar;
  prov.config["grammar_text"] = grammar_text.str();
  prov.seed = a.common.seed;
  if (!a.grammar.empty()) prov.inputs = {a.grammar};
  prov.outputs = {path_a, path_b, path_align};
  finish(prov);
  std::cerr << "generated " << a.count << " sentence pairs in " << a.output_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ordkit: constituent-order corpus transformations and analysis"};
  app.set_config("--config", "", "Key-value config file; command-line flags take precedence");
  app.require_subcommand(1);
  app.set_version_flag("--version", ordkit::tools::kVersion);

  TransformArgs targs;
  auto* transform = app.add_subcommand("transform", "Apply a transformation chain to a treebank");
  add_common(transform, targs.common);
  transform->add_option("-i,--input", targs.inputs, "Input treebank(s), one bracketed tree per line")
      ->required()
      ->check(CLI::ExistingFile);
  transform->add_option("-o,--output", targs.output, "Output file")->required();
  transform->add_option("--chain", targs.chain,
                        "Comma-separated steps: reorder:FEATURE[:inverse], constituent_shuffle[:noroot], "
                        "word_shuffle, ablate:ALPHA[:shuffle]")
      ->required();
  transform->add_option("--rules", targs.rules, "Extra reorder rules file")->check(CLI::ExistingFile);
  transform->add_option("--format", targs.format, "Main output format")
      ->check(CLI::IsMember({"sentence", "tree"}))
      ->capture_default_str();
  transform->add_option("--trees-output", targs.trees_output, "Also write transformed trees here");
  transform->add_option("--origins", targs.origins, "Write the origin index of every output token here");
  transform->add_option("--stats", targs.stats, "Write an inversion-ratio / word-move-distance report here");
  transform->add_option("--label", targs.label, "Row label for the stats report (default: the chain)");
  transform->add_flag("--skip-bad", targs.skip_bad, "Skip malformed lines instead of failing");

  StatsArgs sargs;
  auto* stats = app.add_subcommand("stats", "Compare an original and a modified sentence file");
  add_common(stats, sargs.common);
  stats->add_option("--original", sargs.original)->required()->check(CLI::ExistingFile);
  stats->add_option("--modified", sargs.modified)->required()->check(CLI::ExistingFile);
  stats->add_option("--origins", sargs.origins, "Origin indices of the modified tokens")->check(CLI::ExistingFile);
  stats->add_option("-o,--output", sargs.output, "Report file (default: standard output)");
  stats->add_option("--label", sargs.label, "Row label")->capture_default_str();

  BpeArgs bargs;
  auto* bpe = app.add_subcommand("bpe", "Byte-pair encoding");
  bpe->require_subcommand(1);
  auto* learn = bpe->add_subcommand("learn", "Learn a vocabulary from a text corpus");
  add_common(learn, bargs.common);
  learn->add_option("-i,--input", bargs.input)->required()->check(CLI::ExistingFile);
  learn->add_option("-o,--output", bargs.output, "Model file")->required();
  learn->add_option("--vocab-size", bargs.vocab_size)->capture_default_str();
  learn->add_option("--language", bargs.language)->capture_default_str();
  auto* apply = bpe->add_subcommand("apply", "Encode text lines to id lines");
  auto* decode = bpe->add_subcommand("decode", "Decode id lines to text");
  for (auto* sub : {apply, decode}) {
    add_common(sub, bargs.common);
    sub->add_option("--model", bargs.model)->required()->check(CLI::ExistingFile);
    sub->add_option("-i,--input", bargs.input)->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--output", bargs.output)->required();
  }

  MaskArgs margs;
  auto* mask = app.add_subcommand("mask", "Masked-LM corruption of id lines");
  add_common(mask, margs.common);
  mask->add_option("--model", margs.model, "BPE model giving the vocabulary size")->required()->check(CLI::ExistingFile);
  mask->add_option("-i,--input", margs.input)->required()->check(CLI::ExistingFile);
  mask->add_option("-o,--output", margs.output, "Lines of 'masked ids<TAB>labels'")->required();
  mask->add_option("--mask-rate", margs.config.mask_rate)->capture_default_str();
  mask->add_option("--replace-mask", margs.config.replace_mask)->capture_default_str();
  mask->add_option("--keep-original", margs.config.keep_original)->capture_default_str();
  mask->add_option("--replace-random", margs.config.replace_random)->capture_default_str();

  RetrievalArgs rargs;
  auto* retrieval = app.add_subcommand("retrieval", "Top-1 cosine retrieval between two embedding files");
  add_common(retrieval, rargs.common);
  retrieval->add_option("--source", rargs.source)->required()->check(CLI::ExistingFile);
  retrieval->add_option("--target", rargs.target)->required()->check(CLI::ExistingFile);
  retrieval->add_option("-o,--output", rargs.output, "JSON result file");

  SynthArgs yargs;
  auto* synth = app.add_subcommand("synth", "Synthetic parallel corpora");
  synth->require_subcommand(1);
  auto* generate = synth->add_subcommand("generate", "Sample sentence pairs from a grammar");
  add_common(generate, yargs.common);
  generate->add_option("--grammar", yargs.grammar, "Grammar file (default: built-in demo)")->check(CLI::ExistingFile);
  generate->add_option("-n,--count", yargs.count, "Number of sentence pairs")->required()->check(CLI::PositiveNumber);
  generate->add_option("-o,--output-dir", yargs.output_dir)->required();
  auto* show = synth->add_subcommand("grammar", "Print the built-in demo grammar");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; every malformed command line exits 2.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*transform) return run_transform(targs);
    if (*stats) return run_stats(sargs);
    if (*learn) return run_bpe_learn(bargs);
    if (*apply) return run_bpe_apply(bargs, false);
    if (*decode) return run_bpe_apply(bargs, true);
    if (*mask) return run_mask(margs);
    if (*retrieval) return run_retrieval(rargs);
    if (*generate) return run_synth_generate(yargs);
    if (*show) {
      ordkit::write_grammar(std::cout, ordkit::demo_grammar());
      return 0;
    }
  } catch (const ordkit::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
