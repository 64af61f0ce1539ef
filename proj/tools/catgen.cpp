// catgen: prepare / train / generate / eval / parser-prep.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "catgen/checkpoint.hpp"
#include "catgen/config.hpp"
#include "catgen/dataset.hpp"
#include "catgen/embeddings.hpp"
#include "catgen/eval.hpp"
#include "catgen/generator.hpp"
#include "catgen/manifest.hpp"
#include "catgen/trainer.hpp"

namespace fs = std::filesystem;
using namespace catgen;

namespace {

struct PrepareArgs {
  std::vector<std::string> inputs;
  std::size_t max_vocab = 10000;
  fs::path out;
  bool reverse_augment = false;
};

struct TrainArgs {
  fs::path data;
  fs::path config;
  fs::path out;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  std::optional<double> clip_norm;
  std::optional<std::size_t> checkpoint_every;
  std::string experiment;
  fs::path glove;
  fs::path log;
  fs::path resume;
};

struct GenerateArgs {
  fs::path ckpt;
  CategoryId category = 0;
  std::string seed;
  double exploration = 0.0;
  std::size_t max_tokens = 30;
  std::uint64_t rng_seed = 0;
  std::size_t count = 1;
  bool glued = false;
};

struct EvalArgs {
  fs::path ckpt;
  fs::path data;
  double exploration = 0.1;
  std::size_t samples = 100;
  std::size_t k = 4;
  std::size_t max_tokens = 30;
  std::uint64_t rng_seed = 0;
  fs::path out;
};

struct ParserPrepArgs {
  fs::path in;
  fs::path out;
};

corpus::SourceText parse_input_spec(const std::string& spec) {
  const auto colon = spec.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == spec.size()) {
    throw std::invalid_argument("--input expects <file>:<category>, got '" + spec + "'");
  }
  corpus::SourceText src;
  const auto cat = parse_size(std::string_view(spec).substr(colon + 1), "--input category");
  src.category = static_cast<CategoryId>(cat);
  src.lines = corpus::read_lines(spec.substr(0, colon));
  return src;
}

int run_prepare(const PrepareArgs& a) {
  std::vector<corpus::SourceText> sources;
  RunManifest manifest;
  manifest.subcommand = "prepare";
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    sources.push_back(parse_input_spec(a.inputs[i]));
    manifest.inputs["source" + std::to_string(i)] = a.inputs[i].substr(0, a.inputs[i].rfind(':'));
    manifest.settings["source" + std::to_string(i) + ".category"] =
        std::to_string(sources.back().category);
  }
  corpus::PrepareOptions options;
  options.max_vocab = a.max_vocab;
  options.reverse_augment = a.reverse_augment;
  const auto ds = corpus::build_dataset(sources, options);
  corpus::save_dataset(ds, a.out);

  manifest.settings["max_vocab"] = std::to_string(a.max_vocab);
  manifest.settings["reverse_augment"] = a.reverse_augment ? "1" : "0";
  manifest.outputs["dataset"] = a.out / corpus::kDatasetFile;
  manifest.outputs["vocab"] = a.out / corpus::kVocabFile;
  manifest.outputs["manifest"] = a.out / corpus::kManifestFile;
  write_manifest(manifest, a.out / "prepare");

  const auto counts = ds.counts_per_category();
  std::cerr << "prepared " << ds.records.size() << " sentences, vocabulary " << ds.vocab.size();
  for (std::size_t c = 0; c < counts.size(); ++c) std::cerr << ", category " << c << ": " << counts[c];
  std::cerr << '\n';
  return 0;
}

int run_train(const TrainArgs& a) {
  model::ModelConfig mcfg;
  train::TrainingConfig tcfg;
  if (!a.config.empty()) apply_config(read_key_values(a.config), mcfg, tcfg);
  if (a.epochs) tcfg.epochs = *a.epochs;
  if (a.batch) tcfg.batch_size = *a.batch;
  if (a.lr) tcfg.lr = *a.lr;
  if (a.seed) tcfg.rng_seed = *a.seed;
  if (a.clip_norm) tcfg.clip_norm = *a.clip_norm;
  if (a.checkpoint_every) tcfg.checkpoint_every = *a.checkpoint_every;

  auto prepared = corpus::load_dataset(a.data);
  auto ds = a.experiment.empty()
                ? std::move(prepared)
                : train::experiment_dataset(train::parse_experiment(a.experiment), prepared);
  mcfg.vocab_size = ds.vocab.size();
  mcfg.num_categories = ds.num_categories;
  mcfg.validate();

  train::TrainOptions options;
  options.vocab = &ds.vocab;
  options.checkpoint_path = a.out;
  options.log_path = a.log;
  options.on_epoch = [](const train::EpochReport& r) {
    std::cerr << "epoch " << r.epoch << " loss " << r.mean_loss << " accuracy " << r.accuracy
              << " (" << r.seconds << "s)\n";
  };
  if (!a.resume.empty()) {
    auto ck = model::load_checkpoint(a.resume);
    if (!(ck.config == mcfg)) throw std::runtime_error("resume checkpoint config differs: " + a.resume.string());
    if (!(ck.vocab == ds.vocab)) throw std::runtime_error("resume checkpoint vocabulary differs: " + a.resume.string());
    options.initial = std::move(ck.params);
    options.optimizer = std::move(ck.optimizer);
  } else if (!a.glove.empty()) {
    Rng glove_rng(tcfg.rng_seed);
    auto table = model::load_pretrained(a.glove, ds.vocab, mcfg.glove_dim, glove_rng);
    std::cerr << "pretrained vectors: " << table.found << " found, " << table.randomized
              << " random\n";
    options.pretrained = std::move(table.table);
  }

  const train::TrainingSet set(ds.records, mcfg.num_categories, mcfg.seq_len);
  auto result = train::train(set, tcfg, mcfg, std::move(options));
  model::save_checkpoint({mcfg, ds.vocab, std::move(result.params), std::move(result.optimizer)},
                         a.out);

  RunManifest manifest;
  manifest.subcommand = "train";
  manifest.settings = to_key_values(mcfg, tcfg);
  manifest.settings["experiment"] = a.experiment.empty() ? "none" : a.experiment;
  manifest.inputs["dataset"] = a.data / corpus::kDatasetFile;
  manifest.inputs["vocab"] = a.data / corpus::kVocabFile;
  if (!a.config.empty()) manifest.inputs["config"] = a.config;
  if (!a.glove.empty()) manifest.inputs["glove"] = a.glove;
  if (!a.resume.empty()) manifest.inputs["resume"] = a.resume;
  manifest.outputs["checkpoint"] = a.out;
  write_manifest(manifest, a.out);
  return 0;
}

int run_generate(const GenerateArgs& a) {
  const auto ck = model::load_checkpoint(a.ckpt);
  std::vector<TokenId> seed;
  for (const auto& t : corpus::tokenize(corpus::clean_text(a.seed))) seed.push_back(ck.vocab.id(t));
  const auto mode = a.glued ? gen::SpacingMode::Glued : gen::SpacingMode::Spaced;
  for (std::size_t i = 0; i < a.count; ++i) {
    const auto g = gen::generate(ck, a.category, seed, a.exploration, a.max_tokens, a.rng_seed + i);
    std::cout << gen::detokenize(g.all(), ck.vocab, mode) << '\n';
  }
  return 0;
}

int run_eval(const EvalArgs& a) {
  const auto ck = model::load_checkpoint(a.ckpt);
  const auto ds = corpus::load_dataset(a.data);
  if (!(ds.vocab == ck.vocab)) {
    throw std::runtime_error("dataset vocabulary in " + a.data.string() +
                             " does not match the checkpoint " + a.ckpt.string());
  }
  eval::ProtocolConfig cfg;
  cfg.exploration = a.exploration;
  cfg.sample_count = a.samples;
  cfg.k = a.k;
  cfg.max_tokens = a.max_tokens;
  cfg.rng_seed = a.rng_seed;
  const auto reports = eval::novelty_protocol(ck, ds.records, cfg, &std::cerr);

  {
    std::ofstream out(a.out);
    if (!out) throw std::runtime_error("cannot write report: " + a.out.string());
    eval::write_report_tsv(out, reports);
  }
  for (const auto& r : reports) {
    std::cout << "category " << r.category << ": k_jaccard " << r.k_jaccard_mean
              << " phrase_overlap " << r.phrase_overlap_mean << '\n';
  }

  RunManifest manifest;
  manifest.subcommand = "eval";
  manifest.settings["exploration"] = format_double(a.exploration);
  manifest.settings["samples"] = std::to_string(a.samples);
  manifest.settings["k"] = std::to_string(a.k);
  manifest.settings["max_tokens"] = std::to_string(a.max_tokens);
  manifest.settings["rng_seed"] = std::to_string(a.rng_seed);
  manifest.inputs["checkpoint"] = a.ckpt;
  manifest.inputs["dataset"] = a.data / corpus::kDatasetFile;
  manifest.outputs["report"] = a.out;
  write_manifest(manifest, a.out);
  return 0;
}

int run_parser_prep(const ParserPrepArgs& a) {
  const auto lines = corpus::read_lines(a.in);
  const auto sentences = eval::parser_prep(lines);
  std::ofstream out(a.out);
  if (!out) throw std::runtime_error("cannot write " + a.out.string());
  for (const auto& s : sentences) out << s << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Category-conditioned LSTM text generation", "catgen"};
  app.require_subcommand(1);

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare", "Clean, tokenize and encode categorized text files");
  prepare->add_option("--input", prep.inputs, "Input text file and its category, <file>:<id>")
      ->required();
  prepare->add_option("--max-vocab", prep.max_vocab, "Vocabulary cap including special tokens")
      ->capture_default_str();
  prepare->add_option("--out", prep.out, "Output dataset directory")->required();
  prepare->add_flag("--reverse-augment", prep.reverse_augment,
                    "Add word-reversed copies of every sentence under category 1");

  TrainArgs tr;
  auto* trainc = app.add_subcommand("train", "Train a model on a prepared dataset");
  trainc->add_option("--data", tr.data, "Prepared dataset directory")->required();
  trainc->add_option("--config", tr.config, "key=value config file (flags override it)");
  trainc->add_option("--out", tr.out, "Checkpoint path")->required();
  trainc->add_option("--epochs", tr.epochs, "Training epochs");
  trainc->add_option("--batch", tr.batch, "Batch size");
  trainc->add_option("--lr", tr.lr, "Adam learning rate");
  trainc->add_option("--seed", tr.seed, "Training rng seed");
  trainc->add_option("--clip-norm", tr.clip_norm, "Global gradient-norm clip, 0 disables");
  trainc->add_option("--checkpoint-every", tr.checkpoint_every,
                     "Also write the checkpoint every N epochs");
  trainc->add_option("--experiment", tr.experiment,
                     "just-jokes, forward-reverse or three-category");
  trainc->add_option("--glove", tr.glove, "Pretrained word vectors in GloVe text format");
  trainc->add_option("--log", tr.log, "Append per-epoch loss and accuracy to this file");
  trainc->add_option("--resume", tr.resume, "Continue from this checkpoint");

  GenerateArgs ga;
  auto* generate = app.add_subcommand("generate", "Generate text of a category");
  generate->add_option("--ckpt", ga.ckpt, "Checkpoint path")->required();
  generate->add_option("--category", ga.category, "Category id")->required();
  generate->add_option("--seed", ga.seed, "Seed text")->capture_default_str();
  generate->add_option("--exploration", ga.exploration, "Per-token sampling probability in [0,1]")
      ->capture_default_str();
  generate->add_option("--max-tokens", ga.max_tokens, "Generated-token budget")
      ->capture_default_str();
  generate->add_option("--rng-seed", ga.rng_seed, "Sampling seed")->capture_default_str();
  generate->add_option("--count", ga.count, "Number of texts (seeds rng-seed, rng-seed+1, ...)")
      ->capture_default_str();
  generate->add_flag("--glued", ga.glued, "Attach closing punctuation to the previous word");

  EvalArgs ea;
  auto* evalc = app.add_subcommand("eval", "Score generated text against the training corpus");
  evalc->add_option("--ckpt", ea.ckpt, "Checkpoint path")->required();
  evalc->add_option("--data", ea.data, "Prepared dataset directory")->required();
  evalc->add_option("--exploration", ea.exploration, "Exploration factor")->capture_default_str();
  evalc->add_option("--samples", ea.samples, "Number of seed sentences")->capture_default_str();
  evalc->add_option("--k", ea.k, "K-gram size for Jaccard")->capture_default_str();
  evalc->add_option("--max-tokens", ea.max_tokens, "Generated-token budget")
      ->capture_default_str();
  evalc->add_option("--rng-seed", ea.rng_seed, "Sampling seed")->capture_default_str();
  evalc->add_option("--out", ea.out, "Report TSV path")->required();

  ParserPrepArgs pa;
  auto* pprep = app.add_subcommand("parser-prep", "Split generated text into parser-ready sentences");
  pprep->add_option("--in", pa.in, "Generated text, one sample per line")->required();
  pprep->add_option("--out", pa.out, "Output, one sentence per line")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*prepare) return run_prepare(prep);
    if (*trainc) return run_train(tr);
    if (*generate) return run_generate(ga);
    if (*evalc) return run_eval(ea);
    if (*pprep) return run_parser_prep(pa);
  } catch (const std::exception& e) {
    std::cerr << "catgen: error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
