// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <variant>

#include "tinyeats/corpus.hpp"
#include "tinyeats/errors.hpp"
#include "tinyeats/feature_file.hpp"
#include "tinyeats/model_store.hpp"
#include "tinyeats/qinfer.hpp"
#include "tinyeats/quantizer.hpp"
#include "tinyeats/trainer.hpp"

namespace tinyeats::cli {
namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::kIo, "cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw Error(Errc::kIo, "write failed: " + path.string());
}

QuantModel require_quant(const fs::path& path) {
  auto m = load_model(path);
  if (auto* q = std::get_if<QuantModel>(&m)) return std::move(*q);
  throw Error(Errc::kBadKind, path.string() + " holds a float model; quantize it first");
}

FloatModel require_float(const fs::path& path) {
  auto m = load_model(path);
  if (auto* f = std::get_if<FloatModel>(&m)) return std::move(*f);
  throw Error(Errc::kBadKind, path.string() + " holds a quantized model, expected float");
}

std::vector<LabeledExample> examples_from(const fs::path& manifest) {
  const auto entries = load_manifest(manifest);
  return featurize(entries);
}

std::vector<FeatureWindow> windows_of(std::span<const LabeledExample> xs) {
  std::vector<FeatureWindow> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x.features);
  return out;
}

// --- subcommands -----------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::size_t n_eat = 0;
  std::size_t n_non = 0;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const auto manifest = build_corpus(a.n_eat, a.n_non, a.seed, a.out);
  out << manifest.string() << '\n';
  return kOk;
}

struct FeaturesArgs {
  std::string manifest;
  std::string out;
};

int cmd_features(const FeaturesArgs& a, std::ostream& out) {
  const auto windows = windows_of(examples_from(a.manifest));
  save_feature_file(a.out, windows);
  out << "windows=" << windows.size() << '\n';
  return kOk;
}

struct TrainArgs {
  std::string manifest;
  std::string out;
  std::size_t epochs = 0;  // 0: 100, or 200 with --qat
  std::uint64_t seed = 0;
  bool qat = false;
  std::string history;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const auto examples = examples_from(a.manifest);
  const DatasetSplits splits = split(examples, {0.7, 0.15, 0.15}, a.seed);

  TrainConfig cfg;
  cfg.seed = a.seed;
  cfg.qat = a.qat;
  cfg.epochs = a.epochs != 0 ? a.epochs : (a.qat ? kQatEpochs : kFloatEpochs);
  const TrainResult res = train(splits, cfg);

  const auto bytes = save_model(res.model, a.out);
  if (!a.history.empty()) {
    std::ostringstream csv;
    csv << "epoch,train_loss,val_loss,val_accuracy\n" << std::setprecision(17);
    for (const auto& h : res.history) {
      csv << h.epoch << ',' << h.train_loss << ',' << h.val_loss << ',' << h.val_accuracy << '\n';
    }
    write_text(a.history, csv.str());
  }

  const auto& best = res.history[res.best_epoch - 1];
  const auto test = evaluate(res.model, splits.test);
  out << "mode=" << (a.qat ? "qat" : "float") << " epochs=" << cfg.epochs
      << " windows=" << examples.size() << " train=" << splits.train.size()
      << " val=" << splits.validation.size() << " test=" << splits.test.size() << '\n'
      << "best_epoch=" << res.best_epoch << " val_accuracy=" << best.val_accuracy
      << " val_loss=" << best.val_loss << '\n'
      << "test_accuracy=" << test.metrics.accuracy << " test_f1=" << test.metrics.f1 << '\n'
      << "wrote " << a.out << " (" << bytes << " bytes)\n";
  return kOk;
}

struct QuantizeArgs {
  std::string in;
  std::string out;
};

int cmd_quantize(const QuantizeArgs& a, std::ostream& out) {
  const QuantModel qm = quantize_model(require_float(a.in));
  const auto bytes = save_model(qm, a.out);
  out << "wrote " << a.out << " (" << bytes << " bytes, budget " << kQuantBudgetBytes << ")\n";
  return kOk;
}

struct EvalArgs {
  std::string model;
  std::string manifest;
  std::string report;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto model = load_model(a.model);
  const auto examples = examples_from(a.manifest);
  Evaluation ev;
  if (const auto* q = std::get_if<QuantModel>(&model)) {
    ev = evaluate([&](const FeatureWindow& w) { return qforward(quantize_features(w), *q).label; },
                  examples);
  } else {
    ev = evaluate(std::get<FloatModel>(model), examples);
  }
  nlohmann::json report = {
      {"accuracy", ev.metrics.accuracy}, {"precision", ev.metrics.precision},
      {"recall", ev.metrics.recall},     {"f1", ev.metrics.f1},
      {"tp", ev.counts.tp},              {"fp", ev.counts.fp},
      {"fn", ev.counts.fn},              {"tn", ev.counts.tn},
  };
  write_text(a.report, report.dump(2) + "\n");
  out << report.dump() << '\n';
  return kOk;
}

struct InferArgs {
  std::string model;
  std::string wav;
};

int cmd_infer(const InferArgs& a, std::ostream& out) {
  const QuantModel qm = require_quant(a.model);
  const auto windows = extract_features(load_wav(a.wav), qm.norm);
  using Clock = std::chrono::steady_clock;
  Clock::duration spent{};
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto t0 = Clock::now();
    const auto r = qforward(quantize_features(windows[i]), qm);
    spent += Clock::now() - t0;
    out << i << ',' << r.label << ',' << r.scores[0] << ',' << r.scores[1] << '\n';
  }
  if (!windows.empty()) {
    const double us = std::chrono::duration<double, std::micro>(spent).count() /
                      static_cast<double>(windows.size());
    out << "# time_per_window_us=" << std::fixed << std::setprecision(1) << us << '\n';
  }
  return kOk;
}

struct ExportArgs {
  std::string in;
  std::string out;
  std::string symbol;
};

int cmd_export(const ExportArgs& a, std::ostream& out) {
  const std::string text = export_firmware_array(require_quant(a.in), a.symbol);
  write_text(a.out, text);
  out << "wrote " << a.out << '\n';
  return kOk;
}

struct CompareArgs {
  std::string float_model;
  std::string quant_model;
  std::string manifest;
};

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  const FloatModel fm = require_float(a.float_model);
  const QuantModel qm = require_quant(a.quant_model);
  const auto windows = windows_of(examples_from(a.manifest));
  const double agree = agreement(fm, qm, windows);
  out << "windows=" << windows.size() << " agreement=" << std::setprecision(6) << agree << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Soft-sign GRU eating detector: features, training, int8 quantization, integer inference"};
  app.name(args.empty() ? "tinyeats" : args.front());
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic eating/non-eating WAV corpus");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--n-eat", synth.n_eat, "Eating files")->required()->check(CLI::PositiveNumber);
  s->add_option("--n-noneat", synth.n_non, "Non-eating files")->required()->check(CLI::PositiveNumber);
  s->add_option("--seed", synth.seed, "Seed")->required();

  FeaturesArgs feats;
  auto* f = app.add_subcommand("features", "Extract TEFW feature windows from a manifest");
  f->add_option("--manifest", feats.manifest, "Manifest CSV")->required();
  f->add_option("--out", feats.out, "Output TEFW file")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a float (or QAT) model and save the best checkpoint");
  t->add_option("--manifest", tr.manifest, "Manifest CSV")->required();
  t->add_option("--out", tr.out, "Output model file")->required();
  t->add_option("--epochs", tr.epochs, "Epochs (default 100, or 200 with --qat)")->check(CLI::PositiveNumber);
  t->add_option("--seed", tr.seed, "Seed")->required();
  t->add_flag("--qat", tr.qat, "Quantization-aware training");
  t->add_option("--history", tr.history, "Per-epoch history CSV");

  QuantizeArgs qz;
  auto* q = app.add_subcommand("quantize", "Quantize a float model to int8");
  q->add_option("--in", qz.in, "Float model")->required();
  q->add_option("--out", qz.out, "Quantized model")->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a model on every window of a manifest");
  e->add_option("--model", ev.model, "Float or quantized model")->required();
  e->add_option("--manifest", ev.manifest, "Manifest CSV")->required();
  e->add_option("--report", ev.report, "JSON report path")->required();

  InferArgs inf;
  auto* i = app.add_subcommand("infer", "Integer inference over each 4 s window of a WAV file");
  i->add_option("--model", inf.model, "Quantized model")->required();
  i->add_option("--wav", inf.wav, "20 kHz mono PCM WAV")->required();

  ExportArgs ex;
  auto* x = app.add_subcommand("export", "Emit the quantized container as a C byte array");
  x->add_option("--in", ex.in, "Quantized model")->required();
  x->add_option("--out", ex.out, "Output source file")->required();
  x->add_option("--symbol", ex.symbol, "C identifier")->required();

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Label agreement between float and integer paths");
  c->add_option("--float", cmp.float_model, "Float model")->required();
  c->add_option("--quant", cmp.quant_model, "Quantized model")->required();
  c->add_option("--manifest", cmp.manifest, "Manifest CSV")->required();

  std::vector<std::string> rest(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& pe) {
    const int rc = app.exit(pe, out, err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (f->parsed()) return cmd_features(feats, out);
    if (t->parsed()) return cmd_train(tr, out);
    if (q->parsed()) return cmd_quantize(qz, out);
    if (e->parsed()) return cmd_eval(ev, out);
    if (i->parsed()) return cmd_infer(inf, out);
    if (x->parsed()) return cmd_export(ex, out);
    if (c->parsed()) return cmd_compare(cmp, out);
  } catch (const Error& er) {
    err << "error: " << to_string(er.code()) << ": " << er.what() << '\n';
    return is_invariant_violation(er.code()) ? kInvariantViolation : kDataError;
  } catch (const std::filesystem::filesystem_error& fe) {
    err << "error: I/O failure: " << fe.what() << '\n';
    return kDataError;
  } catch (const std::exception& ex_) {
    err << "internal error: " << ex_.what() << '\n';
    return kInvariantViolation;
  }
  return kUsage;
}

}  // namespace tinyeats::cli
