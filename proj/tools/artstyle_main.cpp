// Command-line pipeline: ingest -> train -> evaluate/embed -> gradcam/tsne ->
// network/lineage -> render. Every command writes deterministic primary
// artifacts plus a run-metadata sidecar; exit codes are stable for scripting
// (0 ok, 2 input validation, 3 missing prerequisite artifact, 4 numeric
// failure).

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "artstyle/core.hpp"
#include "artstyle/embed.hpp"
#include "artstyle/errors.hpp"
#include "artstyle/eval.hpp"
#include "artstyle/graph.hpp"
#include "artstyle/image.hpp"
#include "artstyle/nnet.hpp"
#include "artstyle/render.hpp"
#include "artstyle/tsne.hpp"

namespace fs = std::filesystem;
using namespace artstyle;

namespace {

class MissingArtifactError : public std::runtime_error {
 public:
  explicit MissingArtifactError(const std::string& what) : std::runtime_error(what) {}
};

std::string read_input_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Prerequisite artifacts produced by earlier pipeline commands.
std::string read_artifact(const fs::path& path, const char* producer) {
  if (!fs::exists(path)) {
    throw MissingArtifactError("missing artifact: " + path.string() + " (produce it with `artstyle " +
                               producer + "`)");
  }
  return read_input_file(path);
}

void write_text(const fs::path& path, std::string_view content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ValidationError("short write: " + path.string());
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Seeds and the effective configuration are recorded next to every
// command's outputs; primary artifacts stay timestamp-free.
void write_sidecar(const fs::path& out_dir, const std::string& command,
                   const std::map<std::string, std::string>& settings) {
  std::string canonical;
  for (const auto& [key, value] : settings) canonical += key + "=" + value + "\n";
  char hash[24];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical)));
  std::string text = "command=" + command + "\nconfig_hash=" + hash + "\n" + canonical +
                     "timestamp=" + timestamp_utc() + "\n";
  write_text(out_dir / (command + ".meta"), text);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Flat key=value configuration file; '#' starts a comment.
std::map<std::string, std::string> parse_config_file(const fs::path& path) {
  std::map<std::string, std::string> values;
  const std::string text = read_input_file(path);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t comment = line.find('#');
    if (comment != std::string::npos) line.resize(comment);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config file " + path.string() + ": line " +
                            std::to_string(line_no) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ValidationError("config file " + path.string() + ": line " +
                            std::to_string(line_no) + ": empty key");
    }
    values[key] = value;
  }
  return values;
}

// CLI flag > config-file value > built-in default.
struct Settings {
  std::map<std::string, std::string> file;

  void apply(const CLI::Option* opt, const char* key, std::string& value) const {
    if (opt->count() == 0 && file.contains(key)) value = file.at(key);
  }
  void apply(const CLI::Option* opt, const char* key, double& value) const {
    if (opt->count() == 0 && file.contains(key)) {
      const std::string& text = file.at(key);
      char* end = nullptr;
      value = std::strtod(text.c_str(), &end);
      if (text.empty() || end != text.c_str() + text.size()) {
        throw ValidationError(std::string("config key ") + key + ": bad number '" + text + "'");
      }
    }
  }
  template <typename Int>
  void apply_int(const CLI::Option* opt, const char* key, Int& value) const {
    if (opt->count() == 0 && file.contains(key)) {
      const std::string& text = file.at(key);
      char* end = nullptr;
      const long long v = std::strtoll(text.c_str(), &end, 10);
      if (text.empty() || end != text.c_str() + text.size()) {
        throw ValidationError(std::string("config key ") + key + ": bad integer '" + text + "'");
      }
      value = static_cast<Int>(v);
    }
  }
};

core::DatasetManifest load_manifest_artifact(const fs::path& path) {
  return core::parse_manifest(read_artifact(path, "ingest"));
}

struct LoadedImages {
  nnet::Dataset dataset;
  std::vector<std::string> painting_ids;
};

LoadedImages load_images(const core::DatasetManifest& manifest,
                         const core::SplitAssignment* split,
                         std::optional<core::Partition> partition, const fs::path& images_root,
                         int input_h, int input_w) {
  LoadedImages out;
  std::vector<const core::PaintingRecord*> selected;
  for (const auto& p : manifest.paintings) {
    if (partition) {
      const auto it = split->assignment.find(p.painting_id);
      if (it == split->assignment.end()) {
        throw ValidationError("split file does not cover painting '" + p.painting_id + "'");
      }
      if (it->second != *partition) continue;
    }
    selected.push_back(&p);
  }
  if (selected.empty()) return out;

  out.dataset.images = Tensor({selected.size(), static_cast<std::size_t>(input_h),
                               static_cast<std::size_t>(input_w), 3});
  const std::size_t stride = static_cast<std::size_t>(input_h) * input_w * 3;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    image::Image img = image::read_ppm(images_root / selected[i]->image_ref);
    img = image::resize_bilinear(img, input_w, input_h);
    const Tensor t = image::to_tensor(img);
    std::copy(t.data.begin(), t.data.end(), out.dataset.images.data.begin() + i * stride);
    out.dataset.labels.push_back(static_cast<int>(selected[i]->style));
    out.painting_ids.push_back(selected[i]->painting_id);
  }
  return out;
}

std::vector<embed::EmbeddingRecord> load_embeddings_file(const fs::path& path) {
  const std::string bytes = read_artifact(path, "embed");
  if (bytes.size() >= 4 && bytes.substr(0, 4) == "AEMB") {
    return embed::embeddings_from_binary(bytes);
  }
  return embed::embeddings_from_csv(bytes);
}

embed::FeatureTable load_feature_table(const fs::path& path) {
  const std::string bytes = read_artifact(path, "embed");
  if (bytes.size() >= 4 && bytes.substr(0, 4) == "AEMB") {
    embed::FeatureTable table;
    table.dim = embed::kEmbeddingDim;
    for (auto& rec : embed::embeddings_from_binary(bytes)) {
      table.ids.push_back(std::move(rec.painting_id));
      table.rows.push_back(std::move(rec.vector));
    }
    return table;
  }
  return embed::feature_table_from_csv(bytes);
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

graph::LabelMap build_label_map(const fs::path& mapping_path,
                                const core::DatasetManifest& manifest) {
  const auto name_to_index = graph::parse_index_mapping(read_input_file(mapping_path));
  graph::LabelMap labels;
  for (const auto& [artist_id, artist] : manifest.artists) {
    const auto it = name_to_index.find(artist.name);
    if (it != name_to_index.end()) labels[artist_id] = it->second;
  }
  return labels;
}

std::string history_to_csv(const nnet::TrainHistory& history) {
  std::string out = "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
  for (std::size_t i = 0; i < history.epochs.size(); ++i) {
    const auto& e = history.epochs[i];
    out += std::to_string(i + 1) + "," + format_double(e.train_loss) + "," +
           format_double(e.train_accuracy) + "," + format_double(e.val_loss) + "," +
           format_double(e.val_accuracy) + "\n";
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"art style classification and influence-analysis toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  app.add_option("--config", config_path, "flat key=value configuration file");
  auto* seed_opt = app.add_option("--seed", seed, "seed recorded into every artifact");
  auto* out_opt = app.add_option("--out", out_dir, "output directory");

  // ingest
  auto* cmd_ingest = app.add_subcommand("ingest", "parse, clean and split a manifest");
  std::string ingest_manifest;
  std::string ingest_images;
  double ingest_ratio = 0.9;
  cmd_ingest->add_option("--manifest", ingest_manifest, "manifest csv");
  auto* ingest_images_opt =
      cmd_ingest->add_option("--images-root", ingest_images, "enables the monochrome probe");
  auto* ingest_ratio_opt = cmd_ingest->add_option("--ratio", ingest_ratio, "train fraction");

  // shared network/training options (train command)
  auto* cmd_train = app.add_subcommand("train", "train the classifier");
  std::string train_manifest, train_split, train_images;
  int input_size = 32;
  std::vector<int> conv_filters = {8, 16, 32};
  int epochs = 10, batch_size = 32;
  double learning_rate = 0.01, momentum = 0.9;
  cmd_train->add_option("--manifest", train_manifest, "cleaned manifest csv");
  cmd_train->add_option("--split", train_split, "split csv from ingest");
  cmd_train->add_option("--images-root", train_images, "image directory");
  auto* input_size_opt = cmd_train->add_option("--input-size", input_size, "square input size");
  auto* filters_opt = cmd_train->add_option("--filters", conv_filters, "conv filters per block");
  auto* epochs_opt = cmd_train->add_option("--epochs", epochs, "");
  auto* batch_opt = cmd_train->add_option("--batch-size", batch_size, "");
  auto* lr_opt = cmd_train->add_option("--learning-rate", learning_rate, "");
  auto* momentum_opt = cmd_train->add_option("--momentum", momentum, "");

  // evaluate
  auto* cmd_evaluate = app.add_subcommand("evaluate", "confusion matrix on the test split");
  std::string eval_checkpoint, eval_manifest, eval_split, eval_images;
  int top_k = 20;
  cmd_evaluate->add_option("--checkpoint", eval_checkpoint, "");
  cmd_evaluate->add_option("--manifest", eval_manifest, "");
  cmd_evaluate->add_option("--split", eval_split, "");
  cmd_evaluate->add_option("--images-root", eval_images, "");
  cmd_evaluate->add_option("--top", top_k, "misclassifications to report");

  // embed
  auto* cmd_embed = app.add_subcommand("embed", "extract 512-d features");
  std::string embed_checkpoint, embed_manifest, embed_images, embed_split;
  std::string embed_partition = "all";
  bool embed_probs = false;
  cmd_embed->add_option("--checkpoint", embed_checkpoint, "");
  cmd_embed->add_option("--manifest", embed_manifest, "");
  cmd_embed->add_option("--images-root", embed_images, "");
  cmd_embed->add_option("--split", embed_split, "required unless --partition all");
  cmd_embed->add_option("--partition", embed_partition, "all | train | test");
  cmd_embed->add_flag("--probs", embed_probs, "also write nine-way softmax outputs");

  // gradcam
  auto* cmd_gradcam = app.add_subcommand("gradcam", "class activation heat map");
  std::string gc_checkpoint, gc_image, gc_layer;
  int gc_class = -1;
  cmd_gradcam->add_option("--checkpoint", gc_checkpoint, "");
  cmd_gradcam->add_option("--image", gc_image, "ppm image");
  cmd_gradcam->add_option("--class", gc_class, "class index 0..8 (default: predicted)");
  cmd_gradcam->add_option("--layer", gc_layer, "conv layer id (default: last)");

  // tsne
  auto* cmd_tsne = app.add_subcommand("tsne", "project features to 2d/3d");
  std::string tsne_embeddings, tsne_manifest;
  tsne::TsneConfig tsne_config;
  auto* tsne_dims_opt = cmd_tsne->add_option("--dims", tsne_config.out_dims, "2 or 3");
  auto* tsne_perp_opt = cmd_tsne->add_option("--perplexity", tsne_config.perplexity, "");
  auto* tsne_iter_opt = cmd_tsne->add_option("--iterations", tsne_config.iterations, "");
  auto* tsne_lr_opt = cmd_tsne->add_option("--learning-rate", tsne_config.learning_rate, "");
  auto* tsne_exag_opt =
      cmd_tsne->add_option("--exaggeration", tsne_config.exaggeration_factor, "");
  auto* tsne_exag_iters_opt =
      cmd_tsne->add_option("--exaggeration-iters", tsne_config.exaggeration_iters, "");
  auto* tsne_pca_opt = cmd_tsne->add_option("--pca", tsne_config.pca_dims,
                                            "PCA pre-reduction dims (0 = off)");
  cmd_tsne->add_option("--embeddings", tsne_embeddings, "csv or binary embeddings");
  cmd_tsne->add_option("--manifest", tsne_manifest, "for style labels");

  // network / lineage
  auto* cmd_network = app.add_subcommand("network", "max-cosine influence network");
  auto* cmd_lineage = app.add_subcommand("lineage", "chronological influence network");
  std::string net_embeddings, net_manifest, net_labels;
  for (auto* cmd : {cmd_network, cmd_lineage}) {
    cmd->add_option("--embeddings", net_embeddings, "");
    cmd->add_option("--manifest", net_manifest, "");
    cmd->add_option("--labels", net_labels, "optional index,artist_name mapping");
  }

  // render
  auto* cmd_render = app.add_subcommand("render", "svg scatter plot from a tsne csv");
  std::string render_input, render_output = "plot.svg";
  int render_dims = 0;
  cmd_render->add_option("--input", render_input, "scatter csv");
  cmd_render->add_option("--output", render_output, "svg file name (within --out)");
  cmd_render->add_option("--dims", render_dims, "2 or 3 (default: from csv)");

  try {
    app.parse(argc, argv);

    Settings settings;
    if (!config_path.empty()) settings.file = parse_config_file(config_path);
    settings.apply_int(seed_opt, "seed", seed);
    settings.apply(out_opt, "out", out_dir);
    const fs::path out(out_dir);

    if (*cmd_ingest) {
      settings.apply(cmd_ingest->get_option("--manifest"), "manifest", ingest_manifest);
      settings.apply(ingest_images_opt, "images_root", ingest_images);
      settings.apply(ingest_ratio_opt, "ratio", ingest_ratio);
      if (ingest_manifest.empty()) throw ValidationError("ingest: --manifest is required");

      const auto manifest = core::parse_manifest(read_input_file(ingest_manifest));
      std::cout << "parsed " << manifest.paintings.size() << " paintings from "
                << manifest.artists.size() << " artists\n";
      const auto histogram = core::class_histogram(manifest);
      for (int s = 0; s < core::kNumStyles; ++s) {
        std::cout << "  " << core::style_name(static_cast<core::StyleClass>(s)) << ": "
                  << histogram[s] << "\n";
      }

      core::ImageProbe probe;
      if (!ingest_images.empty()) probe = image::file_probe(ingest_images);
      auto [cleaned, report] = core::clean(manifest, probe);
      std::cout << "cleaned: " << cleaned.paintings.size() << " retained, "
                << report.exclusions.size() << " excluded\n";
      if (cleaned.paintings.empty()) {
        throw ValidationError("ingest: no paintings left after cleaning");
      }
      const auto split = core::split(cleaned, ingest_ratio, seed);
      std::size_t n_train = 0;
      for (const auto& [id, part] : split.assignment) {
        n_train += (part == core::Partition::Train) ? 1 : 0;
      }
      std::cout << "split: " << n_train << " train / " << (split.assignment.size() - n_train)
                << " test (ratio " << ingest_ratio << ", seed " << seed << ")\n";

      write_text(out / "manifest_clean.csv", core::manifest_to_csv(cleaned));
      std::string exclusions = "painting_id,rule\n";
      for (const auto& e : report.exclusions) exclusions += e.painting_id + "," + e.rule + "\n";
      write_text(out / "exclusions.csv", exclusions);
      write_text(out / "split.csv", core::split_to_csv(split));
      write_sidecar(out, "ingest",
                    {{"manifest", ingest_manifest},
                     {"images_root", ingest_images},
                     {"ratio", format_double(ingest_ratio)},
                     {"seed", std::to_string(seed)}});
    } else if (*cmd_train) {
      settings.apply(cmd_train->get_option("--manifest"), "manifest", train_manifest);
      settings.apply(cmd_train->get_option("--split"), "split", train_split);
      settings.apply(cmd_train->get_option("--images-root"), "images_root", train_images);
      settings.apply_int(input_size_opt, "input_size", input_size);
      settings.apply_int(epochs_opt, "epochs", epochs);
      settings.apply_int(batch_opt, "batch_size", batch_size);
      settings.apply(lr_opt, "learning_rate", learning_rate);
      settings.apply(momentum_opt, "momentum", momentum);
      if (filters_opt->count() == 0 && settings.file.contains("filters")) {
        conv_filters.clear();
        std::string text = settings.file.at("filters");
        for (std::size_t pos = 0; pos <= text.size();) {
          std::size_t comma = text.find(',', pos);
          if (comma == std::string::npos) comma = text.size();
          conv_filters.push_back(std::stoi(text.substr(pos, comma - pos)));
          pos = comma + 1;
        }
      }
      if (train_manifest.empty() || train_split.empty() || train_images.empty()) {
        throw ValidationError("train: --manifest, --split and --images-root are required");
      }

      const auto manifest = load_manifest_artifact(train_manifest);
      const auto split = core::split_from_csv(read_artifact(train_split, "ingest"));

      nnet::NetworkConfig net;
      net.input_h = net.input_w = input_size;
      net.conv_blocks.clear();
      for (int f : conv_filters) net.conv_blocks.push_back({f});
      net.validate();

      const auto train_data = load_images(manifest, &split, core::Partition::Train,
                                          train_images, net.input_h, net.input_w);
      const auto val_data = load_images(manifest, &split, core::Partition::Test, train_images,
                                        net.input_h, net.input_w);
      if (train_data.dataset.labels.empty()) throw ValidationError("train: empty training split");

      nnet::TrainConfig train_config;
      train_config.batch_size = batch_size;
      train_config.learning_rate = learning_rate;
      train_config.momentum = momentum;
      train_config.epochs = epochs;
      train_config.seed = seed;

      std::cout << "training on " << train_data.dataset.labels.size() << " images, validating on "
                << val_data.dataset.labels.size() << "\n";
      auto [params, history] = nnet::train(train_data.dataset, val_data.dataset, train_config, net);
      for (std::size_t e = 0; e < history.epochs.size(); ++e) {
        const auto& st = history.epochs[e];
        std::cout << "epoch " << (e + 1) << ": train acc " << st.train_accuracy << ", val acc "
                  << st.val_accuracy << "\n";
      }
      std::cout << "best epoch: " << (history.best_epoch + 1) << "\n";

      nnet::save_params(out / "checkpoint.sgw", params);
      write_text(out / "history.csv", history_to_csv(history));
      write_sidecar(out, "train",
                    {{"manifest", train_manifest},
                     {"split", train_split},
                     {"images_root", train_images},
                     {"input_size", std::to_string(input_size)},
                     {"epochs", std::to_string(epochs)},
                     {"batch_size", std::to_string(batch_size)},
                     {"learning_rate", format_double(learning_rate)},
                     {"momentum", format_double(momentum)},
                     {"best_epoch", std::to_string(history.best_epoch + 1)},
                     {"seed", std::to_string(seed)}});
    } else if (*cmd_evaluate) {
      settings.apply(cmd_evaluate->get_option("--checkpoint"), "checkpoint", eval_checkpoint);
      settings.apply(cmd_evaluate->get_option("--manifest"), "manifest", eval_manifest);
      settings.apply(cmd_evaluate->get_option("--split"), "split", eval_split);
      settings.apply(cmd_evaluate->get_option("--images-root"), "images_root", eval_images);
      if (eval_checkpoint.empty() || eval_manifest.empty() || eval_split.empty() ||
          eval_images.empty()) {
        throw ValidationError(
            "evaluate: --checkpoint, --manifest, --split and --images-root are required");
      }
      if (!fs::exists(eval_checkpoint)) {
        throw MissingArtifactError("missing artifact: " + eval_checkpoint +
                                   " (produce it with `artstyle train`)");
      }
      const auto params = nnet::load_params(eval_checkpoint);
      const auto manifest = load_manifest_artifact(eval_manifest);
      const auto split = core::split_from_csv(read_artifact(eval_split, "ingest"));
      const auto test = load_images(manifest, &split, core::Partition::Test, eval_images,
                                    params.config.input_h, params.config.input_w);
      if (test.dataset.labels.empty()) throw ValidationError("evaluate: empty test split");

      std::vector<eval::Prediction> predictions;
      const std::size_t stride =
          static_cast<std::size_t>(params.config.input_h) * params.config.input_w * 3;
      for (std::size_t i = 0; i < test.dataset.labels.size(); ++i) {
        Tensor img({static_cast<std::size_t>(params.config.input_h),
                    static_cast<std::size_t>(params.config.input_w), 3});
        std::copy_n(test.dataset.images.data.begin() + i * stride, stride, img.data.begin());
        auto [logits, cache] = nnet::forward(params, img);
        const Tensor probs = nnet::softmax(logits);
        eval::Prediction pred;
        pred.painting_id = test.painting_ids[i];
        pred.true_class = static_cast<core::StyleClass>(test.dataset.labels[i]);
        std::copy_n(probs.data.begin(), core::kNumStyles, pred.probabilities.begin());
        predictions.push_back(std::move(pred));
      }

      const auto [accuracy, matrix] = eval::evaluate(predictions);
      std::cout << "test accuracy: " << accuracy << " on " << predictions.size() << " paintings\n";
      write_text(out / "confusion.csv", eval::confusion_to_csv(matrix));
      write_text(out / "misclassified.csv",
                 eval::misclassifications_to_csv(
                     eval::top_misclassifications(predictions, top_k)));
      write_sidecar(out, "evaluate",
                    {{"checkpoint", eval_checkpoint},
                     {"manifest", eval_manifest},
                     {"split", eval_split},
                     {"accuracy", format_double(accuracy)},
                     {"seed", std::to_string(seed)}});
    } else if (*cmd_embed) {
      settings.apply(cmd_embed->get_option("--checkpoint"), "checkpoint", embed_checkpoint);
      settings.apply(cmd_embed->get_option("--manifest"), "manifest", embed_manifest);
      settings.apply(cmd_embed->get_option("--images-root"), "images_root", embed_images);
      if (embed_checkpoint.empty() || embed_manifest.empty() || embed_images.empty()) {
        throw ValidationError("embed: --checkpoint, --manifest and --images-root are required");
      }
      if (!fs::exists(embed_checkpoint)) {
        throw MissingArtifactError("missing artifact: " + embed_checkpoint +
                                   " (produce it with `artstyle train`)");
      }
      const auto params = nnet::load_params(embed_checkpoint);
      const auto manifest = load_manifest_artifact(embed_manifest);

      std::optional<core::Partition> partition;
      core::SplitAssignment split;
      if (embed_partition != "all") {
        if (embed_partition != "train" && embed_partition != "test") {
          throw ValidationError("embed: --partition must be all, train or test");
        }
        if (embed_split.empty()) {
          throw ValidationError("embed: --split is required with --partition " + embed_partition);
        }
        split = core::split_from_csv(read_artifact(embed_split, "ingest"));
        partition = (embed_partition == "train") ? core::Partition::Train : core::Partition::Test;
      }
      const auto loaded = load_images(manifest, partition ? &split : nullptr, partition,
                                      embed_images, params.config.input_h, params.config.input_w);
      if (loaded.painting_ids.empty()) throw ValidationError("embed: no paintings selected");

      std::vector<embed::EmbeddingRecord> records;
      embed::FeatureTable probs_table;
      probs_table.dim = core::kNumStyles;
      const std::size_t stride =
          static_cast<std::size_t>(params.config.input_h) * params.config.input_w * 3;
      for (std::size_t i = 0; i < loaded.painting_ids.size(); ++i) {
        Tensor img({static_cast<std::size_t>(params.config.input_h),
                    static_cast<std::size_t>(params.config.input_w), 3});
        std::copy_n(loaded.dataset.images.data.begin() + i * stride, stride, img.data.begin());
        records.push_back({loaded.painting_ids[i], nnet::extract_features(params, img)});
        if (embed_probs) {
          auto [logits, cache] = nnet::forward(params, img);
          const Tensor probs = nnet::softmax(logits);
          probs_table.ids.push_back(loaded.painting_ids[i]);
          probs_table.rows.emplace_back(probs.data.begin(), probs.data.end());
        }
      }
      write_text(out / "embeddings.csv", embed::embeddings_to_csv(records));
      write_text(out / "embeddings.aemb", embed::embeddings_to_binary(records));
      if (embed_probs) write_text(out / "probs.csv", embed::feature_table_to_csv(probs_table));
      std::cout << "embedded " << records.size() << " paintings\n";
      write_sidecar(out, "embed",
                    {{"checkpoint", embed_checkpoint},
                     {"manifest", embed_manifest},
                     {"partition", embed_partition},
                     {"seed", std::to_string(seed)}});
    } else if (*cmd_gradcam) {
      settings.apply(cmd_gradcam->get_option("--checkpoint"), "checkpoint", gc_checkpoint);
      if (gc_checkpoint.empty() || gc_image.empty()) {
        throw ValidationError("gradcam: --checkpoint and --image are required");
      }
      if (!fs::exists(gc_checkpoint)) {
        throw MissingArtifactError("missing artifact: " + gc_checkpoint +
                                   " (produce it with `artstyle train`)");
      }
      const auto params = nnet::load_params(gc_checkpoint);
      if (params.config.conv_blocks.empty()) {
        throw ValidationError("gradcam: checkpoint network has no convolution layers");
      }
      image::Image img = image::read_ppm(gc_image);
      img = image::resize_bilinear(img, params.config.input_w, params.config.input_h);
      const Tensor input = image::to_tensor(img);

      auto [logits, cache] = nnet::forward(params, input);
      const Tensor probs = nnet::softmax(logits);
      int cls = gc_class;
      if (cls < 0) {
        cls = 0;
        for (int j = 1; j < core::kNumStyles; ++j) {
          if (probs.data[j] > probs.data[cls]) cls = j;
        }
      }
      const std::string layer =
          gc_layer.empty() ? "conv" + std::to_string(params.config.conv_blocks.size()) : gc_layer;
      const auto map = nnet::grad_cam(params, input, cls, layer, /*upsample=*/true);
      std::cout << "class " << core::style_name(static_cast<core::StyleClass>(cls))
                << " probability " << probs.data[cls] << ", layer " << layer << "\n";

      // normalize by the peak so the files span [0,1]
      std::vector<double> up = map.upsampled->data;
      double peak = 0.0;
      for (double v : up) peak = std::max(peak, v);
      if (peak > 0.0) {
        for (double& v : up) v /= peak;
      }
      image::write_pgm(out / "gradcam_map.pgm", up, params.config.input_w,
                       params.config.input_h);

      image::Image overlay = img;
      for (int y = 0; y < overlay.height; ++y) {
        for (int x = 0; x < overlay.width; ++x) {
          const double v = up[static_cast<std::size_t>(y) * overlay.width + x];
          unsigned char* px = overlay.at(x, y);
          const double heat_r = v, heat_g = 0.35 * v, heat_b = 1.0 - v;
          px[0] = static_cast<unsigned char>(std::lround(0.55 * px[0] + 0.45 * 255.0 * heat_r));
          px[1] = static_cast<unsigned char>(std::lround(0.55 * px[1] + 0.45 * 255.0 * heat_g));
          px[2] = static_cast<unsigned char>(std::lround(0.55 * px[2] + 0.45 * 255.0 * heat_b));
        }
      }
      image::write_ppm(out / "gradcam_overlay.ppm", overlay);
      write_sidecar(out, "gradcam",
                    {{"checkpoint", gc_checkpoint},
                     {"image", gc_image},
                     {"class", std::to_string(cls)},
                     {"layer", layer},
                     {"seed", std::to_string(seed)}});
    } else if (*cmd_tsne) {
      settings.apply(cmd_tsne->get_option("--embeddings"), "embeddings", tsne_embeddings);
      settings.apply(cmd_tsne->get_option("--manifest"), "manifest", tsne_manifest);
      settings.apply_int(tsne_dims_opt, "tsne_dims", tsne_config.out_dims);
      settings.apply(tsne_perp_opt, "perplexity", tsne_config.perplexity);
      settings.apply_int(tsne_iter_opt, "tsne_iterations", tsne_config.iterations);
      settings.apply(tsne_lr_opt, "tsne_learning_rate", tsne_config.learning_rate);
      settings.apply(tsne_exag_opt, "exaggeration", tsne_config.exaggeration_factor);
      settings.apply_int(tsne_exag_iters_opt, "exaggeration_iters",
                         tsne_config.exaggeration_iters);
      settings.apply_int(tsne_pca_opt, "pca_dims", tsne_config.pca_dims);
      if (tsne_embeddings.empty() || tsne_manifest.empty()) {
        throw ValidationError("tsne: --embeddings and --manifest are required");
      }
      tsne_config.seed = seed;

      const auto table = load_feature_table(tsne_embeddings);
      const auto manifest = load_manifest_artifact(tsne_manifest);
      std::map<std::string, core::StyleClass> styles;
      for (const auto& p : manifest.paintings) styles[p.painting_id] = p.style;

      const auto result = tsne::run_tsne(table.rows, tsne_config);
      print_warnings(result.warnings);

      std::vector<render::ScatterPoint> points;
      for (std::size_t i = 0; i < table.ids.size(); ++i) {
        const auto it = styles.find(table.ids[i]);
        if (it == styles.end()) {
          throw ValidationError("tsne: painting '" + table.ids[i] + "' not in manifest");
        }
        render::ScatterPoint p;
        p.painting_id = table.ids[i];
        p.x = result.y[i][0];
        p.y = result.y[i][1];
        if (tsne_config.out_dims == 3) {
          p.z = result.y[i][2];
          p.has_z = true;
        }
        p.style = it->second;
        points.push_back(std::move(p));
      }
      write_text(out / "tsne.csv", render::scatter_to_csv(points, tsne_config.out_dims == 3));
      write_text(out / "kl_history.csv", tsne::kl_history_to_csv(result.kl_history));
      std::cout << "embedded " << points.size() << " paintings to " << tsne_config.out_dims
                << "d, final KL " << result.kl_history.back() << "\n";
      write_sidecar(out, "tsne",
                    {{"embeddings", tsne_embeddings},
                     {"manifest", tsne_manifest},
                     {"dims", std::to_string(tsne_config.out_dims)},
                     {"perplexity", format_double(tsne_config.perplexity)},
                     {"iterations", std::to_string(tsne_config.iterations)},
                     {"learning_rate", format_double(tsne_config.learning_rate)},
                     {"exaggeration", format_double(tsne_config.exaggeration_factor)},
                     {"exaggeration_iters", std::to_string(tsne_config.exaggeration_iters)},
                     {"pca_dims", std::to_string(tsne_config.pca_dims)},
                     {"seed", std::to_string(seed)}});
    } else if (*cmd_network || *cmd_lineage) {
      const bool lineage = static_cast<bool>(*cmd_lineage);
      CLI::App* cmd = lineage ? cmd_lineage : cmd_network;
      settings.apply(cmd->get_option("--embeddings"), "embeddings", net_embeddings);
      settings.apply(cmd->get_option("--manifest"), "manifest", net_manifest);
      if (net_embeddings.empty() || net_manifest.empty()) {
        throw ValidationError("network: --embeddings and --manifest are required");
      }
      const auto embeddings = load_embeddings_file(net_embeddings);
      const auto manifest = load_manifest_artifact(net_manifest);
      auto profiles = embed::aggregate_artists(embeddings, manifest);

      graph::LabelMap labels;
      if (!net_labels.empty()) labels = build_label_map(net_labels, manifest);

      std::map<std::string, std::string> meta{{"embeddings", net_embeddings},
                                              {"manifest", net_manifest},
                                              {"seed", std::to_string(seed)}};
      if (lineage) {
        std::vector<embed::ArtistProfile> dated;
        for (auto& p : profiles) {
          if (p.mean_year) {
            dated.push_back(std::move(p));
          } else {
            std::cerr << "warning: artist '" << p.artist_id
                      << "' has no production years; excluded from the lineage\n";
          }
        }
        const auto build = graph::build_lineage(dated);
        print_warnings(build.warnings);
        write_text(out / "lineage.dot", graph::export_graph(build.graph, graph::Format::Dot, labels));
        write_text(out / "lineage.json",
                   graph::export_graph(build.graph, graph::Format::Json, labels));
        const auto layout = graph::layout_timeline(build.graph);
        std::string layout_csv = "artist_id,x,y\n";
        for (const auto& [id, xy] : layout) {
          layout_csv += id + "," + format_double(xy.first) + "," + format_double(xy.second) + "\n";
        }
        write_text(out / "lineage_layout.csv", layout_csv);
        std::cout << "lineage: " << build.graph.nodes.size() << " artists, "
                  << build.graph.edges.size() << " edges\n";
        write_sidecar(out, "lineage", meta);
      } else {
        const auto build = graph::build_similarity_network(profiles);
        print_warnings(build.warnings);
        write_text(out / "influence.dot",
                   graph::export_graph(build.graph, graph::Format::Dot, labels));
        write_text(out / "influence.json",
                   graph::export_graph(build.graph, graph::Format::Json, labels));
        std::cout << "network: " << build.graph.nodes.size() << " artists, "
                  << build.graph.edges.size() << " edges\n";
        write_sidecar(out, "network", meta);
      }
    } else if (*cmd_render) {
      if (render_input.empty()) throw ValidationError("render: --input is required");
      const auto points = render::scatter_from_csv(read_artifact(render_input, "tsne"));
      int dims = render_dims;
      if (dims == 0) dims = (!points.empty() && points[0].has_z) ? 3 : 2;
      write_text(out / render_output, render::render_scatter_svg(points, dims));
      std::cout << "rendered " << points.size() << " points to " << (out / render_output).string()
                << "\n";
      write_sidecar(out, "render",
                    {{"input", render_input},
                     {"output", render_output},
                     {"dims", std::to_string(dims)},
                     {"seed", std::to_string(seed)}});
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const MissingArtifactError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
