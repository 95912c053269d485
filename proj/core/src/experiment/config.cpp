#include "wordspot/experiment/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "wordspot/error.hpp"
#include "wordspot/text.hpp"

namespace wordspot::experiment {
namespace {

[[noreturn]] void bad(const std::string& message) {
  throw Error(ErrorCode::kBadConfig, message);
}

std::uint64_t to_u64(const std::string& key, std::string_view v) {
  std::uint64_t n = 0;
  if (!text::parse_uint(v, n)) bad(key + ": expected a non-negative integer");
  return n;
}

int to_int(const std::string& key, std::string_view v) {
  long long n = 0;
  if (!text::parse_int(v, n) || n < 1 || n > 1 << 20) {
    bad(key + ": expected a positive integer");
  }
  return static_cast<int>(n);
}

double to_double(const std::string& key, std::string_view v) {
  double d = 0.0;
  if (!text::parse_double(v, d)) bad(key + ": expected a number");
  return d;
}

bool to_bool(const std::string& key, std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  bad(key + ": expected true or false");
}

std::filesystem::path to_path(std::string_view v, const std::filesystem::path& base) {
  std::filesystem::path p{std::string(v)};
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

using Setter = std::function<void(TrainConfig&, const std::string&, std::string_view,
                                  const std::filesystem::path&)>;

const std::map<std::string, Setter>& setters() {
  using P = const std::filesystem::path&;
  using K = const std::string&;
  static const std::map<std::string, Setter> table = {
      {"model.arch",
       [](TrainConfig& c, K k, std::string_view v, P) {
         const auto kind = arch::parse_arch(v);
         if (!kind) bad(k + ": unknown architecture '" + std::string(v) + "'");
         c.arch = *kind;
       }},
      {"model.width_divisor",
       [](TrainConfig& c, K k, std::string_view v, P) { c.width_divisor = to_int(k, v); }},
      {"model.resnet_stem_stride",
       [](TrainConfig& c, K k, std::string_view v, P) {
         c.resnet_stem_stride = to_int(k, v);
       }},
      {"model.dropout",
       [](TrainConfig& c, K k, std::string_view v, P) { c.dropout = to_double(k, v); }},
      {"model.init_fan",
       [](TrainConfig& c, K k, std::string_view v, P) {
         if (v == "fan_in") {
           c.init_fan = arch::InitFan::kFanIn;
         } else if (v == "layer_weights") {
           c.init_fan = arch::InitFan::kLayerWeights;
         } else {
           bad(k + ": expected fan_in or layer_weights");
         }
       }},
      {"tpp.levels",
       [](TrainConfig& c, K k, std::string_view v, P) { c.tpp.levels = to_int(k, v); }},
      {"tpp.pooling",
       [](TrainConfig& c, K k, std::string_view v, P) {
         if (v == "max") {
           c.tpp.pooling = diff::TppPooling::kMax;
         } else if (v == "average") {
           c.tpp.pooling = diff::TppPooling::kAverage;
         } else {
           bad(k + ": expected max or average");
         }
       }},
      {"phoc.alphabet",
       [](TrainConfig& c, K, std::string_view v, P) { c.phoc.alphabet = std::string(v); }},
      {"phoc.levels",
       [](TrainConfig& c, K k, std::string_view v, P) {
         try {
           c.phoc.levels = phoc::parse_levels(v);
         } catch (const Error& e) {
           bad(k + ": " + e.what());
         }
       }},
      {"phoc.lowercase",
       [](TrainConfig& c, K k, std::string_view v, P) { c.phoc.lowercase = to_bool(k, v); }},
      {"train.learning_rate",
       [](TrainConfig& c, K k, std::string_view v, P) { c.learning_rate = to_double(k, v); }},
      {"train.lr_step",
       [](TrainConfig& c, K k, std::string_view v, P) { c.lr_step = to_u64(k, v); }},
      {"train.total_iterations",
       [](TrainConfig& c, K k, std::string_view v, P) { c.total_iterations = to_u64(k, v); }},
      {"train.batch_size",
       [](TrainConfig& c, K k, std::string_view v, P) { c.batch_size = to_u64(k, v); }},
      {"train.seed",
       [](TrainConfig& c, K k, std::string_view v, P) { c.seed = to_u64(k, v); }},
      {"train.checkpoint_period",
       [](TrainConfig& c, K k, std::string_view v, P) { c.checkpoint_period = to_u64(k, v); }},
      {"data.train_manifest",
       [](TrainConfig& c, K, std::string_view v, P b) { c.train_manifest = to_path(v, b); }},
      {"data.test_manifest",
       [](TrainConfig& c, K, std::string_view v, P b) { c.test_manifest = to_path(v, b); }},
      {"data.stop_words",
       [](TrainConfig& c, K, std::string_view v, P b) { c.stop_words = to_path(v, b); }},
      {"augment.target_total",
       [](TrainConfig& c, K k, std::string_view v, P) { c.augment.target_total = to_u64(k, v); }},
      {"augment.rotation_deg",
       [](TrainConfig& c, K k, std::string_view v, P) { c.augment.rotation_deg = to_double(k, v); }},
      {"augment.shear_deg",
       [](TrainConfig& c, K k, std::string_view v, P) { c.augment.shear_deg = to_double(k, v); }},
      {"augment.scale_min",
       [](TrainConfig& c, K k, std::string_view v, P) { c.augment.scale_min = to_double(k, v); }},
      {"augment.scale_max",
       [](TrainConfig& c, K k, std::string_view v, P) { c.augment.scale_max = to_double(k, v); }},
      {"augment.translate_frac",
       [](TrainConfig& c, K k, std::string_view v, P) {
         c.augment.translate_frac = to_double(k, v);
       }},
      {"augment.seed",
       [](TrainConfig& c, K k, std::string_view v, P) { c.augment.seed = to_u64(k, v); }},
      {"output.dir",
       [](TrainConfig& c, K, std::string_view v, P b) { c.output_dir = to_path(v, b); }},
  };
  return table;
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.batch_size < 1) bad("train.batch_size must be at least 1");
  if (c.lr_step > c.total_iterations) {
    bad("train.lr_step (" + std::to_string(c.lr_step) +
        ") exceeds train.total_iterations (" + std::to_string(c.total_iterations) + ")");
  }
  if (!(c.learning_rate > 0.0)) bad("train.learning_rate must be positive");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) bad("model.dropout must lie in [0, 1)");
  if (c.augment.target_total < 1) bad("augment.target_total must be positive");
  if (!(c.augment.scale_min > 0.0 && c.augment.scale_min <= c.augment.scale_max)) {
    bad("augment.scale_min / scale_max out of order");
  }
  try {
    phoc::validate(c.phoc);
  } catch (const Error& e) {
    bad(std::string("phoc: ") + e.what());
  }
}

TrainConfig parse_config(std::string_view source, const std::filesystem::path& base_dir) {
  TrainConfig config;
  std::set<std::string> seen;
  std::string section;
  std::size_t line_number = 0;
  for (const auto raw : text::split(source, '\n')) {
    ++line_number;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = text::trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_number) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') bad(where + "unterminated section header");
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) bad(where + "expected 'key = value'");
    std::string key(text::trim(line.substr(0, eq)));
    const auto value = text::trim(line.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    const auto it = setters().find(key);
    if (it == setters().end()) bad(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) bad(where + "duplicate key '" + key + "'");
    it->second(config, key, value, base_dir);
  }
  validate(config);
  return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kBadConfig, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

std::string format_config(const TrainConfig& c) {
  std::ostringstream out;
  const auto levels = [&] {
    std::string s;
    for (std::size_t i = 0; i < c.phoc.levels.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(c.phoc.levels[i]);
    }
    return s;
  }();
  out << "[model]\n"
      << "arch = " << arch::to_string(c.arch) << '\n'
      << "width_divisor = " << c.width_divisor << '\n'
      << "resnet_stem_stride = " << c.resnet_stem_stride << '\n'
      << "dropout = " << text::format_double(c.dropout) << '\n'
      << "init_fan = "
      << (c.init_fan == arch::InitFan::kFanIn ? "fan_in" : "layer_weights") << '\n'
      << "\n[tpp]\n"
      << "levels = " << c.tpp.levels << '\n'
      << "pooling = " << (c.tpp.pooling == diff::TppPooling::kMax ? "max" : "average")
      << '\n'
      << "\n[phoc]\n"
      << "alphabet = " << c.phoc.alphabet << '\n'
      << "levels = " << levels << '\n'
      << "lowercase = " << (c.phoc.lowercase ? "true" : "false") << '\n'
      << "\n[train]\n"
      << "learning_rate = " << text::format_double(c.learning_rate) << '\n'
      << "lr_step = " << c.lr_step << '\n'
      << "total_iterations = " << c.total_iterations << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "seed = " << c.seed << '\n'
      << "checkpoint_period = " << c.checkpoint_period << '\n'
      << "\n[data]\n";
  if (!c.train_manifest.empty()) out << "train_manifest = " << c.train_manifest.generic_string() << '\n';
  if (!c.test_manifest.empty()) out << "test_manifest = " << c.test_manifest.generic_string() << '\n';
  if (!c.stop_words.empty()) out << "stop_words = " << c.stop_words.generic_string() << '\n';
  out << "\n[augment]\n"
      << "target_total = " << c.augment.target_total << '\n'
      << "rotation_deg = " << text::format_double(c.augment.rotation_deg) << '\n'
      << "shear_deg = " << text::format_double(c.augment.shear_deg) << '\n'
      << "scale_min = " << text::format_double(c.augment.scale_min) << '\n'
      << "scale_max = " << text::format_double(c.augment.scale_max) << '\n'
      << "translate_frac = " << text::format_double(c.augment.translate_frac) << '\n'
      << "seed = " << c.augment.seed << '\n';
  if (!c.output_dir.empty()) {
    out << "\n[output]\n" << "dir = " << c.output_dir.generic_string() << '\n';
  }
  return out.str();
}

arch::ArchOptions arch_options(const TrainConfig& c) {
  arch::ArchOptions options;
  options.phoc_dim = c.phoc.dimension();
  options.width_divisor = c.width_divisor;
  options.tpp = c.tpp;
  options.resnet_stem_stride = c.resnet_stem_stride;
  options.dropout = c.dropout;
  return options;
}

arch::LayerGraph build_network(const TrainConfig& c) {
  return arch::build(c.arch, arch_options(c));
}

}  // namespace wordspot::experiment
