#include "iegan/config.hpp"

#include <fstream>
#include <sstream>

#include "iegan/common.hpp"

namespace iegan {

void EncoderConfig::validate() const {
  if (image_size <= 0 || image_size % 32 != 0) {
    throw ConfigError("image_size must be a positive multiple of 32, got " +
                      std::to_string(image_size));
  }
  if (ch <= 0 || ch % 4 != 0) {
    throw ConfigError("ch must be a positive multiple of 4, got " +
                      std::to_string(ch));
  }
}

void TrainConfig::validate() const {
  enc.validate();
  if (crop_size > resize_size) {
    throw ConfigError("crop_size must be <= resize_size");
  }
  if (lr <= 0.0) {
    throw ConfigError("lr must be positive");
  }
  if (batch_size <= 0) {
    throw ConfigError("batch_size must be positive");
  }
  if (iterations < 0) {
    throw ConfigError("iterations must be nonnegative");
  }
  if (weights.lambda_feature < 0 || weights.lambda_adversarial < 0 ||
      weights.lambda_cycle < 0 || weights.lambda_identity < 0) {
    throw ConfigError("loss weights must be nonnegative");
  }
}

namespace {

int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    int64_t v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid integer for key '" + key + "': " + value);
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for key '" + key + "': " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("invalid bool for key '" + key + "': " + value);
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  auto& t = train;
  if (key == "ch") {
    t.enc.ch = parse_int(key, value);
  } else if (key == "image_size") {
    t.enc.image_size = parse_int(key, value);
  } else if (key == "use_dsi") {
    t.enc.use_dsi = parse_bool(key, value);
  } else if (key == "use_lat") {
    t.enc.use_lat = parse_bool(key, value);
  } else if (key == "lambda1") {
    t.weights.lambda_feature = parse_double(key, value);
  } else if (key == "lambda2") {
    t.weights.lambda_adversarial = parse_double(key, value);
  } else if (key == "lambda3") {
    t.weights.lambda_cycle = parse_double(key, value);
  } else if (key == "lambda4") {
    t.weights.lambda_identity = parse_double(key, value);
  } else if (key == "iterations") {
    t.iterations = parse_int(key, value);
  } else if (key == "batch_size") {
    t.batch_size = parse_int(key, value);
  } else if (key == "lr") {
    t.lr = parse_double(key, value);
  } else if (key == "weight_decay") {
    t.weight_decay = parse_double(key, value);
  } else if (key == "adam_beta1") {
    t.adam_beta1 = parse_double(key, value);
  } else if (key == "adam_beta2") {
    t.adam_beta2 = parse_double(key, value);
  } else if (key == "resize_size") {
    t.resize_size = parse_int(key, value);
  } else if (key == "crop_size") {
    t.crop_size = parse_int(key, value);
  } else if (key == "hflip") {
    t.hflip = parse_bool(key, value);
  } else if (key == "seed") {
    t.seed = static_cast<uint64_t>(parse_int(key, value));
  } else if (key == "checkpoint_every") {
    t.checkpoint_every = parse_int(key, value);
  } else if (key == "cam_in_adv") {
    t.cam_in_adv = parse_bool(key, value);
  } else if (key == "profile") {
    if (value == "desk") {
      apply_desk_profile();
    } else if (value == "paper") {
      // paper defaults are the construction defaults
    } else {
      throw ConfigError("unknown profile: " + value);
    }
  } else {
    throw ConfigError("unknown config key: " + key);
  }
}

void RunConfig::apply_desk_profile() {
  train.enc.ch = 16;
  train.enc.image_size = 64;
  train.iterations = 2000;
  train.batch_size = 4;
  train.resize_size = 72;
  train.crop_size = 64;
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key=value, got: " + line);
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.train.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

std::string RunConfig::to_text() const {
  const auto& t = train;
  std::ostringstream out;
  out << "ch = " << t.enc.ch << "\n";
  out << "image_size = " << t.enc.image_size << "\n";
  out << "use_dsi = " << (t.enc.use_dsi ? "true" : "false") << "\n";
  out << "use_lat = " << (t.enc.use_lat ? "true" : "false") << "\n";
  out << "lambda1 = " << t.weights.lambda_feature << "\n";
  out << "lambda2 = " << t.weights.lambda_adversarial << "\n";
  out << "lambda3 = " << t.weights.lambda_cycle << "\n";
  out << "lambda4 = " << t.weights.lambda_identity << "\n";
  out << "iterations = " << t.iterations << "\n";
  out << "batch_size = " << t.batch_size << "\n";
  out << "lr = " << t.lr << "\n";
  out << "weight_decay = " << t.weight_decay << "\n";
  out << "adam_beta1 = " << t.adam_beta1 << "\n";
  out << "adam_beta2 = " << t.adam_beta2 << "\n";
  out << "resize_size = " << t.resize_size << "\n";
  out << "crop_size = " << t.crop_size << "\n";
  out << "hflip = " << (t.hflip ? "true" : "false") << "\n";
  out << "seed = " << t.seed << "\n";
  out << "checkpoint_every = " << t.checkpoint_every << "\n";
  out << "cam_in_adv = " << (t.cam_in_adv ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace iegan
