#include "mixagg/train_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "mixagg/errors.hpp"

namespace mixagg {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename U>
U parse_uint(std::string_view key, std::string_view value) {
  U out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ParseError("'" + std::string(key) + "' expects a non-negative integer, got '" +
                     std::string(value) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  const std::string s(value);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError("'" + std::string(key) + "' expects a number, got '" + s + "'");
}

std::string real_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  loss.validate();
  optim.validate();
  if (batch.places < 2) throw ParamError("P must be >= 2 so every batch has negatives");
  if (batch.images_per_place < 2) throw ParamError("K must be >= 2 so every batch has positives");
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out << "seed=" << seed << '\n'
      << "P=" << batch.places << '\n'
      << "K=" << batch.images_per_place << '\n'
      << "lr=" << real_text(optim.base_lr) << '\n'
      << "momentum=" << real_text(optim.momentum) << '\n'
      << "wd=" << real_text(optim.weight_decay) << '\n'
      << "lr_decay_every=" << optim.lr_decay_every << '\n'
      << "lr_divisor=" << real_text(optim.lr_divisor) << '\n'
      << "epochs=" << epochs << '\n'
      << "steps_per_epoch=" << steps_per_epoch << '\n'
      << "alpha=" << real_text(loss.alpha) << '\n'
      << "beta=" << real_text(loss.beta) << '\n'
      << "lambda=" << real_text(loss.lambda) << '\n'
      << "epsilon=" << real_text(loss.epsilon) << '\n'
      << model.to_text();
  return out.str();
}

TrainConfig TrainConfig::parse(std::string_view text) {
  TrainConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    const auto line = trim(text.substr(0, eol));
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", line_no);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!seen.emplace(key).second) throw ParseError("repeated key '" + std::string(key) + "'", line_no);
    try {
      if (key == "seed") cfg.seed = parse_uint<std::uint64_t>(key, value);
      else if (key == "P") cfg.batch.places = parse_uint<std::size_t>(key, value);
      else if (key == "K") cfg.batch.images_per_place = parse_uint<std::size_t>(key, value);
      else if (key == "lr") cfg.optim.base_lr = cfg.optim.lr = parse_real(key, value);
      else if (key == "momentum") cfg.optim.momentum = parse_real(key, value);
      else if (key == "wd") cfg.optim.weight_decay = parse_real(key, value);
      else if (key == "lr_decay_every") cfg.optim.lr_decay_every = parse_uint<std::size_t>(key, value);
      else if (key == "lr_divisor") cfg.optim.lr_divisor = parse_real(key, value);
      else if (key == "epochs") cfg.epochs = parse_uint<std::size_t>(key, value);
      else if (key == "steps_per_epoch") cfg.steps_per_epoch = parse_uint<std::size_t>(key, value);
      else if (key == "alpha") cfg.loss.alpha = parse_real(key, value);
      else if (key == "beta") cfg.loss.beta = parse_real(key, value);
      else if (key == "lambda") cfg.loss.lambda = parse_real(key, value);
      else if (key == "epsilon") cfg.loss.epsilon = parse_real(key, value);
      else if (!cfg.model.set(key, value)) throw ParseError("unknown key '" + std::string(key) + "'");
    } catch (const ParseError& e) {
      if (e.line() != 0) throw;
      throw ParseError(e.what(), line_no);
    }
  }
  cfg.optim.max_epochs = cfg.epochs;
  cfg.validate();
  return cfg;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace mixagg
