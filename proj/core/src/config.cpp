#include "zevi/config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "text_io.hpp"
#include "zevi/errors.hpp"

namespace zevi {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

using Setter = std::function<void(const std::string&, long)>;

void parse_kv_file(const std::string& path,
                   const std::map<std::string, Setter>& setters) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open config file: " + path);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string body = trim(line);
    if (body.empty()) continue;
    std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected 'key = value'", lineno);
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end())
      throw ParseError("unknown key '" + key + "'", lineno);
    if (value.empty()) throw ParseError("empty value for '" + key + "'", lineno);
    it->second(value, lineno);
  }
}

Setter set_double(double& slot) {
  return [&slot](const std::string& v, long line) {
    slot = detail::parse_double(v, line);
  };
}

Setter set_int(int& slot) {
  return [&slot](const std::string& v, long line) {
    slot = static_cast<int>(detail::parse_long(v, line));
  };
}

Setter set_seed(std::uint64_t& slot) {
  return [&slot](const std::string& v, long line) {
    slot = static_cast<std::uint64_t>(detail::parse_long(v, line));
  };
}

}  // namespace

TrainConfig read_train_config(const std::string& path) {
  TrainConfig cfg;
  parse_kv_file(path, {
                          {"alpha", set_double(cfg.alpha)},
                          {"learning_rate", set_double(cfg.learning_rate)},
                          {"batch_size", set_int(cfg.batch_size)},
                          {"epochs", set_int(cfg.epochs)},
                          {"mu_init", set_double(cfg.mu_init)},
                          {"seed", set_seed(cfg.seed)},
                      });
  validate_config(cfg);
  return cfg;
}

SynthConfig read_synth_config(const std::string& path) {
  SynthConfig cfg;
  parse_kv_file(path, {
                          {"dim", set_int(cfg.dim)},
                          {"speakers", set_int(cfg.speakers)},
                          {"utts_per_speaker", set_int(cfg.utts_per_speaker)},
                          {"attr_offset", set_double(cfg.attr_offset)},
                          {"speaker_spread", set_double(cfg.speaker_spread)},
                          {"residual_noise", set_double(cfg.residual_noise)},
                          {"warp", set_double(cfg.warp)},
                          {"seed", set_seed(cfg.seed)},
                      });
  return cfg;
}

}  // namespace zevi
