#include "ecnoise/params_io.hpp"

#include <cstdio>
#include <sstream>

namespace ecnoise {

ModelParams params_from_kv(const KeyValue& kv) {
  ModelParams p;
  p.B = kv.number("B");
  p.alpha = kv.number("alpha");
  p.theta_pos = {kv.number("c1_pos"), kv.number("c2_pos"), kv.number("c3_pos")};
  p.theta_neg = {kv.number("c1_neg"), kv.number("c2_neg"), kv.number("c3_neg")};
  p.cv_pos = kv.number("cv_pos");
  p.cv_neg = kv.number("cv_neg");
  p.refractory_us = kv.number("refractory_us");
  p.lambda_max = kv.number_or("lambda_max", p.lambda_max);
  return p;
}

KeyValue params_to_kv(const ModelParams& p) {
  KeyValue kv;
  kv.set("B", p.B);
  kv.set("alpha", p.alpha);
  kv.set("c1_pos", p.theta_pos.c1);
  kv.set("c2_pos", p.theta_pos.c2);
  kv.set("c3_pos", p.theta_pos.c3);
  kv.set("c1_neg", p.theta_neg.c1);
  kv.set("c2_neg", p.theta_neg.c2);
  kv.set("c3_neg", p.theta_neg.c3);
  kv.set("cv_pos", p.cv_pos);
  kv.set("cv_neg", p.cv_neg);
  kv.set("refractory_us", p.refractory_us);
  kv.set("lambda_max", p.lambda_max);
  return kv;
}

ModelParams read_params(const std::filesystem::path& path) {
  ModelParams p = params_from_kv(KeyValue::read(path));
  validate(p);
  return p;
}

void write_params(const std::filesystem::path& path, const ModelParams& params) {
  params_to_kv(params).write(path);
}

std::map<BiasKey, ModelParams> parse_params_set(const std::string& text, const std::string& origin) {
  std::map<BiasKey, ModelParams> rows;
  std::istringstream in(text);
  std::string line;
  std::string body;
  BiasKey key;
  bool open = false;
  int lineno = 0;

  auto flush = [&] {
    if (!open) return;
    ModelParams p = params_from_kv(KeyValue::parse(body, origin));
    validate(p);
    if (!rows.emplace(key, p).second) {
      throw FormatError(origin + ": duplicate section fo=" + std::to_string(key.fo) +
                        " hpf=" + std::to_string(key.hpf));
    }
    body.clear();
  };

  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line[first] == '[') {
      flush();
      if (std::sscanf(line.c_str() + first, "[fo=%d hpf=%d]", &key.fo, &key.hpf) != 2) {
        throw FormatError(origin + ":" + std::to_string(lineno) + ": bad section header");
      }
      open = true;
      continue;
    }
    if (!open) {
      if (first == std::string::npos || line[first] == '#') continue;
      throw FormatError(origin + ":" + std::to_string(lineno) + ": entry outside a section");
    }
    body += line + "\n";
  }
  flush();
  return rows;
}

std::map<BiasKey, ModelParams> read_params_set(const std::filesystem::path& path) {
  return parse_params_set(read_text(path), path.string());
}

}  // namespace ecnoise
