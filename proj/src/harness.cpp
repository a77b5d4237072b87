// Copyright 2026 The rrvq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rrvq/harness.hpp"

#include "rrvq/error.hpp"
#include "rrvq/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace rrvq {
namespace {

using nlohmann::json;

json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::string format_double(double v, const char* fmt = "%.6g") {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) fail(ErrorCode::kInvalidArgument, where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kInvalidArgument, where + ": bad value for '" + key + "'");
  }
}

DataSpec data_from_json(const json& j, DataSpec spec, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::kInvalidArgument, where + " must be an object");
  reject_unknown(j, {"kind", "frames", "clusters", "separation", "path"}, where);
  read_field(j, "kind", spec.kind, where);
  read_field(j, "frames", spec.frames, where);
  read_field(j, "clusters", spec.clusters, where);
  read_field(j, "separation", spec.separation, where);
  read_field(j, "path", spec.path, where);
  return spec;
}

json data_to_json(const DataSpec& d) {
  json j = {{"kind", d.kind}, {"frames", d.frames}};
  if (d.kind == "gmm") {
    j["clusters"] = d.clusters;
    j["separation"] = d.separation;
  }
  if (d.kind == "file") j["path"] = d.path;
  return j;
}

void validate_data(const DataSpec& d, const std::string& where) {
  if (d.kind == "gaussian" || d.kind == "gmm") {
    require(d.frames >= 1, where + ".frames must be >= 1");
    if (d.kind == "gmm") {
      require(d.clusters >= 1, where + ".clusters must be >= 1");
      require(d.separation >= 0.0 && std::isfinite(d.separation), where + ".separation must be >= 0");
    }
  } else if (d.kind == "file") {
    require(!d.path.empty(), where + ".path is required for kind 'file'");
  } else {
    fail(ErrorCode::kInvalidArgument, where + ".kind must be gaussian, gmm or file (got '" + d.kind + "')");
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::kInvalidArgument, "config must be a JSON object");
  const std::string where = "config";
  reject_unknown(j, {"name", "D", "n_t", "N_t", "n_r", "N_big", "s", "mitigants", "resample_mode",
                     "disjoint", "train", "eval", "seeds", "passes", "decay", "epsilon", "batch_size",
                     "gain_frames"},
                 where);
  ExperimentConfig cfg;
  read_field(j, "name", cfg.name, where);
  read_field(j, "D", cfg.dim, where);
  read_field(j, "n_t", cfg.n_trainable, where);
  read_field(j, "N_t", cfg.trainable_size, where);
  read_field(j, "n_r", cfg.n_random, where);
  read_field(j, "N_big", cfg.big_size, where);
  read_field(j, "s", cfg.sample_size, where);
  read_field(j, "disjoint", cfg.disjoint, where);
  read_field(j, "seeds", cfg.seeds, where);
  read_field(j, "passes", cfg.fit.passes, where);
  read_field(j, "decay", cfg.fit.decay, where);
  read_field(j, "epsilon", cfg.fit.epsilon, where);
  read_field(j, "batch_size", cfg.fit.batch_size, where);
  read_field(j, "gain_frames", cfg.fit.gain_frames, where);
  if (j.contains("resample_mode")) {
    std::string mode;
    read_field(j, "resample_mode", mode, where);
    cfg.resample_mode = parse_resample_mode(mode);
  }
  if (j.contains("mitigants")) {
    const json& m = j["mitigants"];
    if (!m.is_object()) fail(ErrorCode::kInvalidArgument, "config.mitigants must be an object");
    reject_unknown(m, {"normalize", "projection"}, "config.mitigants");
    read_field(m, "normalize", cfg.mitigants.normalize, "config.mitigants");
    if (m.contains("projection")) {
      if (m["projection"].is_null()) {
        cfg.mitigants.projection.reset();
      } else {
        std::size_t d = 0;
        read_field(m, "projection", d, "config.mitigants");
        cfg.mitigants.projection = d;
      }
    }
  }
  if (j.contains("train")) cfg.train = data_from_json(j["train"], cfg.train, "config.train");
  if (j.contains("eval")) cfg.eval = data_from_json(j["eval"], cfg.eval, "config.eval");
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  return {{"name", cfg.name},
          {"D", cfg.dim},
          {"n_t", cfg.n_trainable},
          {"N_t", cfg.trainable_size},
          {"n_r", cfg.n_random},
          {"N_big", cfg.big_size},
          {"s", cfg.sample_size},
          {"mitigants",
           {{"normalize", cfg.mitigants.normalize},
            {"projection", cfg.mitigants.projection ? json(*cfg.mitigants.projection) : json(nullptr)}}},
          {"resample_mode", std::string(to_string(cfg.resample_mode))},
          {"disjoint", cfg.disjoint},
          {"train", data_to_json(cfg.train)},
          {"eval", data_to_json(cfg.eval)},
          {"seeds", cfg.seeds},
          {"passes", cfg.fit.passes},
          {"decay", cfg.fit.decay},
          {"epsilon", cfg.fit.epsilon},
          {"batch_size", cfg.fit.batch_size},
          {"gain_frames", cfg.fit.gain_frames}};
}

void validate_config(const ExperimentConfig& cfg) {
  require(cfg.dim >= 1, "D must be >= 1");
  require(cfg.n_trainable + cfg.n_random >= 1, "n_t + n_r must be >= 1");
  if (cfg.n_trainable > 0) require(cfg.trainable_size >= 1, "N_t must be >= 1");
  if (cfg.n_random > 0) {
    require(cfg.big_size >= 1, "N_big must be >= 1");
    require(cfg.sample_size >= 1, "s must be >= 1");
    if (cfg.sample_size > cfg.big_size) {
      fail(ErrorCode::kCapacityExceeded, "s (" + std::to_string(cfg.sample_size) +
                                             ") must not exceed N_big (" + std::to_string(cfg.big_size) + ")");
    }
    if (cfg.disjoint && cfg.n_random * cfg.sample_size > cfg.big_size) {
      fail(ErrorCode::kCapacityExceeded, "disjoint sampling needs n_r * s (" +
                                             std::to_string(cfg.n_random * cfg.sample_size) + ") <= N_big (" +
                                             std::to_string(cfg.big_size) + ")");
    }
  }
  if (cfg.mitigants.projection) {
    const std::size_t d = *cfg.mitigants.projection;
    require(d >= 1 && d < cfg.dim, "mitigants.projection must satisfy 1 <= d_proj < D (got " +
                                       std::to_string(d) + " with D = " + std::to_string(cfg.dim) + ")");
  }
  require(!cfg.seeds.empty(), "seeds must list at least one seed");
  require(cfg.fit.decay > 0.0 && cfg.fit.decay < 1.0, "decay must lie in (0, 1)");
  require(cfg.fit.epsilon > 0.0, "epsilon must be positive");
  require(cfg.fit.batch_size >= 1, "batch_size must be >= 1");
  require(cfg.fit.gain_frames >= 1, "gain_frames must be >= 1");
  validate_data(cfg.train, "train");
  validate_data(cfg.eval, "eval");
}

QuantizerStack build_stack(const ExperimentConfig& cfg, std::uint64_t seed) {
  validate_config(cfg);
  const std::size_t working = cfg.mitigants.projection.value_or(cfg.dim);
  auto projection_for = [&](std::size_t k) -> std::optional<ProjectionPair> {
    if (!cfg.mitigants.projection) return std::nullopt;
    return make_projection(cfg.dim, *cfg.mitigants.projection, Rng::derive(seed, {stream::kProjection, k}));
  };

  std::vector<QuantizerStage> stages;
  for (std::size_t k = 0; k < cfg.n_trainable; ++k) {
    QuantizerStage st;
    st.kind = StageKind::kTrainable;
    st.codebook = init_gaussian(cfg.trainable_size, working, Rng::derive(seed, {stream::kTrainableInit, k}),
                                "cb" + std::to_string(k + 1), true);
    st.projection = projection_for(k);
    st.normalize = cfg.mitigants.normalize;
    stages.push_back(std::move(st));
  }
  std::shared_ptr<const BigCodebook> big;
  if (cfg.n_random > 0) {
    big = std::make_shared<const BigCodebook>(
        BigCodebook::gaussian(cfg.big_size, working, Rng::derive(seed, {stream::kBigCodebook})));
  }
  for (std::size_t k = cfg.n_trainable; k < cfg.n_trainable + cfg.n_random; ++k) {
    QuantizerStage st;
    st.kind = StageKind::kRandom;
    st.sample_size = cfg.sample_size;
    st.projection = projection_for(k);
    st.normalize = cfg.mitigants.normalize;
    stages.push_back(std::move(st));
  }
  StackOptions options;
  options.resample_mode = cfg.resample_mode;
  options.master_seed = seed;
  options.disjoint = cfg.disjoint;
  return QuantizerStack(cfg.dim, std::move(stages), std::move(big), options);
}

FeatureSet make_data(const DataSpec& spec, std::size_t dim, std::uint64_t seed, std::uint64_t stream_tag) {
  const std::uint64_t data_seed = Rng::derive(seed, {stream_tag});
  if (spec.kind == "gaussian") return synth_gaussian(spec.frames, dim, data_seed);
  if (spec.kind == "gmm") return synth_gmm(spec.frames, dim, spec.clusters, spec.separation, data_seed);
  if (spec.kind == "file") {
    FeatureSet fs = read_features(spec.path);
    require(fs.dim() == dim, spec.path + ": feature dimension " + std::to_string(fs.dim()) +
                                 " does not match D = " + std::to_string(dim));
    if (spec.frames > 0 && spec.frames < fs.size()) {
      fs.frames.conservativeResize(static_cast<Eigen::Index>(spec.frames), fs.frames.cols());
    }
    return fs;
  }
  fail(ErrorCode::kInvalidArgument, "unknown data kind '" + spec.kind + "'");
}

Evaluation evaluate(const QuantizerStack& stack, const Matrix& frames, const QuantizationResult& result) {
  Evaluation ev;
  ev.profile = distortion_profile(frames, result);
  ev.losses = commitment_codebook_losses(frames, result);
  const auto sizes = stack.sample_sizes();
  std::size_t random_index = 0;
  for (std::size_t k = 0; k < stack.size(); ++k) {
    const QuantizerStage& st = stack.stage(k);
    StageUsage su;
    su.stage = k;
    su.random = st.is_random();
    if (st.is_random()) {
      su.usage = stage_usage(result, k, sizes[random_index++], TokenConvention::kPosition);
      su.absolute = stage_usage(result, k, stack.big()->size(), TokenConvention::kAbsolute);
    } else {
      su.usage = stage_usage(result, k, st.codebook->size(), TokenConvention::kAbsolute);
    }
    ev.stages.push_back(std::move(su));
  }
  if (stack.n_random() > 0) ev.big = big_codebook_usage(result, stack);
  return ev;
}

json evaluation_to_json(const Evaluation& ev) {
  json energies = json::array();
  for (double e : ev.profile.energies) energies.push_back(number(e));
  json per_stage_loss = json::array();
  for (double l : ev.losses.per_stage) per_stage_loss.push_back(number(l));
  json stages = json::array();
  for (const auto& su : ev.stages) {
    json js = {{"stage", su.stage + 1},
               {"kind", su.random ? "random" : "trainable"},
               {"size", su.usage.counts.size()},
               {"perplexity", number(su.usage.perplexity)},
               {"ratio_to_max", number(su.usage.ratio_to_max)}};
    if (su.absolute) {
      js["absolute"] = {{"size", su.absolute->counts.size()},
                        {"perplexity", number(su.absolute->perplexity)},
                        {"ratio_to_max", number(su.absolute->ratio_to_max)}};
    }
    stages.push_back(std::move(js));
  }
  json out = {{"final_mse", number(ev.profile.final_mse)},
              {"si_sdr_db", number(ev.profile.si_sdr_db)},
              {"stage_energies", std::move(energies)},
              {"commitment_loss", number(ev.losses.commitment)},
              {"codebook_loss", number(ev.losses.codebook)},
              {"stage_losses", std::move(per_stage_loss)},
              {"stages", std::move(stages)}};
  out["big_codebook"] = ev.big ? json{{"size", ev.big->counts.size()},
                                      {"perplexity", number(ev.big->perplexity)},
                                      {"ratio_to_max", number(ev.big->ratio_to_max)}}
                               : json(nullptr);
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = cfg;
  for (std::uint64_t seed : cfg.seeds) {
    const auto seed_start = std::chrono::steady_clock::now();
    const FeatureSet train = make_data(cfg.train, cfg.dim, seed, stream::kTrainData);
    const FeatureSet eval = make_data(cfg.eval, cfg.dim, seed, stream::kEvalData);

    FitReport fit_report;
    const QuantizerStack trained = fit_codebooks(build_stack(cfg, seed), train.frames, cfg.fit, &fit_report);
    const QuantizationResult result = quantize_sequence(eval.frames, trained);

    SeedResult row;
    row.seed = seed;
    row.eval = evaluate(trained, eval.frames, result);
    row.gains = fit_report.gains;
    row.wall_time_s = seconds_since(seed_start);
    report.seeds.push_back(std::move(row));
  }
  report.wall_time_s = seconds_since(start);
  return report;
}

Aggregate aggregate(const std::vector<double>& values) {
  require(!values.empty(), "aggregate: no values");
  Aggregate a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return a;
}

namespace {

// Scalar metrics aggregated across seeds, in report order.
std::vector<std::pair<std::string, std::vector<double>>> seed_series(const ExperimentReport& report) {
  std::vector<std::pair<std::string, std::vector<double>>> series;
  auto add = [&](const std::string& name, auto getter) {
    std::vector<double> values;
    for (const auto& row : report.seeds) values.push_back(getter(row));
    series.emplace_back(name, std::move(values));
  };
  add("final_mse", [](const SeedResult& r) { return r.eval.profile.final_mse; });
  add("si_sdr_db", [](const SeedResult& r) { return r.eval.profile.si_sdr_db; });
  add("commitment_loss", [](const SeedResult& r) { return r.eval.losses.commitment; });
  if (report.seeds.empty()) return series;
  const std::size_t n_stages = report.seeds.front().eval.stages.size();
  for (std::size_t k = 0; k < n_stages; ++k) {
    const std::string cb = "cb" + std::to_string(k + 1);
    add("pp_" + cb, [k](const SeedResult& r) { return r.eval.stages[k].usage.perplexity; });
    add("pp_ratio_" + cb, [k](const SeedResult& r) { return r.eval.stages[k].usage.ratio_to_max; });
    if (report.seeds.front().eval.stages[k].absolute) {
      add("pp_abs_" + cb, [k](const SeedResult& r) { return r.eval.stages[k].absolute->perplexity; });
      add("pp_abs_ratio_" + cb, [k](const SeedResult& r) { return r.eval.stages[k].absolute->ratio_to_max; });
    }
  }
  if (report.seeds.front().eval.big) {
    add("pp_big", [](const SeedResult& r) { return r.eval.big->perplexity; });
    add("pp_ratio_big", [](const SeedResult& r) { return r.eval.big->ratio_to_max; });
  }
  return series;
}

}  // namespace

json report_to_json(const ExperimentReport& report) {
  json seeds = json::array();
  for (const auto& row : report.seeds) {
    json gains = json::array();
    for (double g : row.gains) gains.push_back(number(g));
    seeds.push_back({{"seed", row.seed},
                     {"metrics", evaluation_to_json(row.eval)},
                     {"random_stage_gains", std::move(gains)},
                     {"wall_time_s", row.wall_time_s}});
  }
  json agg = json::object();
  for (const auto& [name, values] : seed_series(report)) {
    const Aggregate a = aggregate(values);
    json entry = {{"mean", number(a.mean)}};
    if (a.std) entry["std"] = number(*a.std);
    agg[name] = std::move(entry);
  }
  return {{"config", config_to_json(report.config)},
          {"rng_algorithm", std::string(Rng::kAlgorithm)},
          {"seeds", std::move(seeds)},
          {"aggregate", std::move(agg)},
          {"wall_time_s", report.wall_time_s}};
}

std::string report_to_csv(const ExperimentReport& report) {
  const auto series = seed_series(report);
  std::ostringstream out;
  out << "seed";
  for (const auto& [name, _] : series) out << ',' << name;
  out << ",wall_time_s\n";
  for (std::size_t i = 0; i < report.seeds.size(); ++i) {
    out << report.seeds[i].seed;
    for (const auto& [_, values] : series) out << ',' << format_double(values[i], "%.10g");
    out << ',' << format_double(report.seeds[i].wall_time_s, "%.3f") << '\n';
  }
  if (!report.seeds.empty()) {
    out << "mean";
    for (const auto& [_, values] : series) out << ',' << format_double(aggregate(values).mean, "%.10g");
    out << ",\n";
    if (report.seeds.size() > 1) {
      out << "std";
      for (const auto& [_, values] : series) out << ',' << format_double(*aggregate(values).std, "%.10g");
      out << ",\n";
    }
  }
  return out.str();
}

GridTable grid_table(const std::vector<ExperimentReport>& reports) {
  GridTable table;
  std::size_t max_stages = 0;
  for (const auto& r : reports) {
    table.columns.push_back(r.config.name);
    max_stages = std::max(max_stages, r.config.n_trainable + r.config.n_random);
  }
  auto add_row = [&](const std::string& label, auto cell) {
    std::vector<std::string> cells;
    for (const auto& r : reports) cells.push_back(cell(r));
    table.rows.emplace_back(label, std::move(cells));
  };
  auto mean_of = [](const ExperimentReport& r, auto getter) {
    std::vector<double> v;
    for (const auto& row : r.seeds) v.push_back(getter(row));
    return aggregate(v);
  };
  auto mean_pm = [&](const ExperimentReport& r, auto getter) {
    const Aggregate a = mean_of(r, getter);
    std::string s = format_double(a.mean, "%.4g");
    if (a.std) s += " +- " + format_double(*a.std, "%.2g");
    return s;
  };
  auto pp_cell = [](double pp, double ratio) {
    return format_double(pp, "%.0f") + " (" + format_double(ratio, "%.2f") + ")";
  };

  add_row("N_big", [](const ExperimentReport& r) {
    return r.config.n_random ? std::to_string(r.config.big_size) : std::string("-");
  });
  add_row("sample size", [](const ExperimentReport& r) {
    return r.config.n_random ? std::to_string(r.config.sample_size) : std::string("-");
  });
  add_row("collapse mitigants", [](const ExperimentReport& r) {
    std::string s = r.config.mitigants.normalize ? "normalize" : "";
    if (r.config.mitigants.projection) {
      s += (s.empty() ? "" : "+") + std::string("proj") + std::to_string(*r.config.mitigants.projection);
    }
    return s.empty() ? std::string("none") : s;
  });
  add_row("# rand. quantizers", [](const ExperimentReport& r) { return std::to_string(r.config.n_random); });
  add_row("final MSE", [&](const ExperimentReport& r) {
    return mean_pm(r, [](const SeedResult& s) { return s.eval.profile.final_mse; });
  });
  add_row("SI-SDR (dB)", [&](const ExperimentReport& r) {
    return mean_pm(r, [](const SeedResult& s) { return s.eval.profile.si_sdr_db; });
  });
  for (std::size_t k = 0; k < max_stages; ++k) {
    add_row("PP - cb " + std::to_string(k + 1), [&](const ExperimentReport& r) {
      if (r.seeds.empty() || k >= r.seeds.front().eval.stages.size()) return std::string();
      const bool random = r.seeds.front().eval.stages[k].random;
      const double pp = mean_of(r, [&](const SeedResult& s) {
                          return random ? s.eval.stages[k].absolute->perplexity : s.eval.stages[k].usage.perplexity;
                        }).mean;
      const double ratio = mean_of(r, [&](const SeedResult& s) {
                             return random ? s.eval.stages[k].absolute->ratio_to_max
                                           : s.eval.stages[k].usage.ratio_to_max;
                           }).mean;
      return pp_cell(pp, ratio);
    });
  }
  add_row("PP - Big cb", [&](const ExperimentReport& r) {
    if (r.seeds.empty() || !r.seeds.front().eval.big) return std::string("-");
    const double pp = mean_of(r, [](const SeedResult& s) { return s.eval.big->perplexity; }).mean;
    const double ratio = mean_of(r, [](const SeedResult& s) { return s.eval.big->ratio_to_max; }).mean;
    return pp_cell(pp, ratio);
  });
  add_row("wall time (s)", [&](const ExperimentReport& r) { return format_double(r.wall_time_s, "%.1f"); });
  return table;
}

GridTable run_grid(const std::vector<ExperimentConfig>& cfgs) {
  for (const auto& cfg : cfgs) validate_config(cfg);
  std::vector<ExperimentReport> reports;
  for (const auto& cfg : cfgs) reports.push_back(run_experiment(cfg));
  return grid_table(reports);
}

std::string grid_to_csv(const GridTable& table) {
  std::ostringstream out;
  out << "metric";
  for (const auto& c : table.columns) out << ',' << csv_cell(c);
  out << '\n';
  for (const auto& [label, cells] : table.rows) {
    out << csv_cell(label);
    for (const auto& c : cells) out << ',' << csv_cell(c);
    out << '\n';
  }
  return out.str();
}

TruncationReport compare_truncation(const ExperimentConfig& cfg, std::size_t k) {
  validate_config(cfg);
  const std::size_t total = cfg.n_trainable + cfg.n_random;
  require(k <= total, "compare_truncation: k = " + std::to_string(k) + " exceeds the " +
                          std::to_string(total) + " stages of the stack");
  TruncationReport report;
  report.k = k;
  report.total_stages = total;
  auto side = [](const DistortionProfile& p) {
    return TruncationSide{p.energies.back(), p.final_mse, p.si_sdr_db};
  };
  for (std::uint64_t seed : cfg.seeds) {
    const FeatureSet train = make_data(cfg.train, cfg.dim, seed, stream::kTrainData);
    const FeatureSet eval = make_data(cfg.eval, cfg.dim, seed, stream::kEvalData);
    const QuantizerStack full = fit_codebooks(build_stack(cfg, seed), train.frames, cfg.fit);
    const QuantizerStack cut = full.truncated(k);

    TruncationSeed row;
    row.seed = seed;
    row.full = side(distortion_profile(eval.frames, quantize_sequence(eval.frames, full)));
    row.truncated = side(distortion_profile(eval.frames, quantize_sequence(eval.frames, cut)));
    report.seeds.push_back(row);
  }
  return report;
}

json truncation_to_json(const TruncationReport& report) {
  json seeds = json::array();
  auto side = [](const TruncationSide& s) {
    return json{{"final_energy", number(s.final_energy)},
                {"final_mse", number(s.final_mse)},
                {"si_sdr_db", number(s.si_sdr_db)}};
  };
  for (const auto& row : report.seeds) {
    seeds.push_back({{"seed", row.seed},
                     {"truncated", side(row.truncated)},
                     {"full", side(row.full)},
                     {"delta",
                      {{"final_energy", number(row.full.final_energy - row.truncated.final_energy)},
                       {"final_mse", number(row.full.final_mse - row.truncated.final_mse)},
                       {"si_sdr_db", number(row.full.si_sdr_db - row.truncated.si_sdr_db)}}}});
  }
  return {{"k", report.k}, {"total_stages", report.total_stages}, {"seeds", std::move(seeds)}};
}

}  // namespace rrvq
