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

#include "rrvq/stack_io.hpp"

#include "binary_io.hpp"
#include "json.hpp"
#include "rrvq/error.hpp"

#include <cstdio>
#include <string>

namespace rrvq {
namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kFormat = "rrvq-stack/1";

std::string stage_file(std::size_t k) {
  char name[32];
  std::snprintf(name, sizeof(name), "stage_%02zu.cb", k);
  return name;
}

template <typename T>
T field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail(ErrorCode::kParseError, where + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::kParseError, where + ": bad value for '" + key + "'");
  }
}

}  // namespace

void save_stack(const std::filesystem::path& dir, const QuantizerStack& stack,
                const FitOptions& training) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json manifest;
  manifest["format"] = kFormat;
  manifest["rng_algorithm"] = std::string(Rng::kAlgorithm);
  manifest["dim"] = stack.dim();
  manifest["resample_mode"] = std::string(to_string(stack.resample_mode()));
  manifest["master_seed"] = stack.master_seed();
  manifest["disjoint"] = stack.options().disjoint;
  manifest["training"] = {{"decay", training.decay},
                          {"epsilon", training.epsilon},
                          {"passes", training.passes},
                          {"batch_size", training.batch_size}};

  if (const BigCodebook* big = stack.big()) {
    write_codebook(dir / "big.cb", big->codebook());
    manifest["big"] = {{"file", "big.cb"}, {"size", big->size()}, {"dim", big->dim()}, {"seed", big->seed()}};
  } else {
    manifest["big"] = nullptr;
  }

  nlohmann::json stages = nlohmann::json::array();
  for (std::size_t k = 0; k < stack.size(); ++k) {
    const QuantizerStage& st = stack.stage(k);
    nlohmann::json js;
    js["kind"] = st.is_random() ? "random" : "trainable";
    js["normalize"] = st.normalize;
    js["output_gain"] = st.output_gain;
    js["projection"] = st.projection
                           ? nlohmann::json{{"d_proj", st.projection->d_proj()}, {"seed", st.projection->seed}}
                           : nlohmann::json(nullptr);
    if (st.is_random()) {
      js["sample_size"] = st.sample_size;
    } else {
      const std::string file = stage_file(k);
      write_codebook(dir / file, *st.codebook);
      js["file"] = file;
      js["size"] = st.codebook->size();
      js["id"] = st.codebook->id();
    }
    stages.push_back(std::move(js));
  }
  manifest["stages"] = std::move(stages);
  detail::write_file(dir / kManifest, manifest.dump(2) + "\n");
}

StoredStack load_stack(const std::filesystem::path& dir) {
  const std::string where = (dir / kManifest).string();
  nlohmann::json manifest = nlohmann::json::parse(detail::read_file(dir / kManifest), nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object()) fail(ErrorCode::kParseError, where + ": invalid JSON");
  if (manifest.value("format", std::string()) != kFormat) {
    fail(ErrorCode::kParseError, where + ": unsupported stack format");
  }

  const auto dim = field<std::size_t>(manifest, "dim", where);
  StackOptions options;
  options.resample_mode = parse_resample_mode(field<std::string>(manifest, "resample_mode", where));
  options.master_seed = field<std::uint64_t>(manifest, "master_seed", where);
  options.disjoint = field<bool>(manifest, "disjoint", where);

  std::shared_ptr<const BigCodebook> big;
  if (manifest.contains("big") && !manifest["big"].is_null()) {
    const auto file = field<std::string>(manifest["big"], "file", where);
    big = std::make_shared<const BigCodebook>(read_codebook(dir / file, "big", false));
  }

  std::vector<QuantizerStage> stages;
  if (!manifest.contains("stages") || !manifest["stages"].is_array()) {
    fail(ErrorCode::kParseError, where + ": missing stage list");
  }
  for (const auto& js : manifest["stages"]) {
    QuantizerStage st;
    const auto kind = field<std::string>(js, "kind", where);
    st.normalize = field<bool>(js, "normalize", where);
    st.output_gain = field<double>(js, "output_gain", where);
    if (js.contains("projection") && !js["projection"].is_null()) {
      st.projection = make_projection(dim, field<std::size_t>(js["projection"], "d_proj", where),
                                      field<std::uint64_t>(js["projection"], "seed", where));
    }
    if (kind == "random") {
      st.kind = StageKind::kRandom;
      st.sample_size = field<std::size_t>(js, "sample_size", where);
    } else if (kind == "trainable") {
      st.kind = StageKind::kTrainable;
      st.codebook = read_codebook(dir / field<std::string>(js, "file", where), js.value("id", std::string()), true);
    } else {
      fail(ErrorCode::kParseError, where + ": unknown stage kind '" + kind + "'");
    }
    stages.push_back(std::move(st));
  }

  FitOptions training;
  if (manifest.contains("training")) {
    const auto& t = manifest["training"];
    training.decay = t.value("decay", training.decay);
    training.epsilon = t.value("epsilon", training.epsilon);
    training.passes = t.value("passes", training.passes);
    training.batch_size = t.value("batch_size", training.batch_size);
  }
  return {QuantizerStack(dim, std::move(stages), std::move(big), options), training};
}

}  // namespace rrvq
