#ifndef IMAGLS_PIPELINE_H_
#define IMAGLS_PIPELINE_H_

// End-to-end pipeline behind the `imagls` CLI: reference generation,
// encoding with each method and the ILD / magnitude-error reports.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "imagls/baseline_renderers.h"
#include "imagls/hrtf_model.h"
#include "imagls/imagls_opt.h"
#include "imagls/psychoacoustics.h"

namespace imagls {

enum class Method { kLs, kMagLs, kMagLsCc, kIMagLs };
std::string_view MethodName(Method m);  // ls, magls, magls-cc, imagls
Method ParseMethod(std::string_view name);
inline constexpr Method kAllMethods[] = {Method::kLs, Method::kMagLs,
                                         Method::kMagLsCc, Method::kIMagLs};

struct PipelineConfig {
  // Reference: rigid sphere unless hrtf_file is set.
  std::string hrtf_file;
  SphereModelConfig sphere;
  // Grid: generated Gauss-Legendre product grid unless grid_file is set.
  int grid_order = 35;
  std::string grid_file;
  double freq_start_hz = 187.5;
  double freq_step_hz = 187.5;
  int freq_count = 96;

  int low_order = 1;
  int reference_order = 35;
  MaglsConfig magls;
  ImaglsConfig imagls;
  double gammatone_f1_hz = 1200.0;
  double gammatone_f2_hz = 18000.0;
  int gammatone_order = 4;
  int azimuth_count = 72;

  std::string out_dir = "out";
  bool record_timing = false;

  // Checks low_order <= reference_order <= grid order plus the parts'
  // own validation.
  void Validate(const SphericalGrid& grid) const;
};

// Keys mirror the kebab-case CLI flags (e.g. "low-order", "lambda").
// Unknown keys are rejected.
PipelineConfig PipelineConfigFromJson(const nlohmann::json& doc,
                                      PipelineConfig base = {});
nlohmann::json PipelineConfigToJson(const PipelineConfig& config);

std::optional<SphericalGrid> LoadConfiguredGridFile(const PipelineConfig& config);
SphericalGrid BuildGrid(const PipelineConfig& config);
FrequencyGrid BuildFrequencies(const PipelineConfig& config);

// Rigid-sphere set on the configured grid, or the configured hrtf-json file.
HrtfSet BuildReference(const PipelineConfig& config);

GammatoneBank BuildBank(const PipelineConfig& config, const FrequencyGrid& freqs);

// Reference ILD from the order reference_order truncation.
IldSetup BuildIldSetup(const PipelineConfig& config, const HrtfSet& ref);

struct EncodeResult {
  ShHrtf hrtf;
  std::optional<OptimReport> report;
};
EncodeResult Encode(const PipelineConfig& config, const HrtfSet& ref,
                    Method method, const IldSetup* ild = nullptr);

struct MethodSummary {
  std::string name;
  double ild_error_mean_db = 0.0;    // azimuth mean of frequency-averaged error
  double mag_error_band_mean_db = 0.0;
};

struct EvaluationSummary {
  std::vector<MethodSummary> methods;
  // Band mean of (iMagLS dB error - MagLS dB error), when both are present.
  std::optional<double> mag_penalty_db;
};

// Writes ild_curves.csv, ild_error.csv, mag_error.csv and summary.json into
// `out_dir`.
EvaluationSummary Evaluate(const PipelineConfig& config, const HrtfSet& ref,
                           const std::vector<ShHrtf>& encoded,
                           const std::filesystem::path& out_dir,
                           const IldSetup* ild = nullptr);

struct RunAllResult {
  EvaluationSummary summary;
  OptimReport imagls_report;
};

// generate + encode (all methods) + evaluate into config.out_dir.
RunAllResult RunAll(const PipelineConfig& config);

}  // namespace imagls

#endif  // IMAGLS_PIPELINE_H_
