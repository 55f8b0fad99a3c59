#include "imagls/pipeline.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "imagls/errors.h"
#include "imagls/formats.h"

namespace imagls {

namespace {

using nlohmann::json;

std::string FormatNumber(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void WriteCsv(const std::filesystem::path& path,
              const std::vector<std::string>& header,
              const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << (i ? "," : "") << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << FormatNumber(row[i]);
    }
    out << '\n';
  }
  if (!out) throw ValidationError("failed writing " + path.string());
}

template <typename T>
void Read(const json& doc, const char* key, T* field) {
  if (!doc.contains(key)) return;
  try {
    *field = doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("config key '") + key +
                          "' has the wrong type");
  }
}

double Mean(const std::vector<double>& v, const std::vector<int>& idx) {
  double sum = 0.0;
  for (int i : idx) sum += v[i];
  return idx.empty() ? 0.0 : sum / static_cast<double>(idx.size());
}

}  // namespace

std::string_view MethodName(Method m) {
  switch (m) {
    case Method::kLs:
      return "ls";
    case Method::kMagLs:
      return "magls";
    case Method::kMagLsCc:
      return "magls-cc";
    case Method::kIMagLs:
      return "imagls";
  }
  return "unknown";
}

Method ParseMethod(std::string_view name) {
  for (Method m : kAllMethods) {
    if (MethodName(m) == name) return m;
  }
  throw ValidationError("unknown method '" + std::string(name) +
                        "' (expected ls, magls, magls-cc or imagls)");
}

void PipelineConfig::Validate(const SphericalGrid& grid) const {
  if (low_order < 0) throw ValidationError("low order must be >= 0");
  if (low_order > reference_order) {
    throw ValidationError("low order must not exceed the reference order");
  }
  if (reference_order > grid.max_exact_order()) {
    std::ostringstream msg;
    msg << "reference order " << reference_order
        << " exceeds the grid's exact order " << grid.max_exact_order();
    throw ValidationError(msg.str());
  }
  if (azimuth_count < 1) throw ValidationError("azimuth count must be >= 1");
  imagls.Validate();
}

PipelineConfig PipelineConfigFromJson(const json& doc, PipelineConfig c) {
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  static const char* kKeys[] = {
      "hrtf-file",        "radius-m",         "speed-of-sound-mps",
      "series-order",     "ear-azimuths-rad", "ear-colatitudes-rad",
      "grid-order",       "grid-file",        "freq-start-hz",
      "freq-step-hz",     "freq-count",       "low-order",
      "reference-order",  "magls-cutoff-hz",  "lambda",
      "band-lo-hz",       "band-hi-hz",       "smooth-eps-db",
      "max-iters",        "grad-tol",         "optimizer",
      "lbfgs-memory",     "gammatone-f1-hz",  "gammatone-f2-hz",
      "gammatone-order",  "azimuth-count",    "out-dir",
      "record-timing"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find_if(std::begin(kKeys), std::end(kKeys), [&](const char* k) {
          return key == k;
        }) == std::end(kKeys)) {
      throw ValidationError("unknown config key '" + key + "'");
    }
  }
  Read(doc, "hrtf-file", &c.hrtf_file);
  Read(doc, "radius-m", &c.sphere.radius_m);
  Read(doc, "speed-of-sound-mps", &c.sphere.speed_of_sound_mps);
  Read(doc, "series-order", &c.sphere.series_order);
  Read(doc, "ear-azimuths-rad", &c.sphere.ear_azimuths_rad);
  Read(doc, "ear-colatitudes-rad", &c.sphere.ear_colatitudes_rad);
  Read(doc, "grid-order", &c.grid_order);
  Read(doc, "grid-file", &c.grid_file);
  Read(doc, "freq-start-hz", &c.freq_start_hz);
  Read(doc, "freq-step-hz", &c.freq_step_hz);
  Read(doc, "freq-count", &c.freq_count);
  Read(doc, "low-order", &c.low_order);
  Read(doc, "reference-order", &c.reference_order);
  Read(doc, "magls-cutoff-hz", &c.magls.cutoff_hz);
  if (doc.contains("lambda")) {
    const json& l = doc.at("lambda");
    if (l.is_string() && l.get<std::string>() == "auto") {
      c.imagls.lambda.reset();
    } else if (l.is_number()) {
      c.imagls.lambda = l.get<double>();
    } else {
      throw ValidationError("config 'lambda' must be a number or \"auto\"");
    }
  }
  Read(doc, "band-lo-hz", &c.imagls.band_lo_hz);
  Read(doc, "band-hi-hz", &c.imagls.band_hi_hz);
  Read(doc, "smooth-eps-db", &c.imagls.smooth_eps_db);
  Read(doc, "max-iters", &c.imagls.max_iters);
  Read(doc, "grad-tol", &c.imagls.grad_tol);
  if (doc.contains("optimizer")) {
    std::string name;
    Read(doc, "optimizer", &name);
    if (name == "bfgs") {
      c.imagls.optimizer = QuasiNewtonMethod::kBfgs;
    } else if (name == "lbfgs") {
      c.imagls.optimizer = QuasiNewtonMethod::kLbfgs;
    } else {
      throw ValidationError("optimizer must be 'bfgs' or 'lbfgs'");
    }
  }
  Read(doc, "lbfgs-memory", &c.imagls.lbfgs_memory);
  Read(doc, "gammatone-f1-hz", &c.gammatone_f1_hz);
  Read(doc, "gammatone-f2-hz", &c.gammatone_f2_hz);
  Read(doc, "gammatone-order", &c.gammatone_order);
  Read(doc, "azimuth-count", &c.azimuth_count);
  Read(doc, "out-dir", &c.out_dir);
  Read(doc, "record-timing", &c.record_timing);
  return c;
}

json PipelineConfigToJson(const PipelineConfig& c) {
  json doc;
  doc["hrtf-file"] = c.hrtf_file;
  doc["radius-m"] = c.sphere.radius_m;
  doc["speed-of-sound-mps"] = c.sphere.speed_of_sound_mps;
  doc["series-order"] = c.sphere.series_order;
  doc["ear-azimuths-rad"] = c.sphere.ear_azimuths_rad;
  doc["ear-colatitudes-rad"] = c.sphere.ear_colatitudes_rad;
  doc["grid-order"] = c.grid_order;
  doc["grid-file"] = c.grid_file;
  doc["freq-start-hz"] = c.freq_start_hz;
  doc["freq-step-hz"] = c.freq_step_hz;
  doc["freq-count"] = c.freq_count;
  doc["low-order"] = c.low_order;
  doc["reference-order"] = c.reference_order;
  doc["magls-cutoff-hz"] = c.magls.cutoff_hz;
  if (c.imagls.lambda) {
    doc["lambda"] = *c.imagls.lambda;
  } else {
    doc["lambda"] = "auto";
  }
  doc["band-lo-hz"] = c.imagls.band_lo_hz;
  doc["band-hi-hz"] = c.imagls.band_hi_hz;
  doc["smooth-eps-db"] = c.imagls.smooth_eps_db;
  doc["max-iters"] = c.imagls.max_iters;
  doc["grad-tol"] = c.imagls.grad_tol;
  doc["optimizer"] =
      c.imagls.optimizer == QuasiNewtonMethod::kBfgs ? "bfgs" : "lbfgs";
  doc["lbfgs-memory"] = c.imagls.lbfgs_memory;
  doc["gammatone-f1-hz"] = c.gammatone_f1_hz;
  doc["gammatone-f2-hz"] = c.gammatone_f2_hz;
  doc["gammatone-order"] = c.gammatone_order;
  doc["azimuth-count"] = c.azimuth_count;
  doc["out-dir"] = c.out_dir;
  doc["record-timing"] = c.record_timing;
  return doc;
}

std::optional<SphericalGrid> LoadConfiguredGridFile(const PipelineConfig& c) {
  if (c.grid_file.empty()) return std::nullopt;
  return LoadGrid(c.grid_file);
}

SphericalGrid BuildGrid(const PipelineConfig& c) {
  if (!c.grid_file.empty()) return LoadGrid(c.grid_file);
  return GaussGrid(c.grid_order);
}

FrequencyGrid BuildFrequencies(const PipelineConfig& c) {
  return FrequencyGrid::Uniform(c.freq_start_hz, c.freq_step_hz, c.freq_count);
}

HrtfSet BuildReference(const PipelineConfig& c) {
  if (!c.hrtf_file.empty()) {
    HrtfSet set = LoadHrtfJson(c.hrtf_file, LoadConfiguredGridFile(c));
    c.Validate(set.grid);
    return set;
  }
  const SphericalGrid grid = BuildGrid(c);
  c.Validate(grid);
  return RigidSphereHrtf(c.sphere, grid, BuildFrequencies(c));
}

GammatoneBank BuildBank(const PipelineConfig& c, const FrequencyGrid& freqs) {
  return GammatoneBank(freqs, c.gammatone_f1_hz, c.gammatone_f2_hz,
                       c.gammatone_order);
}

IldSetup BuildIldSetup(const PipelineConfig& c, const HrtfSet& ref) {
  return MakeIldSetup(TruncateReference(ref, c.reference_order),
                      BuildBank(c, ref.freqs),
                      HorizontalAzimuths(c.azimuth_count));
}

EncodeResult Encode(const PipelineConfig& c, const HrtfSet& ref, Method method,
                    const IldSetup* ild) {
  c.Validate(ref.grid);
  switch (method) {
    case Method::kLs:
      return {LsEncode(ref, c.low_order), std::nullopt};
    case Method::kMagLs:
      return {MaglsEncode(ref, c.low_order, c.magls), std::nullopt};
    case Method::kMagLsCc:
      return {CovarianceCorrection(MaglsEncode(ref, c.low_order, c.magls), ref),
              std::nullopt};
    case Method::kIMagLs: {
      std::optional<IldSetup> own;
      if (ild == nullptr) {
        own = BuildIldSetup(c, ref);
        ild = &*own;
      }
      auto [hrtf, report] = OptimizeImagls(ref, c.low_order, c.imagls, c.magls, *ild);
      return {std::move(hrtf), std::move(report)};
    }
  }
  throw ValidationError("unknown method");
}

EvaluationSummary Evaluate(const PipelineConfig& c, const HrtfSet& ref,
                           const std::vector<ShHrtf>& encoded,
                           const std::filesystem::path& out_dir,
                           const IldSetup* ild) {
  c.Validate(ref.grid);
  std::optional<IldSetup> own;
  if (ild == nullptr) {
    own = BuildIldSetup(c, ref);
    ild = &*own;
  }
  std::filesystem::create_directories(out_dir);

  // Column names: provenance, de-duplicated with a numeric suffix.
  std::vector<std::string> names;
  std::map<std::string, int> seen;
  for (const ShHrtf& h : encoded) {
    std::string name(ProvenanceName(h.provenance));
    const int n = seen[name]++;
    if (n > 0) name += "_" + std::to_string(n + 1);
    names.push_back(name);
  }

  const IldCurve ref_avg = FrequencyAverage(ild->reference);
  std::vector<IldCurve> full_curves;
  for (const ShHrtf& h : encoded) {
    full_curves.push_back(ComputeIldCurve(h, ild->azimuths, ild->bank));
  }
  const int a_count = static_cast<int>(ild->azimuths.size());
  EvaluationSummary summary;

  {
    std::vector<std::string> header = {"azimuth_deg", "reference"};
    header.insert(header.end(), names.begin(), names.end());
    std::vector<std::vector<double>> rows(a_count);
    for (int a = 0; a < a_count; ++a) {
      rows[a] = {ild->azimuths[a] * 180.0 / kPi, ref_avg.values_db(a, 0)};
      for (const IldCurve& curve : full_curves) {
        rows[a].push_back(curve.values_db.row(a).mean());
      }
    }
    WriteCsv(out_dir / "ild_curves.csv", header, rows);
  }
  {
    std::vector<std::string> header = {"azimuth_deg"};
    header.insert(header.end(), names.begin(), names.end());
    header.push_back("jnd_db");
    std::vector<Eigen::VectorXd> errors;
    for (const IldCurve& curve : full_curves) {
      errors.push_back(IldErrorAveraged(ild->reference, curve));
    }
    std::vector<std::vector<double>> rows(a_count);
    for (int a = 0; a < a_count; ++a) {
      rows[a] = {ild->azimuths[a] * 180.0 / kPi};
      for (const Eigen::VectorXd& e : errors) rows[a].push_back(e[a]);
      rows[a].push_back(1.0);
    }
    WriteCsv(out_dir / "ild_error.csv", header, rows);
    for (std::size_t m = 0; m < encoded.size(); ++m) {
      summary.methods.push_back(MethodSummary{names[m], errors[m].mean(), 0.0});
    }
  }

  const std::vector<int> band = OptimizationBand(ref.freqs, c.imagls);
  std::vector<std::vector<double>> mag_db;
  {
    std::vector<std::string> header = {"freq_hz"};
    header.insert(header.end(), names.begin(), names.end());
    for (const ShHrtf& h : encoded) mag_db.push_back(MagErrorDb(ref, h));
    std::vector<std::vector<double>> rows(ref.freqs.size());
    for (int f = 0; f < ref.freqs.size(); ++f) {
      rows[f] = {ref.freqs[f]};
      for (const auto& col : mag_db) rows[f].push_back(col[f]);
    }
    WriteCsv(out_dir / "mag_error.csv", header, rows);
    for (std::size_t m = 0; m < encoded.size(); ++m) {
      summary.methods[m].mag_error_band_mean_db = Mean(mag_db[m], band);
    }
  }

  int imagls_col = -1;
  int magls_col = -1;
  for (std::size_t m = 0; m < encoded.size(); ++m) {
    if (names[m] == "iMagLS") imagls_col = static_cast<int>(m);
    if (names[m] == "MagLS") magls_col = static_cast<int>(m);
  }
  if (imagls_col >= 0 && magls_col >= 0) {
    std::vector<double> diff(ref.freqs.size());
    for (int f = 0; f < ref.freqs.size(); ++f) {
      diff[f] = mag_db[imagls_col][f] - mag_db[magls_col][f];
    }
    summary.mag_penalty_db = Mean(diff, band);
  }

  json doc;
  doc["version"] = "summary-json/1";
  doc["band_hz"] = {c.imagls.band_lo_hz, c.imagls.band_hi_hz};
  doc["reference_order"] = c.reference_order;
  json methods = json::object();
  for (const MethodSummary& m : summary.methods) {
    methods[m.name] = {{"ild_error_mean_db", m.ild_error_mean_db},
                       {"mag_error_band_mean_db", m.mag_error_band_mean_db}};
  }
  doc["methods"] = std::move(methods);
  doc["mag_penalty_db"] =
      summary.mag_penalty_db ? json(*summary.mag_penalty_db) : json(nullptr);
  std::ofstream out(out_dir / "summary.json", std::ios::binary);
  if (!out) throw ValidationError("cannot write summary.json");
  out << doc.dump(2) << '\n';
  return summary;
}

RunAllResult RunAll(const PipelineConfig& c) {
  const std::filesystem::path out_dir = c.out_dir;
  std::filesystem::create_directories(out_dir);
  const HrtfSet ref = BuildReference(c);
  SaveHrtfJson(ref, out_dir / "reference.hrtf.json");
  const IldSetup ild = BuildIldSetup(c, ref);
  RunAllResult result;
  std::vector<ShHrtf> encoded;
  for (Method m : kAllMethods) {
    EncodeResult r = Encode(c, ref, m, &ild);
    SaveShHrtfJson(r.hrtf, out_dir / (std::string(MethodName(m)) + ".shhrtf.json"));
    if (r.report) {
      SaveOptimReportJson(*r.report, out_dir / "imagls.optreport.json",
                          c.record_timing);
      result.imagls_report = *r.report;
    }
    encoded.push_back(std::move(r.hrtf));
  }
  result.summary = Evaluate(c, ref, encoded, out_dir, &ild);
  return result;
}

}  // namespace imagls
