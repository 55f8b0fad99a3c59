#include "imagls/formats.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "imagls/errors.h"

namespace imagls {

namespace {

using nlohmann::json;

json ComplexPair(Complex c) { return json::array({c.real(), c.imag()}); }

Complex ParsePair(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() ||
      !j[1].is_number()) {
    throw ParseError("expected a [re, im] pair");
  }
  return Complex(j[0].get<double>(), j[1].get<double>());
}

json ParseJson(std::istream& in) {
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

const json& Field(const json& doc, const char* name) {
  if (!doc.is_object() || !doc.contains(name)) {
    throw ParseError(std::string("missing field '") + name + "'");
  }
  return doc.at(name);
}

void CheckVersion(const json& doc, const char* version) {
  const json& v = Field(doc, "version");
  if (!v.is_string() || v.get<std::string>() != version) {
    throw ParseError(std::string("expected version '") + version + "'");
  }
}

std::vector<double> ParseNumbers(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const json& v : j) {
    if (!v.is_number()) throw ParseError(std::string(what) + " must be numeric");
    out.push_back(v.get<double>());
  }
  return out;
}

// Accepts a flat row-major list of Q*F pairs or a nested [Q][F] list.
Eigen::MatrixXcd ParseDirFreqMatrix(const json& j, int q_count, int f_count,
                                    const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array");
  Eigen::MatrixXcd m(q_count, f_count);
  const bool nested = !j.empty() && j[0].is_array() && !j[0].empty() &&
                      j[0][0].is_array();
  if (nested) {
    if (static_cast<int>(j.size()) != q_count) {
      throw ParseError(std::string(what) + " has the wrong direction count");
    }
    for (int q = 0; q < q_count; ++q) {
      if (!j[q].is_array() || static_cast<int>(j[q].size()) != f_count) {
        throw ParseError(std::string(what) + " has the wrong frequency count");
      }
      for (int f = 0; f < f_count; ++f) m(q, f) = ParsePair(j[q][f]);
    }
  } else {
    if (static_cast<long long>(j.size()) !=
        static_cast<long long>(q_count) * f_count) {
      throw ParseError(std::string(what) + " must hold Q*F pairs");
    }
    for (int q = 0; q < q_count; ++q) {
      for (int f = 0; f < f_count; ++f) m(q, f) = ParsePair(j[q * f_count + f]);
    }
  }
  return m;
}

// Largest order passing the Gram check, -1 if even order 0 fails.
int InferExactOrder(const SphericalGrid& grid) {
  int order = -1;
  while (NumCoeffs(order + 1) <= grid.size() &&
         GramDeviation(grid, order + 1) <= 1e-8) {
    ++order;
  }
  return order;
}

// Great-circle angle from the Cartesian chord, accurate for nearby
// directions where acos of the cosine is not.
double AngleBetween(const Direction& a, const Direction& b) {
  auto unit = [](const Direction& d) {
    return Eigen::Vector3d(std::sin(d.colatitude()) * std::cos(d.azimuth()),
                           std::sin(d.colatitude()) * std::sin(d.azimuth()),
                           std::cos(d.colatitude()));
  };
  const double chord = (unit(a) - unit(b)).norm();
  return 2.0 * std::asin(std::min(1.0, 0.5 * chord));
}

void WriteFile(const std::filesystem::path& path, const auto& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  writer(out);
  if (!out) throw ValidationError("failed writing " + path.string());
}

std::ifstream OpenForRead(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

}  // namespace

void WriteHrtfJson(const HrtfSet& hrtf, std::ostream& out) {
  hrtf.Validate();
  json doc;
  doc["version"] = "hrtf-json/1";
  doc["label"] = hrtf.label;
  doc["freqs_hz"] = hrtf.freqs.values();
  json dirs = json::array();
  for (const Direction& d : hrtf.grid.directions()) {
    dirs.push_back(json::array({d.azimuth(), d.colatitude()}));
  }
  doc["directions"] = std::move(dirs);
  doc["weights"] = hrtf.grid.weights();
  doc["max_exact_order"] = hrtf.grid.max_exact_order();
  for (Ear e : kEars) {
    json values = json::array();
    const Eigen::MatrixXcd& m = hrtf.ear(e);
    for (Eigen::Index q = 0; q < m.rows(); ++q) {
      for (Eigen::Index f = 0; f < m.cols(); ++f) {
        values.push_back(ComplexPair(m(q, f)));
      }
    }
    doc[e == Ear::kLeft ? "left" : "right"] = std::move(values);
  }
  out << doc.dump() << '\n';
}

void SaveHrtfJson(const HrtfSet& hrtf, const std::filesystem::path& path) {
  WriteFile(path, [&](std::ostream& out) { WriteHrtfJson(hrtf, out); });
}

HrtfSet ReadHrtfJson(std::istream& in,
                     const std::optional<SphericalGrid>& weight_grid) {
  const json doc = ParseJson(in);
  CheckVersion(doc, "hrtf-json/1");
  FrequencyGrid freqs(ParseNumbers(Field(doc, "freqs_hz"), "freqs_hz"));
  const json& jdirs = Field(doc, "directions");
  if (!jdirs.is_array() || jdirs.empty()) {
    throw ParseError("directions must be a non-empty array");
  }
  std::vector<Direction> dirs;
  dirs.reserve(jdirs.size());
  for (const json& d : jdirs) {
    const std::vector<double> v = ParseNumbers(d, "direction");
    if (v.size() != 2) throw ParseError("direction must be [azimuth, colatitude]");
    dirs.emplace_back(v[0], v[1]);
  }
  const int q_count = static_cast<int>(dirs.size());

  std::optional<SphericalGrid> grid;
  if (doc.contains("weights") && !doc.at("weights").is_null()) {
    std::vector<double> w = ParseNumbers(doc.at("weights"), "weights");
    int order = -1;
    const bool declared =
        doc.contains("max_exact_order") && doc.at("max_exact_order").is_number();
    if (declared) order = doc.at("max_exact_order").get<int>();
    if (!declared) order = InferExactOrder(SphericalGrid(dirs, w, -1));
    grid.emplace(dirs, std::move(w), order);
  } else if (weight_grid) {
    if (weight_grid->size() != q_count) {
      throw ValidationError("grid file size does not match HRTF directions");
    }
    for (int q = 0; q < q_count; ++q) {
      if (AngleBetween(dirs[q], weight_grid->direction(q)) > 1e-9) {
        throw ValidationError("grid file direction " + std::to_string(q) +
                              " does not match the HRTF file");
      }
    }
    grid.emplace(dirs, weight_grid->weights(), weight_grid->max_exact_order());
  } else {
    grid.emplace(dirs, std::vector<double>(q_count, kFourPi / q_count), -1);
  }

  const int f_count = freqs.size();
  HrtfSet set{*grid, freqs,
              ParseDirFreqMatrix(Field(doc, "left"), q_count, f_count, "left"),
              ParseDirFreqMatrix(Field(doc, "right"), q_count, f_count, "right"),
              doc.contains("label") && doc.at("label").is_string()
                  ? doc.at("label").get<std::string>()
                  : std::string()};
  set.Validate();
  return set;
}

HrtfSet LoadHrtfJson(const std::filesystem::path& path,
                     const std::optional<SphericalGrid>& weight_grid) {
  std::ifstream in = OpenForRead(path);
  return ReadHrtfJson(in, weight_grid);
}

void WriteShHrtfJson(const ShHrtf& hrtf, std::ostream& out) {
  hrtf.Validate();
  json doc;
  doc["version"] = "shhrtf-json/1";
  doc["order"] = hrtf.order;
  doc["freqs_hz"] = hrtf.freqs.values();
  doc["provenance"] = std::string(ProvenanceName(hrtf.provenance));
  for (Ear e : kEars) {
    json per_freq = json::array();
    const Eigen::MatrixXcd& m = hrtf.ear(e);
    for (Eigen::Index f = 0; f < m.cols(); ++f) {
      json coeffs = json::array();
      for (Eigen::Index k = 0; k < m.rows(); ++k) {
        coeffs.push_back(ComplexPair(m(k, f)));
      }
      per_freq.push_back(std::move(coeffs));
    }
    doc[e == Ear::kLeft ? "left" : "right"] = std::move(per_freq);
  }
  if (!hrtf.regularized_bins.empty()) {
    doc["regularized_bins"] = hrtf.regularized_bins;
  }
  out << doc.dump() << '\n';
}

void SaveShHrtfJson(const ShHrtf& hrtf, const std::filesystem::path& path) {
  WriteFile(path, [&](std::ostream& out) { WriteShHrtfJson(hrtf, out); });
}

ShHrtf ReadShHrtfJson(std::istream& in) {
  const json doc = ParseJson(in);
  CheckVersion(doc, "shhrtf-json/1");
  const json& jorder = Field(doc, "order");
  if (!jorder.is_number_integer()) throw ParseError("order must be an integer");
  const int order = jorder.get<int>();
  const json& jprov = Field(doc, "provenance");
  if (!jprov.is_string()) throw ParseError("provenance must be a string");
  ShHrtf out(order, FrequencyGrid(ParseNumbers(Field(doc, "freqs_hz"), "freqs_hz")),
             ParseProvenance(jprov.get<std::string>()));
  const int k_count = NumCoeffs(order);
  for (Ear e : kEars) {
    const char* name = e == Ear::kLeft ? "left" : "right";
    const json& per_freq = Field(doc, name);
    if (!per_freq.is_array() ||
        static_cast<int>(per_freq.size()) != out.freqs.size()) {
      throw ParseError(std::string(name) + " must hold one entry per frequency");
    }
    for (int f = 0; f < out.freqs.size(); ++f) {
      const json& coeffs = per_freq[f];
      if (!coeffs.is_array() || static_cast<int>(coeffs.size()) != k_count) {
        throw ParseError(std::string(name) + " entries must hold (N+1)^2 pairs");
      }
      for (int k = 0; k < k_count; ++k) out.ear(e)(k, f) = ParsePair(coeffs[k]);
    }
  }
  if (doc.contains("regularized_bins")) {
    for (double b : ParseNumbers(doc.at("regularized_bins"), "regularized_bins")) {
      out.regularized_bins.push_back(static_cast<int>(b));
    }
  }
  out.Validate();
  return out;
}

ShHrtf LoadShHrtfJson(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path);
  return ReadShHrtfJson(in);
}

void WriteOptimReportJson(const OptimReport& report, std::ostream& out,
                          bool include_timing) {
  json doc;
  doc["version"] = "optreport-json/1";
  doc["lambda_used"] = report.lambda_used;
  doc["converged"] = report.converged;
  doc["status"] = report.status;
  doc["iterations"] = report.iterations;
  doc["evaluations"] = report.evaluations;
  doc["grad_norm_final"] = report.grad_norm_final;
  json trace = json::array();
  for (const TraceEntry& t : report.loss_trace) {
    trace.push_back({{"iteration", t.iteration},
                     {"total", t.total},
                     {"mag_term", t.mag},
                     {"ild_term", t.ild}});
  }
  doc["loss_trace"] = std::move(trace);
  if (include_timing) doc["wall_time_s"] = report.wall_time_s;
  out << doc.dump(1) << '\n';
}

void SaveOptimReportJson(const OptimReport& report,
                         const std::filesystem::path& path,
                         bool include_timing) {
  WriteFile(path, [&](std::ostream& out) {
    WriteOptimReportJson(report, out, include_timing);
  });
}

OptimReport ReadOptimReportJson(std::istream& in) {
  const json doc = ParseJson(in);
  CheckVersion(doc, "optreport-json/1");
  OptimReport r;
  try {
    r.lambda_used = doc.at("lambda_used").get<double>();
    r.converged = doc.at("converged").get<bool>();
    r.status = doc.at("status").get<std::string>();
    r.iterations = doc.at("iterations").get<int>();
    r.evaluations = doc.at("evaluations").get<int>();
    r.grad_norm_final = doc.at("grad_norm_final").get<double>();
    for (const json& t : doc.at("loss_trace")) {
      r.loss_trace.push_back(TraceEntry{t.at("iteration").get<int>(),
                                        t.at("total").get<double>(),
                                        t.at("mag_term").get<double>(),
                                        t.at("ild_term").get<double>()});
    }
    if (doc.contains("wall_time_s")) {
      r.wall_time_s = doc.at("wall_time_s").get<double>();
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad optreport: ") + e.what());
  }
  return r;
}

}  // namespace imagls
