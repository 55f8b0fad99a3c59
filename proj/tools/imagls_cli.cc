// imagls: generate reference HRTFs, encode them at low SH order (LS, MagLS,
// MagLS+CC, iMagLS) and emit ILD / magnitude-error reports.
//
// Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include <cstring>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "imagls/errors.h"
#include "imagls/formats.h"
#include "imagls/pipeline.h"

namespace {

using imagls::PipelineConfig;

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

// --config is read before the other flags so that flags override it.
PipelineConfig ConfigFromArgs(int argc, char** argv) {
  PipelineConfig config;
  for (int i = 1; i < argc; ++i) {
    std::string path;
    if (std::strcmp(argv[i], "--config") == 0 && i + 1 < argc) {
      path = argv[i + 1];
    } else if (std::strncmp(argv[i], "--config=", 9) == 0) {
      path = argv[i] + 9;
    }
    if (path.empty()) continue;
    std::ifstream in(path);
    if (!in) throw imagls::ValidationError("cannot open config " + path);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw imagls::ValidationError(std::string("bad config JSON: ") + e.what());
    }
    config = imagls::PipelineConfigFromJson(doc, config);
  }
  return config;
}

void AddCommonOptions(CLI::App* app, PipelineConfig* c, std::string* lambda,
                      std::string* optimizer) {
  app->add_option("--config", "JSON config; flags override its values");
  app->add_option("--hrtf-file", c->hrtf_file,
                  "reference hrtf-json/1 file (default: rigid sphere)");
  app->add_option("--radius-m", c->sphere.radius_m, "sphere radius");
  app->add_option("--speed-of-sound-mps", c->sphere.speed_of_sound_mps);
  app->add_option("--series-order", c->sphere.series_order);
  app->add_option("--grid-order", c->grid_order, "Gauss-Legendre grid order");
  app->add_option("--grid-file", c->grid_file, "sphgrid v1 file");
  app->add_option("--freq-start-hz", c->freq_start_hz);
  app->add_option("--freq-step-hz", c->freq_step_hz);
  app->add_option("--freq-count", c->freq_count);
  app->add_option("--low-order", c->low_order);
  app->add_option("--reference-order", c->reference_order);
  app->add_option("--magls-cutoff-hz", c->magls.cutoff_hz);
  app->add_option("--lambda", *lambda, "ILD weight, or 'auto'");
  app->add_option("--band-lo-hz", c->imagls.band_lo_hz);
  app->add_option("--band-hi-hz", c->imagls.band_hi_hz);
  app->add_option("--smooth-eps-db", c->imagls.smooth_eps_db);
  app->add_option("--max-iters", c->imagls.max_iters);
  app->add_option("--grad-tol", c->imagls.grad_tol);
  app->add_option("--optimizer", *optimizer, "bfgs or lbfgs")
      ->check(CLI::IsMember({"bfgs", "lbfgs"}));
  app->add_option("--lbfgs-memory", c->imagls.lbfgs_memory);
  app->add_option("--gammatone-f1-hz", c->gammatone_f1_hz);
  app->add_option("--gammatone-f2-hz", c->gammatone_f2_hz);
  app->add_option("--gammatone-order", c->gammatone_order);
  app->add_option("--azimuth-count", c->azimuth_count);
  app->add_option("--out-dir", c->out_dir);
  app->add_flag("--record-timing", c->record_timing,
                "write wall time into the optimization report");
}

void ApplyStringOptions(PipelineConfig* c, const std::string& lambda,
                        const std::string& optimizer) {
  if (!lambda.empty()) {
    nlohmann::json patch;
    if (lambda == "auto") {
      patch["lambda"] = "auto";
    } else {
      try {
        std::size_t used = 0;
        patch["lambda"] = std::stod(lambda, &used);
        if (used != lambda.size()) throw std::invalid_argument(lambda);
      } catch (const std::exception&) {
        throw imagls::ValidationError("--lambda must be a number or 'auto'");
      }
    }
    *c = imagls::PipelineConfigFromJson(patch, *c);
  }
  if (!optimizer.empty()) {
    *c = imagls::PipelineConfigFromJson({{"optimizer", optimizer}}, *c);
  }
}

void WarnIfNotConverged(const imagls::OptimReport& report) {
  if (!report.converged) {
    std::cerr << "warning: iMagLS stopped without converging (" << report.status
              << ", " << report.iterations << " iterations, |g|_inf = "
              << report.grad_norm_final << ")\n";
  }
}

int Run(int argc, char** argv) {
  PipelineConfig config = ConfigFromArgs(argc, argv);
  std::string lambda;
  std::string optimizer;

  CLI::App app{"HRTF spherical-harmonics encoding with MagLS and iMagLS"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  CLI::App* generate = app.add_subcommand("generate", "write the rigid-sphere reference");
  std::string generate_out;
  AddCommonOptions(generate, &config, &lambda, &optimizer);
  generate->add_option("--out", generate_out,
                       "output file (default <out-dir>/reference.hrtf.json)");

  CLI::App* encode = app.add_subcommand("encode", "encode a reference at low order");
  std::string method;
  std::string reference_path;
  AddCommonOptions(encode, &config, &lambda, &optimizer);
  encode->add_option("--method", method, "ls, magls, magls-cc or imagls")
      ->required()
      ->check(CLI::IsMember({"ls", "magls", "magls-cc", "imagls"}));
  encode->add_option("--reference", reference_path,
                     "hrtf-json/1 reference (default: build from config)");

  CLI::App* evaluate = app.add_subcommand("evaluate", "ILD and magnitude reports");
  std::vector<std::string> encoded_paths;
  AddCommonOptions(evaluate, &config, &lambda, &optimizer);
  evaluate->add_option("--reference", reference_path, "hrtf-json/1 reference");
  evaluate->add_option("--encoded", encoded_paths, "shhrtf-json/1 files")
      ->required();

  CLI::App* run_all = app.add_subcommand("run-all", "generate, encode all, evaluate");
  AddCommonOptions(run_all, &config, &lambda, &optimizer);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  ApplyStringOptions(&config, lambda, optimizer);
  if (!reference_path.empty()) config.hrtf_file = reference_path;

  const std::filesystem::path out_dir = config.out_dir;
  if (generate->parsed()) {
    const imagls::HrtfSet ref = imagls::BuildReference(config);
    const std::filesystem::path out =
        generate_out.empty() ? out_dir / "reference.hrtf.json"
                             : std::filesystem::path(generate_out);
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    imagls::SaveHrtfJson(ref, out);
    std::cout << out.string() << '\n';
  } else if (encode->parsed()) {
    const imagls::HrtfSet ref = imagls::BuildReference(config);
    const imagls::Method m = imagls::ParseMethod(method);
    const imagls::EncodeResult r = imagls::Encode(config, ref, m);
    std::filesystem::create_directories(out_dir);
    const auto out = out_dir / (method + ".shhrtf.json");
    imagls::SaveShHrtfJson(r.hrtf, out);
    std::cout << out.string() << '\n';
    if (r.report) {
      const auto report_out = out_dir / "imagls.optreport.json";
      imagls::SaveOptimReportJson(*r.report, report_out, config.record_timing);
      std::cout << report_out.string() << '\n';
      WarnIfNotConverged(*r.report);
    }
  } else if (evaluate->parsed()) {
    const imagls::HrtfSet ref = imagls::BuildReference(config);
    std::vector<imagls::ShHrtf> encoded;
    for (const std::string& p : encoded_paths) {
      encoded.push_back(imagls::LoadShHrtfJson(p));
    }
    const imagls::EvaluationSummary s =
        imagls::Evaluate(config, ref, encoded, out_dir);
    for (const imagls::MethodSummary& m : s.methods) {
      std::cout << m.name << ": ILD error " << m.ild_error_mean_db
                << " dB, magnitude error " << m.mag_error_band_mean_db << " dB\n";
    }
  } else if (run_all->parsed()) {
    const imagls::RunAllResult r = imagls::RunAll(config);
    for (const imagls::MethodSummary& m : r.summary.methods) {
      std::cout << m.name << ": ILD error " << m.ild_error_mean_db
                << " dB, magnitude error " << m.mag_error_band_mean_db << " dB\n";
    }
    if (r.summary.mag_penalty_db) {
      std::cout << "iMagLS magnitude penalty vs MagLS: "
                << *r.summary.mag_penalty_db << " dB\n";
    }
    WarnIfNotConverged(r.imagls_report);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return Run(argc, argv);
  } catch (const imagls::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const imagls::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
