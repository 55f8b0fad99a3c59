#ifndef IMAGLS_FORMATS_H_
#define IMAGLS_FORMATS_H_

// JSON file formats: hrtf-json/1, shhrtf-json/1 and optreport-json/1.
// Doubles are written in shortest round-trip form, so reading a file back
// reproduces every value bit for bit.

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "imagls/hrtf_model.h"
#include "imagls/imagls_opt.h"
#include "imagls/sh_core.h"

namespace imagls {

// Writes `weights` and the non-standard `max_exact_order` field alongside
// the required ones.
void WriteHrtfJson(const HrtfSet& hrtf, std::ostream& out);
void SaveHrtfJson(const HrtfSet& hrtf, const std::filesystem::path& path);

// Without `weights` in the file, weights and exact order come from
// `weight_grid` (directions must match within 1e-9 rad); without either the
// set gets uniform weights and max_exact_order = -1 (usable as an evaluation
// target only). With weights but no `max_exact_order`, the order is inferred
// by the Gram check.
HrtfSet ReadHrtfJson(std::istream& in,
                     const std::optional<SphericalGrid>& weight_grid = {});
HrtfSet LoadHrtfJson(const std::filesystem::path& path,
                     const std::optional<SphericalGrid>& weight_grid = {});

void WriteShHrtfJson(const ShHrtf& hrtf, std::ostream& out);
void SaveShHrtfJson(const ShHrtf& hrtf, const std::filesystem::path& path);
ShHrtf ReadShHrtfJson(std::istream& in);
ShHrtf LoadShHrtfJson(const std::filesystem::path& path);

// `wall_time_s` is written only when `include_timing` is set, keeping
// default outputs reproducible byte for byte.
void WriteOptimReportJson(const OptimReport& report, std::ostream& out,
                          bool include_timing = false);
void SaveOptimReportJson(const OptimReport& report,
                         const std::filesystem::path& path,
                         bool include_timing = false);
OptimReport ReadOptimReportJson(std::istream& in);

}  // namespace imagls

#endif  // IMAGLS_FORMATS_H_
