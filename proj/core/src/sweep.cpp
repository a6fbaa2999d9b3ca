#include "capforge/binary_io.hpp"
#include "capforge/errors.hpp"
#include "capforge/report.hpp"

namespace capforge {

SweepResult run_sweep(const GenConfig& config_template, std::span<const std::uint64_t> scales,
                      std::span<const StrategySpec> specs, const MetricConfig& config,
                      const std::filesystem::path& work_dir) {
  if (scales.empty()) throw ConfigError("scales", "at least one scale is required");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (scales[i] == 0) throw ConfigError("scales", "scales must be positive");
    if (i > 0 && scales[i] <= scales[i - 1]) throw ConfigError("scales", "scales must be strictly increasing");
    if (scales[i] > kMaxGeneratedRecords)
      throw ConfigError("scales", std::to_string(scales[i]) + " exceeds generator limit " +
                                      std::to_string(kMaxGeneratedRecords));
  }
  for (const auto& spec : specs) spec.validate();

  SweepResult result;
  std::filesystem::create_directories(work_dir);
  for (std::uint64_t scale : scales) {
    GenConfig cfg = config_template;
    cfg.num_records = scale;
    const auto pool_dir = work_dir / ("scale-" + std::to_string(scale));
    generate_pool(cfg, pool_dir, config.workers);
    const PoolHandle handle = open_pool(pool_dir);
    for (auto& row : report_pool(handle, specs, config)) result.rows.push_back({scale, std::move(row)});
  }
  write_file(work_dir / "sweep.csv", sweep_csv(result));
  return result;
}

}  // namespace capforge
