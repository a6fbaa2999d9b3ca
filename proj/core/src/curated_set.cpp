#include <algorithm>
#include <fstream>
#include <sstream>

#include "capforge/errors.hpp"
#include "capforge/strategy.hpp"

namespace capforge {

void CuratedSet::normalize() {
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
}

std::string curated_file_name(const StrategySpec& spec) {
  return "curated." + std::string(to_string(spec.name)) + ".jsonl";
}

void write_curated(const std::filesystem::path& path, const CuratedSet& set) {
  nlohmann::ordered_json header;
  header["count"] = set.entries.size();
  header["spec"] = to_json(set.provenance);
  header["tau_used"] = set.tau_used ? nlohmann::ordered_json(*set.tau_used) : nlohmann::ordered_json(nullptr);
  if (set.tau_syn_used) header["tau_syn_used"] = *set.tau_syn_used;

  std::string out = header.dump();
  out += '\n';
  for (const auto& e : set.entries) {
    out += "{\"id\":";
    out += std::to_string(e.id);
    out += ",\"cap\":";
    out += e.caption.is_raw() ? std::string("\"raw\"") : std::to_string(e.caption.variant_index());
    out += "}\n";
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << out;
}

CuratedSet read_curated(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string());
  const std::string name = path.filename().string();

  CuratedSet set;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t declared = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(name + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!have_header) {
      if (!j.is_object() || !j.contains("spec"))
        throw FormatError(name + ": first line must be the header object");
      try {
        set.provenance = strategy_from_json(j.at("spec"));
      } catch (const ConfigError& e) {
        throw FormatError(name + ": bad spec in header: " + e.what());
      }
      if (j.contains("tau_used") && !j.at("tau_used").is_null())
        set.tau_used = j.at("tau_used").get<double>();
      if (j.contains("tau_syn_used") && !j.at("tau_syn_used").is_null())
        set.tau_syn_used = j.at("tau_syn_used").get<double>();
      declared = j.value("count", std::size_t{0});
      have_header = true;
      continue;
    }
    try {
      CuratedEntry entry;
      entry.id = j.at("id").get<RecordId>();
      const auto& cap = j.at("cap");
      if (cap.is_string()) {
        if (cap.get<std::string>() != "raw") throw FormatError("cap must be \"raw\" or an index");
        entry.caption = CaptionChoice::raw();
      } else {
        entry.caption = CaptionChoice::variant(cap.get<std::uint32_t>());
      }
      set.entries.push_back(entry);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw FormatError(name + ": missing header");
  if (declared != set.entries.size())
    throw FormatError(name + ": header count " + std::to_string(declared) + " but " +
                      std::to_string(set.entries.size()) + " entries");
  set.normalize();
  return set;
}

}  // namespace capforge
