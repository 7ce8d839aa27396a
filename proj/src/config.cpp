#include "cpi/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "cpi/errors.hpp"

namespace cpi {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw InvalidArgument("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw InvalidArgument("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw InvalidArgument("config: '" + key + "' expects true or false, got '" + v + "'");
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(number) + ": empty key");
    if (!out.emplace(key, value).second) throw InvalidArgument("config: duplicate key '" + key + "'");
  }
  return out;
}

void apply_setting(Settings& s, const std::string& key, const std::string& v) {
  InpaintConfig& ic = s.inpaint;
  AlignConfig& ac = ic.align;
  SynthParams& sp = s.synth;
  LossWeights& lw = s.loss;
  if (key == "max_refs") ic.max_refs = static_cast<int>(to_int(key, v));
  else if (key == "ref_stride") ic.ref_stride = v == "auto" ? std::nullopt : std::optional<int>(to_int(key, v));
  else if (key == "bidirectional") ic.bidirectional = to_bool(key, v);
  else if (key == "reference_update") ic.reference_update = to_bool(key, v);
  else if (key == "softmax_mode") ic.softmax_mode = softmax_mode_from_string(v);
  else if (key == "encoder.kind") ic.encoder.kind = encoder_kind_from_string(v);
  else if (key == "encoder.stride") ic.encoder.stride = static_cast<int>(to_int(key, v));
  else if (key == "encoder.channels") ic.encoder.channels = static_cast<int>(to_int(key, v));
  else if (key == "encoder.seed") ic.encoder.seed = static_cast<std::uint64_t>(to_int(key, v));
  else if (key == "encoder.layers") ic.encoder.layers = static_cast<int>(to_int(key, v));
  else if (key == "align.pyramid_levels") ac.pyramid_levels = static_cast<int>(to_int(key, v));
  else if (key == "align.max_iters") ac.max_iters_per_level = static_cast<int>(to_int(key, v));
  else if (key == "align.tolerance") ac.tolerance = to_double(key, v);
  else if (key == "align.charbonnier_eps") ac.charbonnier_eps = to_double(key, v);
  else if (key == "align.init") {
    if (v == "identity") ac.init = AlignInit::kIdentity;
    else if (v == "previous") ac.init = AlignInit::kPrevious;
    else throw InvalidArgument("config: align.init expects identity or previous");
  }
  else if (key == "align.coarse_search") ac.coarse_search = to_bool(key, v);
  else if (key == "align.search_translation") ac.search_translation = to_double(key, v);
  else if (key == "align.search_rotation_deg") ac.search_rotation_deg = to_double(key, v);
  else if (key == "align.search_scale") ac.search_scale = to_double(key, v);
  else if (key == "align.search_candidates") ac.search_candidates = static_cast<int>(to_int(key, v));
  else if (key == "synth.n_frames") sp.n_frames = static_cast<int>(to_int(key, v));
  else if (key == "synth.out_size") sp.out_size = static_cast<int>(to_int(key, v));
  else if (key == "synth.rotation_deg") sp.rotation_deg = to_double(key, v);
  else if (key == "synth.shear_deg") sp.shear_deg = to_double(key, v);
  else if (key == "synth.scale") sp.scale = to_double(key, v);
  else if (key == "synth.translation") sp.translation = to_double(key, v);
  else if (key == "synth.mask_scale_max") sp.mask_scale_max = to_double(key, v);
  else if (key == "synth.mask_rotation_deg") sp.mask_rotation_deg = to_double(key, v);
  else if (key == "synth.mask_translation") sp.mask_translation = to_double(key, v);
  else if (key == "loss.align") lw.align = to_double(key, v);
  else if (key == "loss.hole_visible") lw.hole_visible = to_double(key, v);
  else if (key == "loss.hole_invisible") lw.hole_invisible = to_double(key, v);
  else if (key == "loss.non_hole") lw.non_hole = to_double(key, v);
  else if (key == "loss.perceptual") lw.perceptual = to_double(key, v);
  else if (key == "loss.style") lw.style = to_double(key, v);
  else if (key == "loss.tv") lw.tv = to_double(key, v);
  else throw InvalidArgument("config: unknown key '" + key + "'");
}

Settings load_settings(const std::filesystem::path& file, Settings base) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read config file " + file.string());
  std::ostringstream text;
  text << in.rdbuf();
  for (const auto& [key, value] : parse_key_values(text.str())) apply_setting(base, key, value);
  base.inpaint.validate();
  base.synth.validate();
  base.loss.validate();
  return base;
}

}  // namespace cpi
