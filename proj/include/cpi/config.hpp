#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "cpi/losses.hpp"
#include "cpi/pipeline.hpp"
#include "cpi/datasynth.hpp"

namespace cpi {

struct Settings {
  InpaintConfig inpaint;
  SynthParams synth;
  LossWeights loss;
};

// Flat `key = value` lines; '#' starts a comment. Throws InvalidArgument on malformed lines
// and duplicate keys.
std::map<std::string, std::string> parse_key_values(const std::string& text);

// Throws InvalidArgument for unknown keys or unparsable values.
void apply_setting(Settings& s, const std::string& key, const std::string& value);
Settings load_settings(const std::filesystem::path& file, Settings base = {});

}  // namespace cpi
