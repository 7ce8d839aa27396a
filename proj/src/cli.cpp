#include "cpi/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <ostream>
#include <random>

#include "cpi/config.hpp"
#include "cpi/datasynth.hpp"
#include "cpi/errors.hpp"
#include "cpi/eval.hpp"
#include "cpi/media.hpp"
#include "cpi/pipeline.hpp"

namespace fs = std::filesystem;

namespace cpi {

namespace {

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << text;
  if (!out) throw IoError("failed writing " + file.string());
}

Settings settings_from(const std::string& config) {
  return config.empty() ? Settings{} : load_settings(config);
}

struct InpaintArgs {
  std::string frames, masks, out, config, softmax, report;
  bool no_bidirectional = false;
  bool no_ref_update = false;
};

int do_inpaint(const InpaintArgs& a, std::ostream& out) {
  Settings s = settings_from(a.config);
  InpaintConfig& cfg = s.inpaint;
  if (a.no_bidirectional) cfg.bidirectional = false;
  if (a.no_ref_update) cfg.reference_update = false;
  if (!a.softmax.empty()) cfg.softmax_mode = softmax_mode_from_string(a.softmax);
  cfg.validate();
  const VideoClip clip = load_clip(a.frames, a.masks);
  const InpaintOutput result = inpaint_video(clip, cfg);
  save_clip(result.clip, a.out);
  for (const FrameReport& f : result.report.frames) {
    int used = 0;
    for (const ReferenceEntry& r : f.refs) used += r.usable ? 1 : 0;
    char line[128];
    std::snprintf(line, sizeof line, "frame %d: %d/%zu references, never-visible %.4f\n", f.frame, used,
                  f.refs.size(), f.invisible_fraction);
    out << line;
  }
  if (!a.report.empty()) write_text(a.report, report_to_csv(result.report));
  return kExitOk;
}

struct SynthArgs {
  std::string images, object_masks, out, config;
  std::uint64_t seed = 0;
};

int do_synth(const SynthArgs& a, std::ostream& out) {
  Settings s = settings_from(a.config);
  SynthParams p = s.synth;
  p.seed = a.seed;
  p.validate();
  std::mt19937_64 rng(p.seed);
  std::string source_name = "procedural";
  std::string mask_name = "procedural";
  Frame source;
  if (!a.images.empty()) {
    const auto files = list_images(a.images);
    if (files.empty()) throw IoError("no images found in " + a.images);
    const fs::path pick = files[std::uniform_int_distribution<std::size_t>(0, files.size() - 1)(rng)];
    source = read_frame(pick);
    source_name = pick.filename().string();
  } else {
    source = procedural_source(p.out_size + 64, p.out_size + 64, p.seed);
  }
  HoleMask object;
  if (!a.object_masks.empty()) {
    const auto files = list_images(a.object_masks);
    if (files.empty()) throw IoError("no object masks found in " + a.object_masks);
    const fs::path pick = files[std::uniform_int_distribution<std::size_t>(0, files.size() - 1)(rng)];
    object = read_mask(pick);
    mask_name = pick.filename().string();
  } else {
    object = procedural_object_mask(128, p.seed + 1);
  }
  const Background bg = synth_background(source, p, rng);
  const auto masks = synth_mask_sequence(object, p, rng);
  const SynthClip clip = composite_holes(bg.frames, masks);
  const fs::path root(a.out);
  save_clip(clip.input, root / "input_frames", root / "input_masks");
  save_clip(clip.truth, root / "truth_frames");
  write_text(root / "manifest.txt",
             synth_manifest(p) + "source=" + source_name + "\nobject_mask=" + mask_name + "\n");
  out << "wrote " << clip.input.size() << " frames to " << a.out << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string pred, truth, masks, out;
};

int do_eval(const EvalArgs& a, std::ostream& out) {
  const VideoClip pred = load_frames(a.pred);
  const VideoClip truth = a.masks.empty() ? load_frames(a.truth) : load_clip(a.truth, a.masks);
  if (pred.size() != truth.size()) throw IoError("prediction and truth frame counts differ");
  if (pred.height() != truth.height() || pred.width() != truth.width()) {
    throw IoError("prediction and truth frame dimensions differ");
  }
  const auto rows = evaluate_clip(pred, truth, truth.masks);
  const std::string csv = metrics_to_csv(rows);
  write_text(a.out, csv);
  out << csv.substr(csv.rfind("mean,"));
  return kExitOk;
}

struct AlignArgs {
  std::string target, ref, mask_t, mask_r, out;
};

int do_align_debug(const AlignArgs& a, std::ostream& out) {
  const Frame target = read_frame(a.target);
  const Frame ref = read_frame(a.ref);
  if (!target.same_shape(ref)) throw InvalidArgument("target and reference dimensions differ");
  const auto vis = [&](const std::string& file) {
    return file.empty() ? VisibilityMap(target.height(), target.width(), 1.0, true)
                        : mask_to_visibility(read_mask(file));
  };
  const AlignResult res = estimate_affine(target, vis(a.mask_t), ref, vis(a.mask_r), AlignConfig{});
  write_text(a.out, trace_to_csv(res.trace));
  char line[256];
  std::snprintf(line, sizeof line, "affine %.6f %.6f %.6f %.6f %.6f %.6f objective %.6f (initial %.6f)\n",
                res.params.a11, res.params.a12, res.params.a21, res.params.a22, res.params.tx, res.params.ty,
                res.objective, res.initial_objective);
  out << line;
  return kExitOk;
}

struct ProfileArgs {
  std::string frames, out;
  int row = 0;
};

int do_profile(const ProfileArgs& a, std::ostream&) {
  const VideoClip clip = load_frames(a.frames);
  write_frame(Frame(temporal_profile(clip, a.row)), a.out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Copy-and-paste video inpainting", "cpi"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);

  InpaintArgs ia;
  auto* inpaint = app.add_subcommand("inpaint", "Complete the holes of a frame sequence");
  inpaint->add_option("--frames", ia.frames, "Frame directory")->required();
  inpaint->add_option("--masks", ia.masks, "Mask directory (white = hole)")->required();
  inpaint->add_option("--out", ia.out, "Output directory")->required();
  inpaint->add_option("--config", ia.config, "key = value config file");
  inpaint->add_flag("--no-bidirectional", ia.no_bidirectional, "Forward pass only");
  inpaint->add_flag("--no-ref-update", ia.no_ref_update, "Do not reuse completed frames as references");
  inpaint->add_option("--softmax", ia.softmax, "masked or normal")->check(CLI::IsMember({"masked", "normal"}));
  inpaint->add_option("--report", ia.report, "Per-frame CSV report");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a holed clip and its ground truth");
  synth->add_option("--images", sa.images, "Still image directory (default: procedural texture)");
  synth->add_option("--object-masks", sa.object_masks, "Object mask directory (default: procedural blob)");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--seed", sa.seed, "Random seed")->required();
  synth->add_option("--config", sa.config, "key = value config file");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "PSNR and SSIM against ground truth");
  eval->add_option("--pred", ea.pred, "Predicted frame directory")->required();
  eval->add_option("--truth", ea.truth, "Ground-truth frame directory")->required();
  eval->add_option("--masks", ea.masks, "Hole masks for hole-region PSNR");
  eval->add_option("--out", ea.out, "CSV output file")->required();

  AlignArgs aa;
  auto* align = app.add_subcommand("align-debug", "Estimate one affine alignment and dump its trace");
  align->add_option("--target", aa.target, "Target frame")->required();
  align->add_option("--ref", aa.ref, "Reference frame")->required();
  align->add_option("--mask-t", aa.mask_t, "Target hole mask");
  align->add_option("--mask-r", aa.mask_r, "Reference hole mask");
  align->add_option("--out", aa.out, "Trace CSV output")->required();

  ProfileArgs pa;
  auto* profile = app.add_subcommand("profile", "Temporal profile of one pixel row");
  profile->add_option("--frames", pa.frames, "Frame directory")->required();
  profile->add_option("--row", pa.row, "Row index")->required();
  profile->add_option("--out", pa.out, "PNG output")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "cpi: " << e.what() << "\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    out << sub->help();
    return kExitUsage;
  }

  if (threads > 0) omp_set_num_threads(threads);
  try {
    if (inpaint->parsed()) return do_inpaint(ia, out);
    if (synth->parsed()) return do_synth(sa, out);
    if (eval->parsed()) return do_eval(ea, out);
    if (align->parsed()) return do_align_debug(aa, out);
    return do_profile(pa, out);
  } catch (const InvalidArgument& e) {
    err << "cpi: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "cpi: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "cpi: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericError& e) {
    err << "cpi: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "cpi: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace cpi
